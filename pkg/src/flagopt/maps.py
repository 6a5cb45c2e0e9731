"""Nice primal algorithmic maps and their certificates.

A primal map takes (z, lambda) to z+ under the schedule (rho_t, tau_t) and is
*nice* with certificate (delta, P, Q) when, for every feasible xi,

    L_{rho_t}(z+, lambda) - L_{rho_t}(xi, lambda)
        <= tau_t Delta_P(xi, z, z+) - (tau_t/2) ||z+ - z||_Q^2
           - (sigma/2) ||xi - z+||^2 - (delta rho_t / 2) ||A z+ - b||^2.

Two-block maps use the block form of the inequality: the alternating
(Gauss-Seidel) family weights only the second block by tau_t and exploits
only sigma_g, while the symmetric family (Jacobi-style and fully linearized
maps) weights both blocks by tau_t and keeps both sigma terms. nice_residual
evaluates left minus right numerically; certificates are produced exactly per
each map's closed-form (delta, P, Q) with every spectral margin recorded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ConfigError, NotNiceError
from .lagrangian import delta_P, eval_aug_lagrangian, quad_norm
from .problems import (
    BlockProblem,
    ConstrainedProblem,
    constraint_map,
    flatten_block,
    nonsmooth_parts,
    scipy_block_diag,
)
from .prox import argmin_composite

SINGLE_KINDS = ("prox-al", "prox-lin-al", "smooth-prox-al", "smooth-lin-al")
ADMM_KINDS = ("prox-admm", "prox-lin-admm", "chambolle-pock")
SYMMETRIC_KINDS = ("prox-jacobi", "pcpm", "full-lin-admm")
MAP_KINDS = SINGLE_KINDS + ADMM_KINDS + SYMMETRIC_KINDS
SMOOTH_KINDS = ("smooth-prox-al", "smooth-lin-al")
PSD_TOL = 1e-10


def residual_family(kind):
    if kind in SINGLE_KINDS:
        return "single"
    if kind in ADMM_KINDS:
        return "admm"
    if kind in SYMMETRIC_KINDS:
        return "symmetric"
    raise ConfigError(f"unknown map kind {kind!r} (choose from {', '.join(MAP_KINDS)})")


@dataclass(frozen=True)
class ScheduleParams:
    """Per-iteration schedule: rho_t = rho t^{p-1}, tau_t = t^{p-1}."""

    rho_t: float
    tau_t: float
    p: int

    def __post_init__(self):
        if self.p not in (1, 2):
            raise ConfigError("p must be 1 or 2")
        if self.p == 1 and self.tau_t != 1.0:
            raise ConfigError("p = 1 requires tau_t = 1")
        if self.rho_t <= 0 or self.tau_t <= 0:
            raise ConfigError("schedule scalars must be positive")


def schedule_at(rho, t, p):
    """Schedule values at sequence value t."""
    if t < 1.0 - 1e-12:
        raise ConfigError("t must be >= 1")
    if p == 1:
        return ScheduleParams(rho_t=float(rho), tau_t=1.0, p=1)
    return ScheduleParams(rho_t=float(rho) * float(t), tau_t=float(t), p=2)


@dataclass(frozen=True)
class MapConfig:
    """Map kind plus its proximal weight data and base penalty rho."""

    kind: str
    rho: float
    M: np.ndarray | None = None
    M1: np.ndarray | None = None
    M2: np.ndarray | None = None
    alpha: float | None = None

    def __post_init__(self):
        residual_family(self.kind)
        if self.rho <= 0:
            raise ConfigError("base penalty rho must be positive")
        for name in ("M", "M1", "M2"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, linalg.check_psd(val, name))
        if self.alpha is not None and self.alpha <= 0:
            raise ConfigError("alpha must be positive")


@dataclass(frozen=True)
class Condition:
    """A named spectral condition with its evaluated margin; strict conditions
    require margin > 0, semidefinite ones allow margin >= -1e-10."""

    name: str
    margin: float
    strict: bool = True

    def holds(self):
        return self.margin > 0 if self.strict else self.margin >= -PSD_TOL


@dataclass(frozen=True)
class NiceCertificate:
    kind: str
    delta: float
    P: np.ndarray
    Q: np.ndarray
    conditions: tuple
    P1: np.ndarray | None = None
    P2: np.ndarray | None = None
    Q1: np.ndarray | None = None
    Q2: np.ndarray | None = None

    @property
    def family(self):
        return residual_family(self.kind)


def _single_problem(prob):
    if isinstance(prob, BlockProblem):
        return flatten_block(prob)
    if isinstance(prob, ConstrainedProblem):
        return prob
    raise ConfigError(f"unsupported problem type {type(prob).__name__}")


def _block_problem(prob, kind):
    if not isinstance(prob, BlockProblem):
        raise ConfigError(f"{kind} requires a two-block problem")
    return prob


def _weight(cfg, name, dim):
    M = getattr(cfg, name)
    if M is None:
        raise ConfigError(f"{cfg.kind} requires weight matrix {name}")
    if M.shape[0] != dim:
        raise ConfigError(
            f"{cfg.kind}: {name} has dimension {M.shape[0]}, expected {dim}"
        )
    return M


def _check_exact_solvable(term, pattern, context):
    """Exact-minimization subproblems with nonsmooth terms need a diagonal
    effective Hessian on the nonsmooth coordinates (and no cross coupling)."""
    for part, s in nonsmooth_parts(term):
        block = pattern[s, s]
        coupling = pattern[s, :].copy()
        coupling[:, s] = 0.0
        if not linalg.is_diagonal(block) or np.count_nonzero(coupling) != 0:
            raise ConfigError(
                f"{context}: exact minimization needs a diagonal effective "
                "Hessian on the nonsmooth coordinates; use the linearized map variant"
            )


def _gram(M):
    return M.T @ M


def certificate(cfg, prob):
    """Exact (delta, P, Q) certificate of the map on this problem.

    Raises NotNiceError naming the violated spectral condition when the map
    cannot be certified with the given weights and base rho.
    """
    kind = cfg.kind
    rho = cfg.rho
    conds = []

    if kind in SINGLE_KINDS:
        sp = _single_problem(prob)
        n = sp.n
        M = _weight(cfg, "M", n)
        AtA = _gram(sp.A)
        if kind in SMOOTH_KINDS:
            if sp.smooth is None:
                raise ConfigError(f"{kind} requires a smooth objective part")
            if sp.smooth.term.strong_convexity != 0.0:
                raise ConfigError(
                    f"{kind} handles the smooth part by gradient linearization; "
                    "its declared strong-convexity contribution must be zero"
                )
            L = sp.smooth.lipschitz_grad
        if kind == "prox-al":
            conds.append(Condition("lambda_min(M) >= 0", linalg.lambda_min(M), strict=False))
            P, Q = M, M
            pattern = rho * AtA + M
            if sp.smooth is not None:
                pattern = pattern + sp.smooth.term.H
            _check_exact_solvable(sp.f, pattern, kind)
        elif kind == "prox-lin-al":
            P = M - rho * AtA
            conds.append(
                Condition("lambda_min(M - rho A'A) >= 0", linalg.lambda_min(P), strict=False)
            )
            Q = P
        elif kind == "smooth-prox-al":
            P = M
            Q = M - L * np.eye(n)
            conds.append(
                Condition("lambda_min(M - L I) >= 0", linalg.lambda_min(Q), strict=False)
            )
            _check_exact_solvable(sp.f, rho * AtA + M, kind)
        else:  # smooth-lin-al
            P = M - rho * AtA
            Q = P - L * np.eye(n)
            conds.append(
                Condition(
                    "lambda_min(M - rho A'A - L I) >= 0", linalg.lambda_min(Q), strict=False
                )
            )
        delta = 1.0
        cert = NiceCertificate(kind=kind, delta=delta, P=P, Q=Q, conditions=tuple(conds))
        return _validated(cert)

    bp = _block_problem(prob, kind)
    n1, n2 = bp.n1, bp.n2
    AtA = _gram(bp.A)
    BtB = _gram(bp.B)
    lamA = linalg.lambda_max(AtA)
    lamB = linalg.lambda_max(BtB)

    if kind == "chambolle-pock":
        if n1 != bp.m or np.max(np.abs(bp.A - np.eye(bp.m)), initial=0.0) > 1e-12:
            raise ConfigError("chambolle-pock requires the first block map A = I")
        if cfg.alpha is None:
            raise ConfigError("chambolle-pock requires alpha")
        alpha = cfg.alpha
        delta = 1.0 - rho * alpha * lamB
        conds.append(Condition("1 - rho alpha lambda_max(B'B) > 0", delta))
        P1 = np.zeros((n1, n1))
        Q1 = np.zeros((n1, n1))
        P2 = np.eye(n2) / alpha
        Q2 = np.zeros((n2, n2))
        _check_exact_solvable(bp.f_term, rho * np.eye(n1), kind + " first block")
    elif kind == "prox-admm":
        M1 = _weight(cfg, "M1", n1)
        M2 = _weight(cfg, "M2", n2)
        lam2 = linalg.lambda_min(M2)
        conds.append(Condition("lambda_min(M1) >= 0", linalg.lambda_min(M1), strict=False))
        conds.append(Condition("lambda_min(M2) > 0", lam2))
        delta = 1.0 - rho * lamB / (rho * lamB + lam2) if lam2 > 0 else 0.0
        P1, Q1 = M1, M1
        P2 = M2 + rho * BtB
        Q2 = np.zeros((n2, n2))
        _check_exact_solvable(bp.f_term, rho * AtA + M1, kind + " first block")
        _check_exact_solvable(bp.g_term, rho * BtB + M2, kind + " second block")
    elif kind == "prox-lin-admm":
        M1 = _weight(cfg, "M1", n1)
        M2 = _weight(cfg, "M2", n2)
        lam2 = linalg.lambda_min(M2)
        conds.append(Condition("lambda_min(M1) >= 0", linalg.lambda_min(M1), strict=False))
        conds.append(Condition("lambda_min(M2) - rho lambda_max(B'B) > 0", lam2 - rho * lamB))
        delta = 1.0 - rho * lamB / lam2 if lam2 > 0 else 0.0
        P1, Q1 = M1, M1
        P2 = M2
        Q2 = np.zeros((n2, n2))
        _check_exact_solvable(bp.f_term, rho * AtA + M1, kind + " first block")
    elif kind == "prox-jacobi":
        M1 = _weight(cfg, "M1", n1)
        M2 = _weight(cfg, "M2", n2)
        lam1 = linalg.lambda_min(M1)
        lam2 = linalg.lambda_min(M2)
        conds.append(Condition("lambda_min(M1) - rho lambda_max(A'A) > 0", lam1 - rho * lamA))
        conds.append(Condition("lambda_min(M2) - rho lambda_max(B'B) > 0", lam2 - rho * lamB))
        a1 = rho * lamA / (rho * lamA + lam1) if rho * lamA + lam1 > 0 else 1.0
        a2 = rho * lamB / (rho * lamB + lam2) if rho * lamB + lam2 > 0 else 1.0
        delta = 1.0 - 2.0 * max(a1, a2)
        P1 = M1 + rho * AtA
        P2 = M2 + rho * BtB
        Q1 = np.zeros((n1, n1))
        Q2 = np.zeros((n2, n2))
        _check_exact_solvable(bp.f_term, rho * AtA + M1, kind + " first block")
        _check_exact_solvable(bp.g_term, rho * BtB + M2, kind + " second block")
    elif kind == "pcpm":
        M1 = _weight(cfg, "M1", n1)
        M2 = _weight(cfg, "M2", n2)
        if (bp.sigma_f > 0) != (bp.sigma_g > 0):
            raise ConfigError(
                "pcpm treats both blocks the same: sigma_f and sigma_g must "
                "share the regime (both zero or both positive)"
            )
        lam1 = linalg.lambda_min(M1)
        lam2 = linalg.lambda_min(M2)
        conds.append(Condition("lambda_min(M1) - 2 rho lambda_max(A'A) > 0", lam1 - 2 * rho * lamA))
        conds.append(Condition("lambda_min(M2) - 2 rho lambda_max(B'B) > 0", lam2 - 2 * rho * lamB))
        a1 = rho * lamA / lam1 if lam1 > 0 else 1.0
        a2 = rho * lamB / lam2 if lam2 > 0 else 1.0
        delta = 1.0 - 2.0 * max(a1, a2)
        P1, P2 = M1, M2
        Q1 = np.zeros((n1, n1))
        Q2 = np.zeros((n2, n2))
    else:  # full-lin-admm: both blocks linearize the penalty, Gauss-Seidel order
        M1 = _weight(cfg, "M1", n1)
        M2 = _weight(cfg, "M2", n2)
        lam2 = linalg.lambda_min(M2)
        P1 = M1 - rho * AtA
        conds.append(
            Condition("lambda_min(M1 - rho A'A) >= 0", linalg.lambda_min(P1), strict=False)
        )
        conds.append(Condition("lambda_min(M2) - rho lambda_max(B'B) > 0", lam2 - rho * lamB))
        delta = 1.0 - rho * lamB / lam2 if lam2 > 0 else 0.0
        Q1 = P1
        P2 = M2
        Q2 = np.zeros((n2, n2))

    cert = NiceCertificate(
        kind=kind,
        delta=delta,
        P=scipy_block_diag([P1, P2]),
        Q=scipy_block_diag([Q1, Q2]),
        conditions=tuple(conds),
        P1=P1,
        P2=P2,
        Q1=Q1,
        Q2=Q2,
    )
    return _validated(cert)


def _validated(cert):
    for cond in cert.conditions:
        if not cond.holds():
            raise NotNiceError(
                f"{cert.kind} is not certified: {cond.name} fails "
                f"(margin {cond.margin:.6e})"
            )
    if not 0.0 < cert.delta <= 1.0 + 1e-12:
        raise NotNiceError(
            f"{cert.kind} is not certified: delta = {cert.delta:.6e} outside (0, 1]"
        )
    for name in ("P", "Q", "P1", "P2", "Q1", "Q2"):
        M = getattr(cert, name)
        if M is not None:
            linalg.check_psd(M, f"certificate {name}")
    return cert


def prim_step(cfg, sched, z, lam, prob):
    """One primal update z+ from (z, lambda) under the given schedule."""
    kind = cfg.kind
    rho_t, tau_t = sched.rho_t, sched.tau_t
    z = np.asarray(z, dtype=float)
    lam = np.asarray(lam, dtype=float)

    if kind in SINGLE_KINDS:
        sp = _single_problem(prob)
        if z.shape != (sp.n,) or lam.shape != (sp.m,):
            raise ConfigError("prim_step dimension mismatch")
        A, b = sp.A, sp.b
        M = _weight(cfg, "M", sp.n)
        if kind == "prox-al":
            V = rho_t * _gram(A) + tau_t * M
            g = A.T @ lam - rho_t * (A.T @ b) - tau_t * (M @ z)
            if sp.smooth is not None:
                V = V + sp.smooth.term.H
                g = g + sp.smooth.term.q
        elif kind == "prox-lin-al":
            V = tau_t * M
            g = A.T @ (lam + rho_t * (A @ z - b)) - tau_t * (M @ z)
            if sp.smooth is not None:
                V = V + sp.smooth.term.H
                g = g + sp.smooth.term.q
        elif kind == "smooth-prox-al":
            V = rho_t * _gram(A) + tau_t * M
            g = A.T @ lam - rho_t * (A.T @ b) + sp.grad_smooth(z) - tau_t * (M @ z)
        else:  # smooth-lin-al
            V = tau_t * M
            g = A.T @ (lam + rho_t * (A @ z - b)) + sp.grad_smooth(z) - tau_t * (M @ z)
        return argmin_composite(sp.f, g, V, name=kind)

    bp = _block_problem(prob, kind)
    if z.shape != (bp.n1 + bp.n2,) or lam.shape != (bp.m,):
        raise ConfigError("prim_step dimension mismatch")
    u, v = bp.split(z)
    A, B, b = bp.A, bp.B, bp.b

    if kind == "chambolle-pock":
        V1 = rho_t * np.eye(bp.n1)
        g1 = lam + rho_t * (B @ v - b)
        u_new = argmin_composite(bp.f_term, g1, V1, name=kind + " first block")
        W2 = (tau_t / cfg.alpha) * np.eye(bp.n2)
        g2 = B.T @ (lam + rho_t * (u_new + B @ v - b)) - W2 @ v
        v_new = argmin_composite(bp.g_term, g2, W2, name=kind + " second block")
    elif kind == "prox-admm":
        M1 = _weight(cfg, "M1", bp.n1)
        M2 = _weight(cfg, "M2", bp.n2)
        V1 = rho_t * _gram(A) + M1
        g1 = A.T @ lam + rho_t * (A.T @ (B @ v - b)) - M1 @ u
        u_new = argmin_composite(bp.f_term, g1, V1, name=kind + " first block")
        V2 = rho_t * _gram(B) + tau_t * M2
        g2 = B.T @ lam + rho_t * (B.T @ (A @ u_new - b)) - tau_t * (M2 @ v)
        v_new = argmin_composite(bp.g_term, g2, V2, name=kind + " second block")
    elif kind == "prox-lin-admm":
        M1 = _weight(cfg, "M1", bp.n1)
        M2 = _weight(cfg, "M2", bp.n2)
        V1 = rho_t * _gram(A) + M1
        g1 = A.T @ lam + rho_t * (A.T @ (B @ v - b)) - M1 @ u
        u_new = argmin_composite(bp.f_term, g1, V1, name=kind + " first block")
        W2 = tau_t * M2
        g2 = B.T @ (lam + rho_t * (A @ u_new + B @ v - b)) - W2 @ v
        v_new = argmin_composite(bp.g_term, g2, W2, name=kind + " second block")
    elif kind == "prox-jacobi":
        M1 = _weight(cfg, "M1", bp.n1)
        M2 = _weight(cfg, "M2", bp.n2)
        V1 = rho_t * _gram(A) + tau_t * M1
        g1 = A.T @ lam + rho_t * (A.T @ (B @ v - b)) - tau_t * (M1 @ u)
        u_new = argmin_composite(bp.f_term, g1, V1, name=kind + " first block")
        V2 = rho_t * _gram(B) + tau_t * M2
        g2 = B.T @ lam + rho_t * (B.T @ (A @ u - b)) - tau_t * (M2 @ v)
        v_new = argmin_composite(bp.g_term, g2, V2, name=kind + " second block")
    elif kind == "pcpm":
        M1 = _weight(cfg, "M1", bp.n1)
        M2 = _weight(cfg, "M2", bp.n2)
        lam_hat = lam + rho_t * (A @ u + B @ v - b)
        u_new = argmin_composite(
            bp.f_term, A.T @ lam_hat - tau_t * (M1 @ u), tau_t * M1, name=kind + " first block"
        )
        v_new = argmin_composite(
            bp.g_term, B.T @ lam_hat - tau_t * (M2 @ v), tau_t * M2, name=kind + " second block"
        )
    else:  # full-lin-admm
        M1 = _weight(cfg, "M1", bp.n1)
        M2 = _weight(cfg, "M2", bp.n2)
        g1 = A.T @ (lam + rho_t * (A @ u + B @ v - b)) - tau_t * (M1 @ u)
        u_new = argmin_composite(bp.f_term, g1, tau_t * M1, name=kind + " first block")
        g2 = B.T @ (lam + rho_t * (A @ u_new + B @ v - b)) - tau_t * (M2 @ v)
        v_new = argmin_composite(bp.g_term, g2, tau_t * M2, name=kind + " second block")

    return np.concatenate([u_new, v_new])


def nice_parts(cfg, sched, z, lam, xi, prob, cert=None, z_next=None, delta=None):
    """(residual, scale) of the niceness inequality at one sampled tuple."""
    if cert is None:
        cert = certificate(cfg, prob)
    if delta is None:
        delta = cert.delta
    z = np.asarray(z, dtype=float)
    xi = np.asarray(xi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    A = constraint_map(prob)
    b = prob.b
    feas_xi = float(np.linalg.norm(A @ xi - b))
    if feas_xi > 1e-9 * (1.0 + float(np.linalg.norm(b))):
        raise ConfigError(f"xi must be feasible (residual {feas_xi:.3e})")
    if z_next is None:
        z_next = prim_step(cfg, sched, z, lam, prob)
    rho_t, tau_t = sched.rho_t, sched.tau_t

    lhs = eval_aug_lagrangian(prob, z_next, lam, rho_t) - eval_aug_lagrangian(
        prob, xi, lam, rho_t
    )
    feas_next = float(np.linalg.norm(A @ z_next - b))
    pen_term = 0.5 * delta * rho_t * feas_next**2

    family = cert.family
    if family == "single":
        sp = _single_problem(prob)
        bregman = tau_t * delta_P(cert.P, xi, z, z_next)
        q_term = 0.5 * tau_t * quad_norm(cert.Q, z_next - z)
        sc_term = 0.5 * sp.sigma * float(np.sum((xi - z_next) ** 2))
    else:
        bp = prob
        u, v = bp.split(z)
        un, vn = bp.split(z_next)
        xu, xv = bp.split(xi)
        if family == "admm":
            bregman = delta_P(cert.P1, xu, u, un) + tau_t * delta_P(cert.P2, xv, v, vn)
            q_term = 0.5 * quad_norm(cert.Q1, un - u) + 0.5 * tau_t * quad_norm(
                cert.Q2, vn - v
            )
            sc_term = 0.5 * bp.sigma_g * float(np.sum((xv - vn) ** 2))
        else:  # symmetric
            bregman = tau_t * (delta_P(cert.P1, xu, u, un) + delta_P(cert.P2, xv, v, vn))
            q_term = 0.5 * tau_t * (
                quad_norm(cert.Q1, un - u) + quad_norm(cert.Q2, vn - v)
            )
            sc_term = 0.5 * (
                bp.sigma_f * float(np.sum((xu - un) ** 2))
                + bp.sigma_g * float(np.sum((xv - vn) ** 2))
            )

    rhs = bregman - q_term - sc_term - pen_term
    residual = lhs - rhs
    scale = 1.0 + abs(lhs) + abs(bregman) + q_term + sc_term + pen_term
    return residual, scale


def nice_residual(cfg, sched, z, lam, xi, prob, cert=None, z_next=None, delta=None):
    """Left minus right of the niceness inequality; nice maps yield <= 0 up to
    roundoff (tolerance 1e-7 * scale in the sampling suite)."""
    residual, _ = nice_parts(
        cfg, sched, z, lam, xi, prob, cert=cert, z_next=z_next, delta=delta
    )
    return residual


def feasible_sampler(prob, seed=0, scale=1.0):
    """Yield feasible points xi = x_particular + null-space perturbations."""
    rng = np.random.default_rng(seed)
    A = constraint_map(prob)
    b = prob.b
    if prob.feasible_point is not None:
        x_part = prob.feasible_point
    else:
        x_part, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.linalg.norm(A @ x_part - b) > 1e-9 * (1.0 + np.linalg.norm(b)):
            raise ConfigError("problem admits no feasible point within tolerance")
    _, s, Vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-10 * (s[0] if s.size else 1.0)))
    null_basis = Vt[rank:].T
    while True:
        if null_basis.shape[1] == 0:
            yield x_part.copy()
        else:
            w = scale * rng.standard_normal(null_basis.shape[1])
            yield x_part + null_basis @ w


def default_p(cfg, prob):
    """Regime implied by the strong convexity the map's analysis exploits."""
    family = residual_family(cfg.kind)
    if family == "single":
        return 2 if _single_problem(prob).sigma > 0 else 1
    bp = _block_problem(prob, cfg.kind)
    if family == "admm":
        return 2 if bp.sigma_g > 0 else 1
    return 2 if min(bp.sigma_f, bp.sigma_g) > 0 else 1


def sample_niceness(
    cfg,
    prob,
    states=100,
    xis=20,
    seed=0,
    p=None,
    t_values=(1.0, 2.5, 7.0, 19.5, 60.0),
    state_scale=2.0,
    xi_scale=1.5,
    delta=None,
):
    """Adversarial sampling of the niceness inequality.

    Draws `states` random (z, lambda, t) tuples and `xis` feasible points per
    state, and returns the worst residual both raw and relative to
    scale = 1 + sum of absolute inequality terms.
    """
    cert = certificate(cfg, prob)
    if p is None:
        p = default_p(cfg, prob)
    if p == 1:
        t_values = (1.0,)
    rng = np.random.default_rng(seed)
    xi_gen = feasible_sampler(prob, seed=seed + 1, scale=xi_scale)
    A = constraint_map(prob)
    n = A.shape[1]
    m = A.shape[0]
    center = prob.feasible_point if prob.feasible_point is not None else np.zeros(n)
    t_cycle = itertools.cycle(t_values)

    max_raw = -np.inf
    max_scaled = -np.inf
    checked = 0
    for _ in range(states):
        z = center + state_scale * rng.standard_normal(n)
        lam = state_scale * rng.standard_normal(m)
        sched = schedule_at(cfg.rho, next(t_cycle), p)
        z_next = prim_step(cfg, sched, z, lam, prob)
        for _ in range(xis):
            xi = next(xi_gen)
            residual, scale = nice_parts(
                cfg, sched, z, lam, xi, prob, cert=cert, z_next=z_next, delta=delta
            )
            checked += 1
            max_raw = max(max_raw, residual)
            max_scaled = max(max_scaled, residual / scale)
    return {
        "kind": cfg.kind,
        "delta": cert.delta,
        "p": p,
        "states": states,
        "xis": xis,
        "checked": checked,
        "max_residual": max_raw,
        "max_scaled_residual": max_scaled,
    }


def make_config(kind, prob, rho, policy="auto", scale=1.0, margin=1.0, alpha=None):
    """Build a MapConfig from a matrix policy.

    identity-scaled: M = scale * I on every block (chambolle-pock: alpha
    defaults to 1/scale). auto: the minimal scaled identity satisfying each
    certificate condition with absolute slack `margin`.
    """
    residual_family(kind)
    if policy not in ("identity-scaled", "auto"):
        raise ConfigError(f"unknown matrix policy {policy!r}")
    if kind in SINGLE_KINDS:
        sp = _single_problem(prob)
        n = sp.n
        if policy == "identity-scaled":
            return MapConfig(kind=kind, rho=rho, M=scale * np.eye(n))
        lamA = linalg.lambda_max(_gram(sp.A))
        L = sp.smooth.lipschitz_grad if (sp.smooth is not None and kind in SMOOTH_KINDS) else 0.0
        if kind == "prox-al":
            s = margin
        elif kind == "prox-lin-al":
            s = rho * lamA + margin
        elif kind == "smooth-prox-al":
            s = L + margin
        else:
            s = rho * lamA + L + margin
        return MapConfig(kind=kind, rho=rho, M=s * np.eye(n))

    bp = _block_problem(prob, kind)
    lamA = linalg.lambda_max(_gram(bp.A))
    lamB = linalg.lambda_max(_gram(bp.B))
    if kind == "chambolle-pock":
        if alpha is None:
            alpha = 1.0 / scale if policy == "identity-scaled" else 1.0 / (rho * lamB + margin)
        return MapConfig(kind=kind, rho=rho, alpha=alpha)
    if policy == "identity-scaled":
        s1 = s2 = scale
    elif kind == "prox-admm":
        s1 = s2 = margin
    elif kind == "prox-lin-admm":
        s1 = margin
        s2 = rho * lamB + margin
    elif kind == "prox-jacobi":
        s1 = rho * lamA + margin
        s2 = rho * lamB + margin
    elif kind == "pcpm":
        s1 = 2 * rho * lamA + margin
        s2 = 2 * rho * lamB + margin
    else:  # full-lin-admm
        s1 = rho * lamA + margin
        s2 = rho * lamB + margin
    return MapConfig(
        kind=kind, rho=rho, M1=s1 * np.eye(bp.n1), M2=s2 * np.eye(bp.n2)
    )
