"""Closed-form proximal subproblem solvers.

Every map step reduces to  argmin_x  term(x) + <g, x> + 0.5 x'Vx  for a PSD
weight V assembled by the caller; prox_weighted exposes the anchored form
argmin_x term(x) + <linear, x> + 0.5 ||x - anchor||_W^2. Non-quadratic terms
require a strictly positive diagonal weight so the minimizer stays closed
form; configurations without one are rejected with a pointer to the
linearized map variants.
"""

import numpy as np

from . import linalg
from .errors import ConfigError, DegenerateSubproblemError, NumericalError
from .problems import Box, L1, Quadratic, Separable, Zero

STATIONARITY_TOL = 1e-8


def validate_weight(W, n=None, name="weight"):
    """Check the weight-matrix invariant: symmetric within 1e-10, PSD."""
    W = linalg.check_psd(W, name)
    if n is not None and W.shape[0] != n:
        raise ConfigError(f"{name} has dimension {W.shape[0]}, expected {n}")
    return W


def soft_threshold(w, t):
    """Componentwise sign(w) * max(|w| - t, 0); t > 0 scalar or per coordinate."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ConfigError("soft_threshold requires t > 0")
    w = np.asarray(w, dtype=float)
    return np.sign(w) * np.maximum(np.abs(w) - t, 0.0)


def solve_regularized_quadratic(H, q, W, anchor):
    """Minimize 0.5 x'Hx + q'x + 0.5 ||x - anchor||_W^2, i.e. solve
    (H + W) x = W anchor - q."""
    H = linalg.check_symmetric(H, "H")
    W = linalg.check_symmetric(W, "W")
    q = np.asarray(q, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    return linalg.solve_spd(H + W, W @ anchor - q, name="regularized quadratic")


def _diag_of(V, context):
    if not linalg.is_diagonal(V):
        raise ConfigError(
            f"{context}: the effective Hessian must be diagonal for a "
            "closed-form prox of a nonsmooth term; use the linearized map variant"
        )
    d = np.diag(V).copy()
    if np.any(d < linalg.SINGULAR_FLOOR):
        raise DegenerateSubproblemError(
            f"{context}: diagonal weight has a (near-)zero entry; "
            "the subproblem has no unique minimizer"
        )
    return d


def argmin_composite(term, g, V, name="subproblem"):
    """Minimize term(x) + <g, x> + 0.5 x'Vx exactly.

    V must be symmetric PSD with the total curvature (term + V) strictly
    positive definite.
    """
    g = np.asarray(g, dtype=float)
    V = np.asarray(V, dtype=float)
    if V.shape != (term.dim, term.dim) or g.shape != (term.dim,):
        raise ConfigError(f"{name}: dimension mismatch")
    if isinstance(term, Quadratic):
        return linalg.solve_spd(term.H + V, -(term.q + g), name=name)
    if isinstance(term, Zero):
        return linalg.solve_spd(V, -g, name=name)
    if isinstance(term, L1):
        d = _diag_of(V, name)
        if term.weight == 0.0:
            return -g / d
        return soft_threshold(-g / d, term.weight / d)
    if isinstance(term, Box):
        d = _diag_of(V, name)
        return np.clip(-g / d, term.lo, term.hi)
    if isinstance(term, Separable):
        x = np.empty(term.dim)
        slices = term.slices()
        for i, (part, s) in enumerate(zip(term.parts, slices)):
            for j, s2 in enumerate(slices):
                if i != j and np.count_nonzero(V[s, s2]) != 0:
                    raise ConfigError(
                        f"{name}: the weight couples separable blocks {i} and {j}; "
                        "use the linearized map variant"
                    )
            x[s] = argmin_composite(part, g[s], V[s, s], name=f"{name}[{i}]")
        return x
    raise ConfigError(f"{name}: unsupported term {type(term).__name__}")


def prox_residual(term, x, linear, V, anchor=None):
    """Stationarity residual: distance from the implied negative gradient of
    the smooth part to the subdifferential of term at x."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(linear, dtype=float) + V @ x
    if anchor is not None:
        g = g - V @ np.asarray(anchor, dtype=float)
    return term.subgrad_dist(x, -g)


def prox_weighted(term, linear, W, anchor, sigma=0.0):
    """Minimize term(x) + <linear, x> + 0.5 ||x - anchor||_W^2.

    W must be symmetric PSD; with sigma = 0 and a non-quadratic term, W must
    be strictly positive definite for uniqueness. The returned point satisfies
    a stationarity residual <= 1e-8 * (1 + ||anchor||).
    """
    anchor = np.asarray(anchor, dtype=float)
    linear = np.asarray(linear, dtype=float)
    W = validate_weight(W, term.dim, "W")
    x = argmin_composite(term, linear - W @ anchor, W, name="weighted prox")
    resid = prox_residual(term, x, linear, W, anchor)
    if resid > STATIONARITY_TOL * (1.0 + float(np.linalg.norm(anchor))):
        raise NumericalError(
            f"weighted prox stationarity residual {resid:.3e} exceeds tolerance"
        )
    return x
