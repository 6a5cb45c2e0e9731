"""Lagrangian, augmented Lagrangian, and the weighted Bregman-gap quantity
Delta_P(u, v, w) = 0.5 (||u - v||_P^2 - ||u - w||_P^2)."""

import math

import numpy as np

from .errors import ConfigError
from .problems import constraint_map, eval_objective


def eval_lagrangian(p, x, y):
    """Psi(x) + <y, Ax - b>; +inf propagates from indicator terms."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    v = eval_objective(p, x)
    if math.isinf(v):
        return math.inf
    return v + float(y @ (constraint_map(p) @ x - p.b))


def eval_aug_lagrangian(p, x, y, rho):
    """Lagrangian plus (rho/2) ||Ax - b||^2; rho = 0 recovers the Lagrangian."""
    if rho < 0:
        raise ConfigError("rho must be nonnegative")
    v = eval_lagrangian(p, x, y)
    if math.isinf(v):
        return math.inf
    r = constraint_map(p) @ np.asarray(x, dtype=float) - p.b
    return v + 0.5 * rho * float(r @ r)


def quad_norm(P, v):
    """||v||_P^2 = v'Pv."""
    v = np.asarray(v, dtype=float)
    return float(v @ (np.asarray(P, dtype=float) @ v))


def delta_P(P, u, v, w):
    """0.5 (||u - v||_P^2 - ||u - w||_P^2), computed from the definition so it
    stays valid for singular PSD P."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if not (u.shape == v.shape == w.shape):
        raise ConfigError("delta_P arguments must share a dimension")
    return 0.5 * (quad_norm(P, u - v) - quad_norm(P, u - w))


def delta_euclid(u, v, w):
    """delta_P with P = I, used for the multiplier terms."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return 0.5 * (float((u - v) @ (u - v)) - float((u - w) @ (u - w)))
