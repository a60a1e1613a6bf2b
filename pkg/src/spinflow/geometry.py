"""Pointwise operations on the unit sphere S^2 in R^3.

All functions broadcast over leading axes: a field of vectors is an array
of shape (..., 3).
"""

import numpy as np

from .errors import AntipodalPoints

UNIT_TOL = 1e-12
TANGENCY_TOL = 1e-10
ANTIPODAL_GUARD = 1e-6


def dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def cross(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # explicit components: np.cross is slow for small trailing axes
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def is_unit(v, tol: float = UNIT_TOL) -> bool:
    v = np.asarray(v, dtype=float)
    return bool(np.all(np.abs(dot(v, v) - 1.0) <= tol))


def is_tangent(base, vec, tol: float = TANGENCY_TOL) -> bool:
    return bool(np.all(np.abs(dot(base, vec)) <= tol))


def tangent_project(u, w):
    """Orthogonal projection of ``w`` onto the tangent plane at ``u``."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    return w - dot(w, u)[..., None] * u


def geodesic_distance(p, q):
    """Great-circle distance in [0, pi].

    Evaluated as atan2(|p x q|, <p, q>), which equals the clamped arccos of
    <p, q> on unit vectors but keeps full relative accuracy for nearby
    points.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    s = np.sqrt(dot(*(cross(p, q),) * 2))
    c = np.clip(dot(p, q), -1.0, 1.0)
    return np.arctan2(s, c)


def _check_antipodal(c, guard):
    if np.any(1.0 + c <= guard):
        raise AntipodalPoints(
            f"1 + <p, q> = {np.min(1.0 + c):.3e} is within the antipodal guard {guard:g}")


def parallel_transport(p, q, X, antipodal_guard: float = ANTIPODAL_GUARD):
    """Transport the tangent vector ``X`` at ``q`` to ``p`` along the
    minimizing geodesic.

    Closed form ``X - <X, p> / (1 + <p, q>) * (p + q)``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    X = np.asarray(X, dtype=float)
    c = dot(p, q)
    _check_antipodal(c, antipodal_guard)
    return X - (dot(X, p) / (1.0 + c))[..., None] * (p + q)


def rotate_between(p, q, X, antipodal_guard: float = ANTIPODAL_GUARD):
    """Apply the minimal rotation of R^3 carrying ``q`` onto ``p`` to ``X``.

    On vectors tangent at ``q`` this coincides with
    :func:`parallel_transport`; unlike the closed form it is the exact
    identity when ``p == q`` for any ambient ``X``, which matters for
    discrete gradients that are tangent only up to truncation error.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    X = np.asarray(X, dtype=float)
    c = dot(q, p)
    _check_antipodal(c, antipodal_guard)
    v = cross(q, p)
    vx = cross(v, X)
    vvx = cross(v, vx)
    return X + vx + vvx / (1.0 + c)[..., None]


def exp_map(p, v):
    """Point reached from ``p`` along the geodesic with initial velocity ``v``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    n = np.sqrt(dot(v, v))[..., None]
    safe = np.where(n > 0, n, 1.0)
    return np.cos(n) * p + np.where(n > 0, np.sin(safe) / safe, 1.0) * v


def log_map(p, q, antipodal_guard: float = ANTIPODAL_GUARD):
    """Initial velocity of the unit-time minimizing geodesic from ``p`` to
    ``q``; its length is d(p, q)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_antipodal(dot(p, q), antipodal_guard)
    w = tangent_project(p, q)
    n = np.sqrt(dot(w, w))
    d = geodesic_distance(p, q)
    scale = np.where(n > 0, d / np.where(n > 0, n, 1.0), 0.0)
    return scale[..., None] * w


def half_distance_squared_derivative(p, q, X1, X2):
    """Derivative of d^2 / 2 on S^2 x S^2 at (p, q) along (X1, X2):
    <log_p q, P X2 - X1>, with P the transport from q to p."""
    return dot(log_map(p, q), parallel_transport(p, q, X2) - np.asarray(X1, float))
