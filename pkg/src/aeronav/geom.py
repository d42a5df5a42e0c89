"""Core vector math shared by every navigation law.

Conventions: vectors are float64 numpy arrays, angles in radians, SI units.
All functions are pure; nothing in here mutates its arguments.
"""
from __future__ import annotations

import warnings

import numpy as np

EPS = 1e-12

X3 = np.array([1.0, 0.0, 0.0])
Y3 = np.array([0.0, 1.0, 0.0])
Z3 = np.array([0.0, 0.0, 1.0])
E3 = Z3


def vec(*components: float) -> np.ndarray:
    return np.array(components, dtype=float)


def norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def unit(v: np.ndarray) -> np.ndarray:
    """Normalize v; raises on (near-)zero input."""
    n = np.linalg.norm(v)
    if n < EPS:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def unit_or_zero(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n < EPS:
        return np.zeros_like(v)
    return v / n


def wrap_angle(a):
    """Wrap angle(s) to (-pi, pi]."""
    w = -(np.mod(-np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi)
    return float(w) if np.isscalar(a) or np.ndim(a) == 0 else w


def angle_diff(a, b):
    """Shortest-arc difference a - b, wrapped to (-pi, pi]."""
    return wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def angle_between(u: np.ndarray, v: np.ndarray) -> float:
    """Unsigned angle between two vectors in [0, pi]."""
    c = float(np.dot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def chi(beta: float, gamma: float, delta: float) -> float:
    """Piecewise-linear saturation: gamma*beta inside |beta| <= delta, clipped
    at delta*gamma outside.  Odd and bounded by delta*gamma."""
    if gamma <= 0.0 or delta <= 0.0:
        raise ValueError("chi requires gamma > 0 and delta > 0")
    if abs(beta) <= delta:
        return gamma * beta
    return delta * gamma * float(np.sign(beta))


def smooth_sgn(x, mu: float = 10.0):
    """tanh(mu*x): smooth stand-in for sgn in the sliding-mode laws."""
    return np.tanh(mu * np.asarray(x, dtype=float)) if np.ndim(x) else float(np.tanh(mu * x))


def skew(v: np.ndarray) -> np.ndarray:
    """3x3 matrix [v]_x with [v]_x w = v x w."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of skew for a skew-symmetric 3x3 matrix."""
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rodrigues_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation matrix about a unit axis by `angle` (right-hand rule):
    cos(a) I + sin(a) [n]_x + (1 - cos(a)) n n^T."""
    n = np.asarray(axis, dtype=float)
    nn = np.linalg.norm(n)
    if abs(nn - 1.0) > 1e-3:
        raise ValueError(f"rotation axis must be unit length, got |axis|={nn:.6f}")
    if abs(nn - 1.0) > 1e-9:
        warnings.warn(f"rotation axis off unit by {abs(nn - 1.0):.2e}; normalizing",
                      stacklevel=2)
    n = n / nn
    c, s = np.cos(angle), np.sin(angle)
    return c * np.eye(3) + s * skew(n) + (1.0 - c) * np.outer(n, n)


def rodrigues_rotate(v: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotate v about `axis` by `angle`.  Norm-preserving to 1e-9."""
    return rodrigues_matrix(axis, angle) @ np.asarray(v, dtype=float)


def rotate2d(v: np.ndarray, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def steer_map(w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    """Unit vector perpendicular to the unit vector w1, in span{w1, w2},
    pointing toward w2.  Zero when w2 is parallel to w1 (or zero)."""
    w1 = np.asarray(w1, dtype=float)
    if abs(np.linalg.norm(w1) - 1.0) > 1e-6:
        raise ValueError("steer_map: w1 must be unit length")
    f = np.asarray(w2, dtype=float) - float(np.dot(w1, w2)) * w1
    n = np.linalg.norm(f)
    if n < 1e-9:
        return np.zeros_like(f)
    return f / n


def orthonormalize(r: np.ndarray) -> np.ndarray:
    """Project a nearly-orthonormal 3x3 matrix back onto SO(3)
    (modified Gram-Schmidt on columns, right-handed)."""
    c0 = unit(r[:, 0])
    c1 = r[:, 1] - np.dot(c0, r[:, 1]) * c0
    c1 = unit(c1)
    c2 = np.cross(c0, c1)
    return np.column_stack((c0, c1, c2))


def heading_from_angles(beta: float, alpha: float) -> np.ndarray:
    """Unit heading from azimuth beta and flight-path angle alpha."""
    ca = np.cos(alpha)
    return np.array([np.cos(beta) * ca, np.sin(beta) * ca, np.sin(alpha)])


def angles_from_heading(h: np.ndarray) -> tuple[float, float]:
    """(beta, alpha) azimuth / flight-path angles of a direction vector."""
    beta = float(np.arctan2(h[1], h[0]))
    alpha = float(np.arctan2(h[2], np.hypot(h[0], h[1])))
    return beta, alpha


def perpendicular_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Any two unit vectors completing `n` (unit) to a right-handed frame."""
    ref = X3 if abs(n[0]) < 0.9 else Y3
    e1 = unit(np.cross(n, ref))
    e2 = np.cross(n, e1)
    return e1, e2


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Distance from point p to segment ab and the closest point."""
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom < EPS:
        return float(np.linalg.norm(p - a)), a.copy()
    t = float(np.clip(np.dot(p - a, ab) / denom, 0.0, 1.0))
    q = a + t * ab
    return float(np.linalg.norm(p - q)), q


def point_line_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Distance from p to the infinite line through a and b."""
    d = unit(b - a)
    r = p - a
    return float(np.linalg.norm(r - np.dot(r, d) * d))
