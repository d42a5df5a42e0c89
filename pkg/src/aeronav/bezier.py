"""Quintic Bezier splines with C2 stitching and local deformation support.

A path is a chain of quintic segments, each parameterized on [0, 1].
Junction continuity is enforced through the closed-form endpoint control
points (first/second derivative pinning) plus a constant 4x4 solve for the
interior control points of a two-segment stitch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import unit

# power-basis coefficient matrix: f(s) = T(s) G CP with T = [s^5 ... s 1]
G_QUINTIC = np.array([
    [-1, 5, -10, 10, -5, 1],
    [5, -20, 30, -20, 5, 0],
    [-10, 30, -30, 10, 0, 0],
    [10, -20, 10, 0, 0, 0],
    [-5, 5, 0, 0, 0, 0],
    [1, 0, 0, 0, 0, 0],
], dtype=float)

# interior control points of a two-segment C2 stitch (rows: C1, C2 and two
# higher-order smoothness conditions closing the system)
STITCH_M = np.array([
    [0, 1, 1, 0],
    [1, -2, 2, -1],
    [2, -2, -2, 2],
    [6, -4, 4, -6],
], dtype=float)
STITCH_M_INV = np.linalg.inv(STITCH_M)


@dataclass(frozen=True)
class QuinticBezier:
    """Single quintic segment; control: (6, dim) array P0..P5."""
    control: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "control", np.asarray(self.control, dtype=float))
        if self.control.shape[0] != 6:
            raise ValueError("quintic Bezier needs six control points")

    @property
    def dim(self) -> int:
        return self.control.shape[1]

    def point(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        t = np.stack([s ** 5, s ** 4, s ** 3, s ** 2, s, np.ones_like(s)], axis=-1)
        return t @ G_QUINTIC @ self.control

    def deriv(self, s, order: int = 1) -> np.ndarray:
        c = G_QUINTIC @ self.control  # power-basis coefficients, degree 5..0
        for _ in range(order):
            c = c[:-1] * np.arange(len(c) - 1, 0, -1)[:, None]
        s = np.asarray(s, dtype=float)
        powers = np.stack([s ** k for k in range(len(c) - 1, -1, -1)], axis=-1)
        return powers @ c

    def split(self, u: float) -> tuple["QuinticBezier", "QuinticBezier"]:
        """De Casteljau subdivision at parameter u."""
        pts = [self.control.copy()]
        cur = self.control.copy()
        for _ in range(5):
            cur = (1.0 - u) * cur[:-1] + u * cur[1:]
            pts.append(cur.copy())
        left = np.stack([pts[k][0] for k in range(6)])
        right = np.stack([pts[5 - k][k] for k in range(6)])
        return QuinticBezier(left), QuinticBezier(right)


def hermite_quintic(p0, d0, dd0, p1, d1, dd1) -> QuinticBezier:
    """Unique quintic with prescribed endpoint value/first/second derivative
    (in the segment parameter)."""
    p0, d0, dd0 = (np.asarray(a, dtype=float) for a in (p0, d0, dd0))
    p1, d1, dd1 = (np.asarray(a, dtype=float) for a in (p1, d1, dd1))
    c0 = p0
    c1 = d0 / 5.0 + c0
    c2 = dd0 / 20.0 + 2.0 * c1 - c0
    c5 = p1
    c4 = c5 - d1 / 5.0
    c3 = dd1 / 20.0 + 2.0 * c4 - c5
    return QuinticBezier(np.stack([c0, c1, c2, c3, c4, c5]))


def stitch_three_point(p1, p2, p3, d_s, dd_s, d_e, dd_e) -> list[QuinticBezier]:
    """Two C2-stitched quintics interpolating p1 -> p2 -> p3 with prescribed
    boundary derivatives at p1 and p3.

    Endpoint control points come from the derivative pinning closed forms;
    the four interior ones from the constant 4x4 linear system.
    """
    p1, p2, p3 = (np.asarray(a, dtype=float) for a in (p1, p2, p3))
    d_s, dd_s, d_e, dd_e = (np.asarray(a, dtype=float) for a in (d_s, dd_s, d_e, dd_e))
    if (np.linalg.norm(p1 - p2) < 1e-9 or np.linalg.norm(p2 - p3) < 1e-9):
        raise ValueError("stitch waypoints must be distinct")

    p01 = p1
    p11 = d_s / 5.0 + p01
    p21 = dd_s / 20.0 + 2.0 * p11 - p01
    p52 = p3
    p42 = p52 - d_e / 5.0
    p32 = dd_e / 20.0 + 2.0 * p42 - p52
    p51 = p2
    p02 = p2

    rhs = np.stack([
        p51 + p02,
        -p51 + p02,
        p21 - p51 - p02 + p32,
        -p11 + 4.0 * p21 - p51 + p02 - 4.0 * p32 + p42,
    ])
    interior = STITCH_M_INV @ rhs
    p31, p41, p12, p22 = interior

    seg1 = QuinticBezier(np.stack([p01, p11, p21, p31, p41, p51]))
    seg2 = QuinticBezier(np.stack([p02, p12, p22, p32, p42, p52]))

    res = max(
        float(np.max(np.abs(seg1.deriv(1.0) - seg2.deriv(0.0)))),
        float(np.max(np.abs(seg1.deriv(1.0, 2) - seg2.deriv(0.0, 2)))),
    )
    if res > 1e-9:
        raise ArithmeticError(f"stitch continuity residual {res:.3e} exceeds 1e-9")
    return [seg1, seg2]


class PiecewisePath:
    """Chain of quintic segments with C2 junctions.

    The global parameter spans [0, n_segments]; segment i covers [i, i+1].
    Paths are treated as immutable: deformation returns a new path.
    """

    def __init__(self, segments: list[QuinticBezier]):
        if not segments:
            raise ValueError("path needs at least one segment")
        self.segments = list(segments)
        self._cache = None

    # -- construction -------------------------------------------------------

    @classmethod
    def from_waypoints(cls, waypoints, d_start=None, dd_start=None,
                       d_end=None, dd_end=None) -> "PiecewisePath":
        """C2 interpolant of the waypoints: interior derivatives from central
        differences, endpoints from the supplied boundary data (default:
        chord direction, zero curvature)."""
        w = np.asarray(waypoints, dtype=float)
        if len(w) < 2:
            raise ValueError("need at least two waypoints")
        if len(w) == 2:
            d = w[1] - w[0]
            z = np.zeros_like(d)
            d0 = d if d_start is None else np.asarray(d_start, dtype=float)
            d1 = d if d_end is None else np.asarray(d_end, dtype=float)
            dd0 = z if dd_start is None else np.asarray(dd_start, dtype=float)
            dd1 = z if dd_end is None else np.asarray(dd_end, dtype=float)
            return cls([hermite_quintic(w[0], d0, dd0, w[1], d1, dd1)])

        n = len(w)
        d = np.empty_like(w)
        dd = np.empty_like(w)
        d[0] = (w[1] - w[0]) if d_start is None else d_start
        d[-1] = (w[-1] - w[-2]) if d_end is None else d_end
        dd[0] = 0.0 if dd_start is None else dd_start
        dd[-1] = 0.0 if dd_end is None else dd_end
        for i in range(1, n - 1):
            d[i] = 0.5 * (w[i + 1] - w[i - 1])
            dd[i] = w[i + 1] - 2.0 * w[i] + w[i - 1]
        segs = [hermite_quintic(w[i], d[i], dd[i], w[i + 1], d[i + 1], dd[i + 1])
                for i in range(n - 1)]
        return cls(segs)

    @classmethod
    def straight(cls, a, b, segment_length: float | None = None) -> "PiecewisePath":
        """Straight path, optionally pre-subdivided so local deformations have
        junctions to splice at."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if segment_length is None:
            return cls.from_waypoints([a, b])
        n = max(1, int(np.ceil(np.linalg.norm(b - a) / segment_length)))
        w = a[None, :] + np.linspace(0.0, 1.0, n + 1)[:, None] * (b - a)[None, :]
        return cls.from_waypoints(w)

    # -- evaluation ---------------------------------------------------------

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def dim(self) -> int:
        return self.segments[0].dim

    def _locate(self, s: float) -> tuple[int, float]:
        s = float(np.clip(s, 0.0, self.n_segments))
        i = min(int(np.floor(s)), self.n_segments - 1)
        return i, s - i

    def point(self, s: float) -> np.ndarray:
        i, u = self._locate(s)
        return self.segments[i].point(u)

    def deriv(self, s: float, order: int = 1) -> np.ndarray:
        i, u = self._locate(s)
        return self.segments[i].deriv(u, order)

    def tangent(self, s: float) -> np.ndarray:
        return unit(self.deriv(s))

    def end_point(self) -> np.ndarray:
        return self.segments[-1].point(1.0)

    def curvature(self, s: float) -> float:
        d1 = self.deriv(s, 1)
        d2 = self.deriv(s, 2)
        n1 = float(np.linalg.norm(d1))
        if n1 < 1e-12:
            return 0.0
        if self.dim == 2:
            cross = abs(d1[0] * d2[1] - d1[1] * d2[0])
        else:
            cross = float(np.linalg.norm(np.cross(d1, d2)))
        return cross / n1 ** 3

    def junction_residuals(self) -> tuple[float, float]:
        """Max first/second derivative mismatch over all junctions."""
        r1 = r2 = 0.0
        for a, b in zip(self.segments[:-1], self.segments[1:]):
            r1 = max(r1, float(np.max(np.abs(a.deriv(1.0) - b.deriv(0.0)))))
            r2 = max(r2, float(np.max(np.abs(a.deriv(1.0, 2) - b.deriv(0.0, 2)))))
        return r1, r2

    # -- sampling / projection ----------------------------------------------

    def sample(self, per_segment: int = 200) -> tuple[np.ndarray, np.ndarray]:
        """(params, points) sampled uniformly in parameter over the path."""
        if self._cache is not None and self._cache[2] == per_segment:
            return self._cache[0], self._cache[1]
        params, pts = [], []
        for i, seg in enumerate(self.segments):
            u = np.linspace(0.0, 1.0, per_segment, endpoint=(i == self.n_segments - 1))
            params.append(i + u)
            pts.append(seg.point(u))
        params = np.concatenate(params)
        pts = np.vstack(pts)
        self._cache = (params, pts, per_segment)
        return params, pts

    def closest_param(self, p: np.ndarray, per_segment: int = 200) -> float:
        params, pts = self.sample(per_segment)
        i = int(np.argmin(np.linalg.norm(pts - np.asarray(p, dtype=float), axis=1)))
        return float(params[i])

    def point_ahead(self, s0: float, distance: float, step: float = 0.02) -> tuple[float, np.ndarray]:
        """Walk forward from parameter s0 by `distance` of arclength."""
        s, acc = s0, 0.0
        prev = self.point(s0)
        while acc < distance and s < self.n_segments:
            s = min(s + step, self.n_segments)
            cur = self.point(s)
            acc += float(np.linalg.norm(cur - prev))
            prev = cur
        return s, prev

    def arclength(self, per_segment: int = 200) -> float:
        _, pts = self.sample(per_segment)
        return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))

    # -- deformation --------------------------------------------------------

    def replace_window(self, i_s: int, i_e: int, p_c_new: np.ndarray) -> "PiecewisePath":
        """New path equal to this one outside segments [i_s, i_e); inside, two
        stitched segments through p_c_new.  Boundary derivatives come from the
        old path at the window junctions, so the chain stays C2 in the raw
        segment parameter and retained segments are bit-identical."""
        if not (0 <= i_s < i_e <= self.n_segments):
            raise ValueError("invalid deformation window")
        left = list(self.segments[:i_s])
        right = list(self.segments[i_e:])
        first, last = self.segments[i_s], self.segments[i_e - 1]
        p_s, d_s, dd_s = first.point(0.0), first.deriv(0.0), first.deriv(0.0, 2)
        p_e, d_e, dd_e = last.point(1.0), last.deriv(1.0), last.deriv(1.0, 2)
        mid = stitch_three_point(p_s, np.asarray(p_c_new, dtype=float), p_e,
                                 d_s, dd_s, d_e, dd_e)
        return PiecewisePath(left + mid + right)
