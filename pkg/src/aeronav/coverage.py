"""Barrier and sweep coverage over a planar region in 3D.

Agents project onto the (possibly moving) plane, compute their Voronoi
cells there by half-plane clipping against in-range neighbors, and steer
toward the cell centroids; the centroidal configuration maximizes the
multicenter sensing objective.  A sweeping plane drags the whole formation
across the volume; deformation events reshape it in flight.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import unit

EPS_AREA = 1e-12


class FrameError(Exception):
    pass


@dataclass
class BarrierFrame:
    """Orthonormal frame attached to the planar region: origin at the first
    boundary vertex, a1 along the first edge, a3 the plane normal."""
    origin: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    boundary_world: np.ndarray     # (l, 3) vertex loop
    boundary_local: np.ndarray     # (l, 2) in-frame coordinates

    @classmethod
    def from_vertices(cls, vertices: np.ndarray) -> "BarrierFrame":
        e = np.asarray(vertices, dtype=float)
        if len(e) < 3:
            raise FrameError("need at least three boundary vertices")
        a1 = e[1] - e[0]
        n1 = np.linalg.norm(a1)
        if n1 < 1e-12:
            raise FrameError("degenerate first edge")
        a1 = a1 / n1
        b = e[-1] - e[0]
        nb = np.linalg.norm(b)
        if nb < 1e-12:
            raise FrameError("degenerate closing edge")
        b = b / nb
        a2 = b - float(np.dot(a1, b)) * a1
        n2 = np.linalg.norm(a2)
        if n2 < 1e-9:
            raise FrameError("collinear boundary vertices: frame undefined")
        a2 = a2 / n2
        a3 = np.cross(a1, a2)
        local3 = np.array([(cls._to_local_static(v, e[0], a1, a2, a3)) for v in e])
        if np.max(np.abs(local3[:, 2])) > 1e-8:
            raise FrameError("boundary vertices are not coplanar")
        return cls(e[0].copy(), a1, a2, a3, e.copy(), local3[:, :2])

    @staticmethod
    def _to_local_static(v, origin, a1, a2, a3):
        r = np.asarray(v, dtype=float) - origin
        return np.array([np.dot(r, a1), np.dot(r, a2), np.dot(r, a3)])

    def rotation(self) -> np.ndarray:
        return np.column_stack((self.a1, self.a2, self.a3))

    def transform_matrix(self) -> np.ndarray:
        """4x4 affine frame->world matrix [a1 a2 a3 origin; 0 0 0 1]."""
        t = np.eye(4)
        t[:3, :3] = self.rotation()
        t[:3, 3] = self.origin
        return t

    def to_local(self, p: np.ndarray) -> np.ndarray:
        return self._to_local_static(p, self.origin, self.a1, self.a2, self.a3)

    def to_world(self, local: np.ndarray) -> np.ndarray:
        local = np.asarray(local, dtype=float)
        if len(local) == 2:
            local = np.array([local[0], local[1], 0.0])
        return self.origin + self.rotation() @ local

    def project(self, p: np.ndarray) -> np.ndarray:
        """In-frame 2D coordinates of the projection of p onto the plane."""
        return self.to_local(p)[:2]

    def translated(self, offset: np.ndarray) -> "BarrierFrame":
        return BarrierFrame(self.origin + offset, self.a1, self.a2, self.a3,
                            self.boundary_world + offset[None, :],
                            self.boundary_local.copy())

    def reshaped(self, scale: float = 1.0, tilt_axis: np.ndarray | None = None,
                 tilt_angle: float = 0.0) -> "BarrierFrame":
        """Scale about the boundary centroid and/or tilt about an axis
        through it; the polygon stays planar."""
        centroid = self.boundary_world.mean(axis=0)
        verts = centroid + scale * (self.boundary_world - centroid)
        if tilt_axis is not None and tilt_angle != 0.0:
            from .geom import rodrigues_matrix
            rot = rodrigues_matrix(unit(np.asarray(tilt_axis, dtype=float)), tilt_angle)
            verts = centroid + (verts - centroid) @ rot.T
        return BarrierFrame.from_vertices(verts)


def clip_halfplane(poly: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon with {q: a.q <= b}."""
    if len(poly) == 0:
        return poly
    out = []
    n = len(poly)
    for i in range(n):
        cur, nxt = poly[i], poly[(i + 1) % n]
        c_in = float(a @ cur) <= b + 1e-12
        n_in = float(a @ nxt) <= b + 1e-12
        if c_in:
            out.append(cur)
        if c_in != n_in:
            denom = float(a @ (nxt - cur))
            if abs(denom) > 1e-15:
                t = (b - float(a @ cur)) / denom
                out.append(cur + np.clip(t, 0.0, 1.0) * (nxt - cur))
    return np.asarray(out) if out else np.empty((0, 2))


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def cell_centroid(poly: np.ndarray) -> tuple[float, np.ndarray]:
    """Shoelace mass and centroid of a convex polygon with unit density.
    Vertices must be ordered; a zero-area cell is degenerate."""
    if len(poly) < 3:
        raise ValueError("degenerate cell: fewer than three vertices")
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    m = 0.5 * float(np.sum(cross))
    if abs(m) < EPS_AREA:
        raise ValueError("degenerate cell: zero area")
    cx = float(np.sum((x + xn) * cross)) / (6.0 * m)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * m)
    return m, np.array([cx, cy])


def polygon_second_moment(poly: np.ndarray, about: np.ndarray) -> float:
    """Integral of |q - about|^2 over the polygon (exact shoelace form)."""
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    ixx = np.sum(cross * (x * x + x * xn + xn * xn)) / 12.0
    iyy = np.sum(cross * (y * y + y * yn + yn * yn)) / 12.0
    area = 0.5 * float(np.sum(cross))
    mx = np.sum(cross * (x + xn)) / 6.0
    my = np.sum(cross * (y + yn)) / 6.0
    about = np.asarray(about, dtype=float)
    return float(ixx + iyy - 2.0 * about[0] * mx - 2.0 * about[1] * my
                 + (about @ about) * area)


def circumcenter(p1: np.ndarray, p2: np.ndarray, p3: np.ndarray) -> np.ndarray:
    """Circumcenter of a triangle from the edge-vector weights
    w1 = -|a32|^2 (a21 . a13) etc., normalized by their sum."""
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    a32 = p3 - p2
    a21 = p2 - p1
    a13 = p1 - p3
    w1 = -float(a32 @ a32) * float(a21 @ a13)
    w2 = -float(a13 @ a13) * float(a32 @ a21)
    w3 = -float(a21 @ a21) * float(a13 @ a32)
    s = w1 + w2 + w3
    if abs(s) < 1e-15:
        raise ValueError("collinear points have no circumcenter")
    return (w1 * p1 + w2 * p2 + w3 * p3) / s


def voronoi_cells(generators: np.ndarray, boundary: np.ndarray,
                  neighbor_mask: np.ndarray | None = None) -> list[np.ndarray]:
    """Voronoi cell polygons inside the boundary polygon (2D), clipping each
    generator's cell with the perpendicular bisector against every other
    generator (optionally restricted to in-range neighbors)."""
    g = np.asarray(generators, dtype=float)
    n = len(g)
    if n == 0:
        return []
    d = np.linalg.norm(g[:, None, :] - g[None, :, :], axis=2)
    if np.any(d[np.triu_indices(n, 1)] < 1e-9):
        raise ValueError("duplicate projected generators: cells undefined")
    cells = []
    for i in range(n):
        poly = np.asarray(boundary, dtype=float).copy()
        others = range(n) if neighbor_mask is None else np.nonzero(neighbor_mask[i])[0]
        for j in others:
            if j == i:
                continue
            a = g[j] - g[i]
            b = 0.5 * float(g[j] @ g[j] - g[i] @ g[i])
            poly = clip_halfplane(poly, a, b)
            if len(poly) == 0:
                break
        cells.append(poly)
    return cells


@dataclass(frozen=True)
class CoverageGains:
    k_bar: np.ndarray = None        # unbounded law gain (diag)
    k: np.ndarray = None            # bounded law gain (diag)
    gamma: float = 1.0

    def __post_init__(self):
        if self.k_bar is None:
            object.__setattr__(self, "k_bar", 0.3 * np.eye(3))
        if self.k is None:
            object.__setattr__(self, "k", np.diag([2.5, 0.5, 0.5]))
        for m in (self.k_bar, self.k):
            if np.any(np.diag(m) <= 0.0):
                raise ValueError("coverage gains must be positive")

    @property
    def u_max(self) -> float:
        return float(np.sqrt(np.sum(np.diag(self.k) ** 2)))


def coverage_control(p: np.ndarray, centroid_world: np.ndarray,
                     gains: CoverageGains, bounded: bool = True) -> np.ndarray:
    """Lloyd-style velocity command toward the instantaneous Voronoi centroid:
    unbounded K_bar (C - p), or the saturating K tanh(gamma (C - p))."""
    e = np.asarray(centroid_world, dtype=float) - np.asarray(p, dtype=float)
    if bounded:
        return gains.k @ np.tanh(gains.gamma * e)
    return gains.k_bar @ e


def tracking_accel_with_repulsion(p_i: np.ndarray, v_i: np.ndarray,
                                  c_ref: np.ndarray, c_ref_dot: np.ndarray,
                                  neighbor_positions: np.ndarray,
                                  l1: np.ndarray, l2: np.ndarray,
                                  l_rep: float, d_rep: float,
                                  mu1: float = 2.0, mu2: float = 1.5,
                                  g: float = 9.81) -> np.ndarray:
    """Quadrotor-level command acceleration toward the moving centroid with a
    quadratic-overlap repulsion from close neighbors."""
    e_p = np.asarray(c_ref, dtype=float) - np.asarray(p_i, dtype=float)
    e_v = np.asarray(c_ref_dot, dtype=float) - np.asarray(v_i, dtype=float)
    sigma = e_v + l1 @ np.tanh(mu1 * e_p)
    a = g * np.array([0.0, 0.0, 1.0]) + l2 @ np.tanh(mu2 * sigma)
    for q in np.atleast_2d(neighbor_positions):
        diff = np.asarray(p_i, dtype=float) - q
        dist = float(np.linalg.norm(diff))
        if dist < 1e-9:
            raise ValueError("coincident vehicles in repulsion term")
        overlap = max(0.0, d_rep ** 2 - dist ** 2)
        if overlap > 0.0:
            a = a + l_rep * overlap * diff / dist
    return a


@dataclass
class SweepEvent:
    t: float
    kind: str                       # "resize" | "tilt"
    scale: float = 1.0
    tilt_axis: np.ndarray | None = None
    tilt_angle: float = 0.0


class SweepPlan:
    """Time-indexed pose of the sweeping plane.

    Motion: constant speed g0 along the instantaneous normal a3 (or a
    waypoint leg schedule).  Deform events apply at their times; a resize
    shrinking the polygon below n_agents * min_spacing^2 is rejected."""

    def __init__(self, frame: BarrierFrame, g0: float = 1.5,
                 legs: list | None = None,
                 events: list[SweepEvent] | None = None,
                 min_area_per_agent: float = 1.0, n_agents: int = 1,
                 u_max: float | None = None):
        if u_max is not None and g0 > u_max:
            raise ValueError("sweep speed must respect the vehicles' limit")
        self.frame = frame
        self.g0 = g0
        self.legs = legs or []          # [(direction (3,), duration)]
        self.events = sorted(events or [], key=lambda e: e.t)
        self.min_area = min_area_per_agent * n_agents
        self.rejected: list[SweepEvent] = []
        self._leg_idx = 0
        self._leg_elapsed = 0.0
        self.t = 0.0

    def velocity(self) -> np.ndarray:
        if self.legs:
            if self._leg_idx >= len(self.legs):
                return np.zeros(3)
            direction, _ = self.legs[self._leg_idx]
            return self.g0 * unit(np.asarray(direction, dtype=float))
        return self.g0 * self.frame.a3

    def step(self, dt: float) -> BarrierFrame:
        vel = self.velocity()
        self.frame = self.frame.translated(vel * dt)
        if self.legs and self._leg_idx < len(self.legs):
            self._leg_elapsed += dt
            if self._leg_elapsed >= self.legs[self._leg_idx][1] - 1e-12:
                self._leg_idx += 1
                self._leg_elapsed = 0.0
        self.t += dt
        while self.events and self.events[0].t <= self.t:
            ev = self.events.pop(0)
            cand = self.frame.reshaped(ev.scale, ev.tilt_axis, ev.tilt_angle)
            if abs(polygon_area(cand.boundary_local)) < self.min_area:
                self.rejected.append(ev)
            else:
                self.frame = cand
        return self.frame


class CoverageSim:
    """Single-integrator agents steered to their in-plane Voronoi centroids.

    Two-phase tick: project all positions into the (current) frame, clip the
    cells from the snapshot, then apply velocity commands for one control
    period (the integrator is exact for a zero-order-hold input)."""

    def __init__(self, q0: np.ndarray, frame: BarrierFrame,
                 gains: CoverageGains, bounded: bool = True,
                 sweep: SweepPlan | None = None, control_dt: float = 0.1,
                 r_c: float | None = None):
        self.q = np.asarray(q0, dtype=float).copy()
        self.frame = frame
        self.gains = gains
        self.bounded = bounded
        self.sweep = sweep
        self.control_dt = control_dt
        self.r_c = r_c
        self.t = 0.0
        self.active = np.ones(len(self.q), dtype=bool)
        self.events: list = []
        self.last_cells: list = []
        self.last_centroids: np.ndarray | None = None

    def remove_agent(self, idx: int):
        self.active[idx] = False

    def centroids(self) -> tuple[np.ndarray, list]:
        idx = np.nonzero(self.active)[0]
        proj = np.array([self.frame.project(self.q[i]) for i in idx])
        mask = None
        if self.r_c is not None:
            d = np.linalg.norm(self.q[idx][:, None, :] - self.q[idx][None, :, :], axis=2)
            mask = d <= self.r_c
        cells = voronoi_cells(proj, self.frame.boundary_local, mask)
        if mask is not None:
            # out-of-range pairs whose bisector would still cut a cell break
            # the distributed assumption: log, keep the in-range result
            for row_i in range(len(idx)):
                for row_j in range(len(idx)):
                    if row_i == row_j or mask[row_i, row_j] or len(cells[row_i]) < 3:
                        continue
                    a = proj[row_j] - proj[row_i]
                    b = 0.5 * float(proj[row_j] @ proj[row_j] - proj[row_i] @ proj[row_i])
                    if np.any(cells[row_i] @ a > b + 1e-9):
                        self.events.append((self.t, "comm_range_violation",
                                            int(idx[row_i]), int(idx[row_j])))
        cents = np.full((len(self.q), 3), np.nan)
        for row, i in enumerate(idx):
            if len(cells[row]) < 3:
                self.events.append((self.t, "empty_cell", int(i)))
                cents[i] = self.q[i]
                continue
            _, c2 = cell_centroid(cells[row])
            cents[i] = self.frame.to_world(c2)
        self.last_cells = cells
        self.last_centroids = cents
        return cents, cells

    def multicenter_cost(self) -> float:
        """Sum over agents of the second moment of their cell about their
        projected position (exact polygon integration)."""
        idx = np.nonzero(self.active)[0]
        cells = self.last_cells
        if not cells:
            self.centroids()
            cells = self.last_cells
        total = 0.0
        for row, i in enumerate(idx):
            if len(cells[row]) >= 3:
                total += polygon_second_moment(cells[row],
                                               self.frame.project(self.q[i]))
        return total

    def tick(self):
        cents, _ = self.centroids()
        for i in np.nonzero(self.active)[0]:
            u = coverage_control(self.q[i], cents[i], self.gains, self.bounded)
            self.q[i] = self.q[i] + u * self.control_dt
        if self.sweep is not None:
            self.frame = self.sweep.step(self.control_dt)
        self.t += self.control_dt

    def velocities(self) -> np.ndarray:
        """Commanded velocities at the current state (ZOH input)."""
        cents, _ = self.centroids()
        out = np.zeros_like(self.q)
        for i in np.nonzero(self.active)[0]:
            out[i] = coverage_control(self.q[i], cents[i], self.gains, self.bounded)
        return out

    def min_pairwise(self) -> float:
        idx = np.nonzero(self.active)[0]
        q = self.q[idx]
        if len(q) < 2:
            return float("inf")
        d = np.linalg.norm(q[:, None, :] - q[None, :, :], axis=2)
        return float(np.min(d[np.triu_indices(len(q), k=1)]))
