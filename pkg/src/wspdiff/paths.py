"""Paths of sampled diffeomorphisms: Eulerian fields, right-invariant lengths,
ODE flows, and the closed-form distance for the homogeneous H^1 metric."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .grids import (CircleDiffeo, Grid1D, IntervalDiffeo, InvalidDiffeoError, SampledFunction,
                    derivative, invert)
from .lenells import lenells_forward, lenells_inverse
from .norms import SobolevIndex, homogeneous_norm, lp_norm_values, wsp_norm


class FlowError(RuntimeError):
    """Integration lost monotonicity; use more time steps or substeps."""


@dataclass(frozen=True)
class TimeGrid:
    """Time nodes on [0, 1], uniform unless explicit nodes are given."""

    m_steps: int
    nodes_: Optional[tuple] = None

    def __post_init__(self):
        if self.m_steps < 1:
            raise ValueError("need at least one time step")
        if self.nodes_ is not None:
            t = np.asarray(self.nodes_, dtype=float)
            if len(t) != self.m_steps + 1 or np.any(np.diff(t) <= 0):
                raise ValueError("time nodes must be increasing with m_steps + 1 entries")

    @classmethod
    def from_nodes(cls, t) -> "TimeGrid":
        t = np.asarray(t, dtype=float)
        return cls(len(t) - 1, tuple(t))

    @property
    def nodes(self) -> np.ndarray:
        if self.nodes_ is not None:
            return np.asarray(self.nodes_)
        return np.arange(self.m_steps + 1) / self.m_steps

    def weights(self) -> np.ndarray:
        t = self.nodes
        w = np.zeros(len(t))
        dt = np.diff(t)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
        return w


def _time_derivative(vals: np.ndarray, t: np.ndarray, j: int, lo: int = 0,
                     hi: Optional[int] = None) -> np.ndarray:
    """Second-order finite difference in t at node j (one-sided at segment ends)."""
    m = len(t) - 1 if hi is None else hi
    if m - lo == 1:
        return (vals[m] - vals[lo]) / (t[m] - t[lo])
    if j == lo:
        i0, i1, i2 = lo, lo + 1, lo + 2
    elif j == m:
        i0, i1, i2 = m - 2, m - 1, m
    else:
        i0, i1, i2 = j - 1, j, j + 1
    t0, t1, t2 = t[i0], t[i1], t[i2]
    tj = t[j]
    # derivative of the quadratic through the three points
    c0 = (2 * tj - t1 - t2) / ((t0 - t1) * (t0 - t2))
    c1 = (2 * tj - t0 - t2) / ((t1 - t0) * (t1 - t2))
    c2 = (2 * tj - t0 - t1) / ((t2 - t0) * (t2 - t1))
    return c0 * vals[i0] + c1 * vals[i1] + c2 * vals[i2]


def _stencil(j: int, m: int, lo: int = 0) -> set:
    """Time nodes used for the derivative at j within the segment [lo, m]."""
    if m - lo == 1:
        return {lo, m}
    if j == lo:
        return {lo, lo + 1, lo + 2}
    if j == m:
        return {m - 2, m - 1, m}
    return {j - 1, j, j + 1}


def _eval_periodic(grid: Grid1D, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    xs = np.append(grid.nodes, 1.0)
    cs = CubicSpline(xs, np.append(values, values[0]), bc_type="periodic")
    return cs(np.mod(x, 1.0))


def field_from_maps(phi, dphi: np.ndarray) -> SampledFunction:
    """u = dphi o phi^{-1} for a map phi and its time derivative samples."""
    inv = invert(phi)
    g = phi.grid
    if isinstance(phi, CircleDiffeo):
        return SampledFunction(g, _eval_periodic(g, dphi, inv.lift))
    cs = CubicSpline(g.nodes, dphi)
    u = cs(inv.values)
    u[0], u[-1] = dphi[0], dphi[-1]
    return SampledFunction(g, u)


@dataclass(eq=False)
class DiffPath:
    """Time-sampled path of diffeos with lazily extracted Eulerian fields.

    ``junctions`` lists interior node indices where the path is a
    concatenation; time differences never reach across them.
    """

    times: TimeGrid
    maps: list
    junctions: tuple = ()
    _fields: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.maps) != self.times.m_steps + 1:
            raise ValueError("need one map per time node")
        self.junctions = tuple(sorted(int(j) for j in self.junctions))
        if any(not 0 < j < self.times.m_steps for j in self.junctions):
            raise ValueError("junctions must be interior nodes")
        kinds = {type(m) for m in self.maps}
        if len(kinds) != 1 or not kinds <= {CircleDiffeo, IntervalDiffeo}:
            raise InvalidDiffeoError("path maps must be diffeos of one kind")

    @property
    def grid(self) -> Grid1D:
        return self.maps[0].grid

    @property
    def m(self) -> int:
        return self.times.m_steps

    def values(self) -> np.ndarray:
        return np.array([np.asarray(mp.values) for mp in self.maps])

    @property
    def segments(self) -> list:
        b = [0, *self.junctions, self.m]
        return list(zip(b[:-1], b[1:]))

    def field(self, j: int, segment: Optional[tuple] = None) -> SampledFunction:
        seg = segment or next(sg for sg in self.segments if sg[0] <= j <= sg[1])
        key = (j, seg)
        if key not in self._fields:
            self._fields[key] = extract_vector_field(self, j, seg)
        return self._fields[key]

    @property
    def fields(self) -> list:
        return [self.field(j) for j in range(self.m + 1)]

    def to_dict(self) -> dict:
        return {
            "times": self.times.nodes.tolist(),
            "maps": [{"grid": mp.grid.to_dict(), "values": np.asarray(mp.values).tolist()}
                     for mp in self.maps],
        }

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def extract_vector_field(path: DiffPath, j: int, segment: Optional[tuple] = None) -> SampledFunction:
    """u_{t_j} = (d/dt phi)_{t_j} o phi_{t_j}^{-1}."""
    m = path.m
    if not 0 <= j <= m:
        raise IndexError("time index out of range")
    lo, hi = segment or next(sg for sg in path.segments if sg[0] <= j <= sg[1])
    t = path.times.nodes
    stack = np.zeros((m + 1, path.grid.n_points))
    for i in _stencil(j, hi, lo):
        stack[i] = np.asarray(path.maps[i].values)
    dphi = _time_derivative(stack, t, j, lo, hi)
    return field_from_maps(path.maps[j], dphi)


def _field_norm(u: SampledFunction, idx: SobolevIndex, homogeneous_only: bool) -> float:
    if homogeneous_only:
        return homogeneous_norm(u, idx)
    return wsp_norm(u, idx, estimate_error=False).total


def path_length(path: DiffPath, idx: SobolevIndex, homogeneous_only: bool = False,
                norm: Optional[Callable] = None) -> float:
    """Trapezoid rule in t of ||u_t|| (an upper bound for the distance)."""
    nf = norm or (lambda u: _field_norm(u, idx, homogeneous_only))
    t = path.times.nodes
    total = 0.0
    for lo, hi in path.segments:
        w = TimeGrid.from_nodes(t[lo:hi + 1]).weights()
        vals = np.array([nf(path.field(j, (lo, hi))) for j in range(lo, hi + 1)])
        total += float(np.sum(w * vals))
    return total


def path_norm_profile(path: DiffPath, idx: SobolevIndex, homogeneous_only: bool = False) -> np.ndarray:
    return np.array([_field_norm(path.field(j), idx, homogeneous_only) for j in range(path.m + 1)])


def concatenate(first: DiffPath, second: DiffPath) -> DiffPath:
    """Run ``first`` on [0, 1/2] and ``second`` on [1/2, 1].

    The shared node becomes a junction, so the length of the result is the
    sum of the two lengths.
    """
    if np.max(np.abs(np.asarray(first.maps[-1].values) - np.asarray(second.maps[0].values))) > 1e-12:
        raise ValueError("paths do not meet")
    t = np.concatenate([0.5 * first.times.nodes, 0.5 + 0.5 * second.times.nodes[1:]])
    junctions = ([j for j in first.junctions] + [first.m]
                 + [first.m + j for j in second.junctions])
    return DiffPath(TimeGrid.from_nodes(t), list(first.maps) + list(second.maps[1:]), tuple(junctions))


def right_translate(path: DiffPath, eta) -> DiffPath:
    """t -> phi_t o eta, which has the same Eulerian fields."""
    from .grids import compose

    return DiffPath(path.times, [compose(mp, eta) for mp in path.maps], path.junctions)


# ---------------------------------------------------------------------------
# flows


def _rk4(fun, t0, x0, dt):
    k1 = fun(t0, x0)
    k2 = fun(t0 + 0.5 * dt, x0 + 0.5 * dt * k1)
    k3 = fun(t0 + 0.5 * dt, x0 + 0.5 * dt * k2)
    k4 = fun(t0 + dt, x0 + dt * k3)
    return x0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def sampled_field_callback(fields: Sequence[SampledFunction], times: Sequence[float]) -> Callable:
    """Callback u(t, x): cubic splines in x, linear interpolation in t."""
    times = np.asarray(times, dtype=float)
    g = fields[0].grid
    if g.periodic:
        splines = [CubicSpline(np.append(g.nodes, 1.0), np.append(f.values, f.values[0]),
                               bc_type="periodic") for f in fields]
        wrap = lambda x: np.mod(x, 1.0)
    else:
        splines = [CubicSpline(g.nodes, f.values) for f in fields]
        wrap = lambda x: np.clip(x, 0.0, 1.0)

    def u(t, x):
        i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
        w = (t - times[i]) / (times[i + 1] - times[i])
        xx = wrap(x)
        return (1 - w) * splines[i](xx) + w * splines[i + 1](xx)

    return u


def flow_points(u: Callable, x0: np.ndarray, times: np.ndarray, substeps: int = 1) -> np.ndarray:
    """Positions of the points x0 along dx/dt = u(t, x), one row per time node."""
    out = np.empty((len(times), len(x0)))
    x = np.asarray(x0, dtype=float).copy()
    out[0] = x
    for j in range(len(times) - 1):
        dt = (times[j + 1] - times[j]) / substeps
        t = times[j]
        for _ in range(substeps):
            x = _rk4(u, t, x, dt)
            t += dt
        out[j + 1] = x
    return out


def flow(u: Union[Callable, Sequence[SampledFunction]], times: TimeGrid, grid: Grid1D,
         substeps: int = 1, field_times: Optional[Sequence[float]] = None) -> DiffPath:
    """Flow of a time-dependent field from the identity, classical RK4 per node.

    ``u`` is either a callback u(t, x) (x in [0, 1), periodic on the circle)
    or a list of sampled fields at ``field_times`` (default: ``times``).
    """
    if not callable(u):
        fields = list(u)
        u = sampled_field_callback(fields, field_times if field_times is not None else times.nodes)
    t = times.nodes
    if grid.periodic:
        cb = lambda tt, x: u(tt, np.mod(x, 1.0))
    else:
        cb = u
    traj = flow_points(cb, grid.nodes, t, substeps)
    maps = []
    for j, row in enumerate(traj):
        try:
            if grid.periodic:
                maps.append(CircleDiffeo(grid, row))
            else:
                row = row.copy()
                row[0], row[-1] = 0.0, 1.0
                maps.append(IntervalDiffeo(grid, row))
        except InvalidDiffeoError as exc:
            raise FlowError(f"monotonicity lost at t = {t[j]:.4g}; increase time steps or substeps") from exc
    return DiffPath(times, maps)


# ---------------------------------------------------------------------------
# explicit paths


def affine_path(target, times: Union[TimeGrid, int] = 128) -> DiffPath:
    """phi_t = (1 - t) id + t target."""
    if isinstance(times, int):
        times = TimeGrid(times)
    g = target.grid
    x = g.nodes
    v = np.asarray(target.values)
    kind = type(target)
    maps = [kind(g, (1 - t) * x + t * v) for t in times.nodes]
    maps[-1] = target
    return DiffPath(times, maps)


@dataclass(eq=False)
class SpherePath:
    """Normalized affine path f_t on the radius-q L^q sphere with its pullback."""

    f0: np.ndarray
    f1: np.ndarray
    q: float
    grid: Grid1D
    path: DiffPath

    def point(self, t: float) -> np.ndarray:
        g = (1 - t) * self.f0 + t * self.f1
        return self.q * g / lp_norm_values(self.grid, g, self.q)

    def velocity(self, t: float) -> np.ndarray:
        """d/dt f_t in closed form."""
        q = self.q
        g = (1 - t) * self.f0 + t * self.f1
        D = self.f1 - self.f0
        N = lp_norm_values(self.grid, g, q)
        dN = N ** (1 - q) * float(np.sum(self.grid.weights() * np.abs(g) ** (q - 2) * g * D))
        return q * (D / N - g * dN / N ** 2)

    def image_length(self, times: Optional[np.ndarray] = None) -> float:
        """L^q length of t -> f_t, trapezoid in t on the path's time nodes."""
        t = self.path.times.nodes if times is None else np.asarray(times)
        w = TimeGrid.from_nodes(t).weights()
        vals = [lp_norm_values(self.grid, self.velocity(tt), self.q) for tt in t]
        return float(np.sum(w * np.array(vals)))


def lenells_sphere_path(phi0: CircleDiffeo, phi1: CircleDiffeo, q: float,
                        times: Union[TimeGrid, int] = 128, with_sphere: bool = False):
    """Pull back the normalized affine path between the sphere images of phi0, phi1."""
    if isinstance(times, int):
        times = TimeGrid(times)
    g = phi0.grid
    f0 = lenells_forward(phi0, q).values
    f1 = lenells_forward(phi1, q).values
    sp = SpherePath(f0, f1, q, g, None)
    maps = []
    for t in times.nodes:
        ft = sp.point(t)
        if np.any(ft <= 0):
            raise ValueError("interpolant left the positive cone")
        maps.append(lenells_inverse(SampledFunction(g, ft), q))
    maps[0], maps[-1] = phi0, phi1
    path = DiffPath(times, maps)
    sp.path = path
    return (path, sp) if with_sphere else path


def h1dot_distance_closed_form(phi: CircleDiffeo, psi: CircleDiffeo) -> float:
    """arccos of int sqrt(phi') sqrt(psi') (printed convention, no factor 2).

    Derivatives are spectral; if either has a non-positive sample (features
    below grid resolution) the integral falls back to cell secants,
    sum sqrt(dphi dpsi), which is positive for any increasing sampled map.
    """
    a = derivative(phi).values
    b = derivative(psi).values
    if np.any(a <= 0) or np.any(b <= 0):
        da = np.diff(np.append(phi.values, phi.values[0] + 1.0))
        db = np.diff(np.append(psi.values, psi.values[0] + 1.0))
        inner = float(np.sum(np.sqrt(da * db)))
    else:
        inner = float(np.sum(phi.grid.weights() * np.sqrt(a) * np.sqrt(b)))
    return float(np.arccos(np.clip(inner, -1.0, 1.0)))


def h1dot_distance_from_densities(grid: Grid1D, a: np.ndarray, b: np.ndarray) -> float:
    """Same closed form from derivative samples (useful for unresolved data)."""
    inner = float(np.sum(grid.weights() * np.sqrt(a) * np.sqrt(b)))
    return float(np.arccos(np.clip(inner, -1.0, 1.0)))


# ---------------------------------------------------------------------------
# shortening


def _basis(grid: Grid1D, n_modes: int = 8) -> list:
    x = grid.nodes
    out = []
    if grid.periodic:
        for k in range(1, n_modes // 2 + 1):
            out.append(np.sin(2 * np.pi * k * x))
            out.append(np.cos(2 * np.pi * k * x))
    else:
        # endpoint-fixed quadratic B-splines on a uniform knot vector
        from scipy.interpolate import BSpline

        knots = np.concatenate([[0, 0], np.linspace(0, 1, n_modes + 1), [1, 1]])
        for i in range(n_modes + 1):
            c = np.zeros(n_modes + 1)
            c[i] = 1.0
            b = BSpline(knots, c, 2)(x)
            if abs(b[0]) < 1e-14 and abs(b[-1]) < 1e-14:
                out.append(b)
    return [b / np.max(np.abs(b)) for b in out]


def _valid(kind, grid, v):
    try:
        return kind(grid, v)
    except InvalidDiffeoError:
        return None


def path_shorten(path: DiffPath, idx: SobolevIndex, iters: int = 50, homogeneous_only: bool = False,
                 n_modes: int = 8, step: float = 0.02, tol: float = 1e-12,
                 rel_tol: float = 1e-7, norm: Optional[Callable] = None) -> DiffPath:
    """Coordinate descent on interior time slices; never increases the length.

    Directions per slice: a chord direction toward the affine interpolation of
    the endpoints, a direction toward the neighbor midpoint, and a small
    Fourier (circle) or endpoint-fixed B-spline (interval) basis. Steps that
    break monotonicity are rejected, and a step is kept only if it lowers the
    trapezoid length without raising the polygon length built from one-step
    differences.
    """
    nf = norm or (lambda u: _field_norm(u, idx, homogeneous_only))
    m = path.m
    t = path.times.nodes
    g = path.grid
    kind = type(path.maps[0])
    vals = [np.asarray(mp.values, dtype=float).copy() for mp in path.maps]
    maps = list(path.maps)
    basis = _basis(g, n_modes)

    # one entry per (node, segment) with its trapezoid weight
    entries, weights = [], []
    for lo, hi in path.segments:
        ws = TimeGrid.from_nodes(t[lo:hi + 1]).weights()
        for j in range(lo, hi + 1):
            entries.append((j, lo, hi))
            weights.append(ws[j - lo])
    weights = np.array(weights)

    def entry_norm(e, V, M):
        j, lo, hi = e
        stack = np.zeros((m + 1, g.n_points))
        for i in _stencil(j, hi, lo):
            stack[i] = V[i]
        return nf(field_from_maps(M[j], _time_derivative(stack, t, j, lo, hi)))

    def chord_norm(i, V):
        # polygon (midpoint) length of the interval [t_i, t_{i+1}]
        mid = kind(g, 0.5 * (V[i] + V[i + 1]))
        return (t[i + 1] - t[i]) * nf(field_from_maps(mid, (V[i + 1] - V[i]) / (t[i + 1] - t[i])))

    norms = np.array([entry_norm(e, vals, maps) for e in entries])
    poly = np.array([chord_norm(i, vals) for i in range(m)])
    affected = {i: [k for k, (j, lo, hi) in enumerate(entries) if i == j or i in _stencil(j, hi, lo)]
                for i in range(m + 1)}
    def try_global(direction, scales=(1.0, 0.5, 0.25)):
        nonlocal vals, maps, norms, poly
        for c in scales:
            V = [v + c * d for v, d in zip(vals, direction)]
            M = [_valid(kind, g, v) for v in V]
            if any(mp is None for mp in M):
                continue
            try:
                new = np.array([entry_norm(e, V, M) for e in entries])
                if np.sum(weights * new) >= np.sum(weights * norms) - tol:
                    continue
                new_poly = np.array([chord_norm(i, V) for i in range(m)])
            except (InvalidDiffeoError, ValueError):
                continue
            if np.sum(new_poly) <= np.sum(poly) + tol:
                vals, maps, norms, poly = V, M, new, new_poly
                return True
        return False

    steps = {}
    for _ in range(iters):
        before = float(np.sum(weights * norms))
        # whole-path move toward the straight interpolation of the endpoints
        straight = [np.zeros_like(vals[0])] + [
            (1 - t[j]) * vals[0] + t[j] * vals[-1] - vals[j] for j in range(1, m)] + [np.zeros_like(vals[0])]
        improved = try_global(straight)
        for j in range(1, m):
            chord = (1 - t[j]) * vals[0] + t[j] * vals[-1] - vals[j]
            mid = 0.5 * (vals[j - 1] + vals[j + 1]) - vals[j]
            dirs = [("chord", chord, (1.0, 0.5, 0.25)), ("mid", mid, (1.0, 0.5, 0.25))]
            dirs += [(f"b{i}", b, None) for i, b in enumerate(basis)]
            aff = affected[j]
            for name, d, fixed in dirs:
                if not np.any(d):
                    continue
                if fixed is None:
                    c = steps.get((j, name), step)
                    trials = (c, -c)
                else:
                    trials = fixed
                success = False
                for c in trials:
                    cand = vals[j] + c * d
                    mp = _valid(kind, g, cand)
                    if mp is None:
                        continue
                    V = list(vals)
                    V[j] = cand
                    M = list(maps)
                    M[j] = mp
                    try:
                        new = np.array([entry_norm(entries[k], V, M) for k in aff])
                        if np.sum(weights[aff] * new) >= np.sum(weights[aff] * norms[aff]) - tol:
                            continue
                        new_poly = np.array([chord_norm(i, V) for i in (j - 1, j)])
                    except (InvalidDiffeoError, ValueError):
                        continue
                    # the polygon length has no odd-even null mode, so requiring it
                    # not to grow keeps the descent from exploiting central differences
                    if np.sum(new_poly) <= poly[j - 1] + poly[j] + tol:
                        vals[j], maps[j] = cand, mp
                        norms[aff] = new
                        poly[j - 1], poly[j] = new_poly
                        success = improved = True
                        break
                if fixed is None:
                    steps[(j, name)] = (min(1.5 * abs(c), 0.5) if success
                                        else 0.5 * steps.get((j, name), step))
        after = float(np.sum(weights * norms))
        if not improved or before - after < rel_tol * after:
            break
    return DiffPath(path.times, maps, path.junctions)
