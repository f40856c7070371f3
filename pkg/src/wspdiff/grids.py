"""Uniform 1-D grids, sampled functions and sampled diffeomorphisms.

Circle maps are stored as lifts, interval maps as plain values. Composition
and inversion go through shape-preserving (PCHIP) interpolants so monotone
data stays monotone.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

CIRCLE = "circle"
INTERVAL = "interval"
LINE = "line"
DOMAINS = (CIRCLE, INTERVAL, LINE)

MIN_POINTS = 8


class InvalidDiffeoError(ValueError):
    """Raised when sampled data is not strictly increasing or badly normalized."""


class MollifierError(ValueError):
    """Raised when the smoothing width is too large for the linear pieces."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on the circle [0, L), the interval [0, L] or the line.

    ``line`` grids carry functions supported in [0, L] and extended by zero;
    they share nodes with ``interval`` grids. ``length`` defaults to 1 and is
    only changed by the rescaling operator.
    """

    n_points: int
    domain: str = CIRCLE
    length: float = 1.0

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise ValueError(f"need an integer n_points >= {MIN_POINTS}")
        if not (self.length > 0 and np.isfinite(self.length)):
            raise ValueError("length must be positive")

    @property
    def periodic(self) -> bool:
        return self.domain == CIRCLE

    @property
    def h(self) -> float:
        if self.periodic:
            return self.length / self.n_points
        return self.length / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_points) * self.h

    def weights(self) -> np.ndarray:
        """Trapezoid weights (uniform on the circle)."""
        w = np.full(self.n_points, self.h)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * self.h
        return w

    def scaled(self, factor: float) -> "Grid1D":
        return Grid1D(self.n_points, self.domain, self.length * factor)

    def refined(self, factor: int = 2) -> "Grid1D":
        if self.periodic:
            return Grid1D(self.n_points * factor, self.domain, self.length)
        return Grid1D((self.n_points - 1) * factor + 1, self.domain, self.length)

    def to_dict(self) -> dict:
        d = {"n": self.n_points, "domain": self.domain}
        if self.length != 1.0:
            d["length"] = self.length
        return d


def circle_grid(n: int) -> Grid1D:
    return Grid1D(n, CIRCLE)


def interval_grid(n: int) -> Grid1D:
    return Grid1D(n, INTERVAL)


def line_grid(n: int, length: float = 1.0) -> Grid1D:
    return Grid1D(n, LINE, length)


@dataclass(frozen=True)
class SampledFunction:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError("values do not match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid: Grid1D, fn: Callable) -> "SampledFunction":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float) * np.ones(grid.n_points))

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.grid, values)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, c):
        return self.with_values(self.values * _vals(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def __call__(self, x):
        """Evaluate the cubic (periodic on the circle) interpolant at x."""
        return _spline(self.grid, self.values)(x)


def _vals(o):
    return o.values if isinstance(o, SampledFunction) else o


def _spline(grid: Grid1D, values: np.ndarray):
    from scipy.interpolate import CubicSpline

    if grid.periodic:
        x = np.append(grid.nodes, grid.length)
        y = np.append(values, values[0])
        cs = CubicSpline(x, y, bc_type="periodic")
        return lambda t: cs(np.mod(t, grid.length))
    cs = CubicSpline(grid.nodes, values)

    def ev(t):
        t = np.asarray(t, dtype=float)
        out = cs(np.clip(t, 0.0, grid.length))
        if grid.domain == LINE:
            out = np.where((t < 0) | (t > grid.length), 0.0, out)
        return out

    return ev


# ---------------------------------------------------------------------------
# diffeomorphisms


@dataclass(frozen=True)
class CircleDiffeo:
    """Orientation-preserving circle map stored by its lift on [0, 1).

    The lift extends by lift(x + 1) = lift(x) + 1.
    """

    grid: Grid1D
    lift: np.ndarray

    def __post_init__(self):
        if not self.grid.periodic or self.grid.length != 1.0:
            raise InvalidDiffeoError("circle diffeos live on the unit circle grid")
        v = np.asarray(self.lift, dtype=float)
        if v.shape != (self.grid.n_points,) or not np.all(np.isfinite(v)):
            raise InvalidDiffeoError("lift must be finite and match the grid")
        steps = np.diff(np.append(v, v[0] + 1.0))
        if np.any(steps <= 0):
            raise InvalidDiffeoError("lift is not strictly increasing")
        v.setflags(write=False)
        object.__setattr__(self, "lift", v)

    @classmethod
    def identity(cls, grid: Grid1D) -> "CircleDiffeo":
        return cls(grid, grid.nodes.copy())

    @classmethod
    def from_callable(cls, grid: Grid1D, fn: Callable) -> "CircleDiffeo":
        return cls(grid, fn(grid.nodes))

    @property
    def values(self) -> np.ndarray:
        return self.lift

    def displacement(self) -> np.ndarray:
        return self.lift - self.grid.nodes

    def base_point_fixed(self, tol: float = 1e-12) -> bool:
        return abs(self.lift[0]) <= tol

    def winding(self) -> float:
        """Lift increment over one period, evaluated from the interpolant."""
        return float(self(1.0) - self(0.0))

    def with_values(self, values) -> "CircleDiffeo":
        return CircleDiffeo(self.grid, values)

    def interpolant(self):
        return _circle_pchip(self.grid.nodes, self.lift)

    def __call__(self, x):
        return self.interpolant()(x)


@dataclass(frozen=True)
class IntervalDiffeo:
    """Increasing map of [0, 1] fixing both endpoints."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        if self.grid.periodic or self.grid.length != 1.0:
            raise InvalidDiffeoError("interval diffeos live on the unit interval grid")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_points,) or not np.all(np.isfinite(v)):
            raise InvalidDiffeoError("values must be finite and match the grid")
        if np.any(np.diff(v) <= 0):
            raise InvalidDiffeoError("map is not strictly increasing")
        if abs(v[0]) > 1e-12 or abs(v[-1] - 1.0) > 1e-12:
            raise InvalidDiffeoError("endpoints must be fixed")
        v = v.copy()
        v[0], v[-1] = 0.0, 1.0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def identity(cls, grid: Grid1D) -> "IntervalDiffeo":
        return cls(grid, grid.nodes.copy())

    @classmethod
    def from_callable(cls, grid: Grid1D, fn: Callable) -> "IntervalDiffeo":
        return cls(grid, fn(grid.nodes))

    def displacement(self) -> np.ndarray:
        return self.values - self.grid.nodes

    def with_values(self, values) -> "IntervalDiffeo":
        return IntervalDiffeo(self.grid, values)

    def interpolant(self):
        p = PchipInterpolator(self.grid.nodes, self.values, extrapolate=False)
        return lambda x: p(np.clip(x, 0.0, 1.0))

    def __call__(self, x):
        return self.interpolant()(x)


Diffeo = Union[CircleDiffeo, IntervalDiffeo]


def _circle_pchip(nodes: np.ndarray, lift: np.ndarray, pad: int = 4):
    n = len(nodes)
    pad = min(pad, n)
    xs = np.concatenate([nodes[-pad:] - 1.0, nodes, nodes[:pad] + 1.0])
    ys = np.concatenate([lift[-pad:] - 1.0, lift, lift[:pad] + 1.0])
    p = PchipInterpolator(xs, ys)

    def ev(x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        return p(x - k) + k

    return ev


def is_valid(phi) -> bool:
    try:
        type(phi)(phi.grid, phi.values)
    except InvalidDiffeoError:
        return False
    return True


def identity_like(phi: Diffeo) -> Diffeo:
    return type(phi).identity(phi.grid)


def compose(outer: Diffeo, inner: Diffeo) -> Diffeo:
    """(outer o inner) sampled on the inner grid."""
    if type(outer) is not type(inner):
        raise InvalidDiffeoError("cannot compose maps on different domains")
    return type(inner)(inner.grid, outer(inner.values))


def _solve_monotone(f, df, y, lo, hi, tol=1e-12, max_iter=100):
    """Solve f(x) = y for increasing f on brackets [lo, hi].

    Newton steps are taken when they stay inside the current bracket,
    bisection otherwise, so convergence is unconditional.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    flo, fhi = f(lo) - y, f(hi) - y
    w = np.where(fhi > flo, -flo / np.where(fhi > flo, fhi - flo, 1.0), 0.5)
    x = lo + np.clip(w, 0.0, 1.0) * (hi - lo)
    for _ in range(max_iter):
        r = f(x) - y
        below = r < 0
        lo = np.where(below, x, lo)
        hi = np.where(below, hi, x)
        d = df(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - r / d
        ok = np.isfinite(xn) & (xn >= lo) & (xn <= hi)
        x_new = np.where(ok, xn, 0.5 * (lo + hi))
        step = np.abs(x_new - x)
        x = x_new
        if np.max(step, initial=0.0) < tol:
            break
    return x


def invert(phi: Diffeo) -> Diffeo:
    """Inverse map by bisection on the monotone interpolant."""
    grid = phi.grid
    y = grid.nodes
    if isinstance(phi, IntervalDiffeo):
        xs, vs = grid.nodes, phi.values
        p = PchipInterpolator(xs, vs)
        j = np.clip(np.searchsorted(vs, y, side="right") - 1, 0, grid.n_points - 2)
        x = _solve_monotone(p, p.derivative(), y, xs[j], xs[j + 1])
        x[0], x[-1] = 0.0, 1.0
        return IntervalDiffeo(grid, x)
    if not isinstance(phi, CircleDiffeo):
        raise InvalidDiffeoError("expected a sampled diffeo")
    # interpolate and bracket on a three-period copy of the lift
    xs = np.concatenate([grid.nodes - 1.0, grid.nodes, grid.nodes + 1.0, [2.0]])
    vs = np.concatenate([phi.lift - 1.0, phi.lift, phi.lift + 1.0, [phi.lift[0] + 2.0]])
    pad = min(4, grid.n_points)
    p = PchipInterpolator(np.concatenate([grid.nodes[-pad:] - 2.0, xs, grid.nodes[1:pad] + 2.0]),
                          np.concatenate([phi.lift[-pad:] - 2.0, vs, phi.lift[1:pad] + 2.0]))
    j = np.searchsorted(vs, y, side="right") - 1
    if np.any(j < 0) or np.any(j >= len(xs) - 1):
        raise InvalidDiffeoError("lift displacement exceeds one period")
    x = _solve_monotone(p, p.derivative(), y, xs[j], xs[j + 1])
    return CircleDiffeo(grid, x)


# ---------------------------------------------------------------------------
# differentiation


def _fd_first(v: np.ndarray, h: float) -> np.ndarray:
    n = len(v)
    d = np.empty(n)
    d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    d[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * h)
    d[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / (12 * h)
    d[-1] = -(-25 * v[-1] + 48 * v[-2] - 36 * v[-3] + 16 * v[-4] - 3 * v[-5]) / (12 * h)
    d[-2] = -(-3 * v[-1] - 10 * v[-2] + 18 * v[-3] - 6 * v[-4] + v[-5]) / (12 * h)
    return d


def _spectral_first(v: np.ndarray, length: float) -> np.ndarray:
    n = len(v)
    k = 2j * np.pi * np.fft.rfftfreq(n, d=length / n)
    c = np.fft.rfft(v) * k
    if n % 2 == 0:
        c[-1] = 0.0  # Nyquist mode has no real derivative
    return np.fft.irfft(c, n)


def derivative_values(grid: Grid1D, values: np.ndarray) -> np.ndarray:
    if grid.periodic:
        return _spectral_first(values, grid.length)
    return _fd_first(np.asarray(values, dtype=float), grid.h)


def derivative(f, order: int = 1):
    """Derivative of a sampled function or of a diffeo (returned as a function).

    Spectral on the circle, fourth-order central differences with five-point
    one-sided closures on the interval and line.
    """
    grid = f.grid
    if isinstance(f, CircleDiffeo):
        v = derivative_values(grid, f.displacement()) + 1.0
    else:
        v = derivative_values(grid, np.asarray(f.values))
    for _ in range(order - 1):
        v = derivative_values(grid, v)
    return SampledFunction(grid, v)


def antiderivative_circle(grid: Grid1D, g: np.ndarray) -> np.ndarray:
    """Cumulative integral from 0 of a periodic sample, node by node.

    Cell integrals use the four-point cubic rule; if any cell integral of a
    positive integrand comes out nonpositive (unresolved spikes) the plain
    trapezoid rule is used instead so monotonicity survives.
    """
    h = grid.h
    g = np.asarray(g, dtype=float)
    cells = h * (-np.roll(g, 1) + 13 * g + 13 * np.roll(g, -1) - np.roll(g, -2)) / 24
    if np.all(g > 0) and np.any(cells <= 0):
        cells = 0.5 * h * (g + np.roll(g, -1))
    out = np.empty(len(g) + 1)
    out[0] = 0.0
    out[1:] = np.cumsum(cells)
    return out


# ---------------------------------------------------------------------------
# mollification


def bump(u):
    """Unit-mass bump exp(1/(u^2 - 1)) on (-1, 1)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m = np.abs(u) < 1
    out[m] = np.exp(1.0 / (u[m] ** 2 - 1.0))
    return out / _bump_mass()


@lru_cache(maxsize=None)
def _bump_mass() -> float:
    from scipy.integrate import simpson

    u = np.linspace(-1.0, 1.0, 2 ** 15 + 1)[1:-1]
    return float(simpson(np.exp(1.0 / (u * u - 1.0)), x=u))


@lru_cache(maxsize=None)
def _ramp_tables():
    # F0 = cdf of the bump, F1 = partial first moment, tabulated on [-1, 1]
    u = np.linspace(-1.0, 1.0, 2 ** 15 + 1)
    eta = bump(u)
    F0 = cumulative_simpson(eta, x=u, initial=0.0)
    F1 = cumulative_simpson(u * eta, x=u, initial=0.0)
    F0 /= F0[-1]
    F1 -= F1[-1] * F0  # the full first moment is zero by symmetry
    return CubicHermiteSpline(u, F0, eta), CubicHermiteSpline(u, F1, u * eta)


def smoothed_ramp(v):
    """(max(., 0) * bump)(v) for the unit-width bump."""
    v = np.asarray(v, dtype=float)
    F0, F1 = _ramp_tables()
    vc = np.clip(v, -1.0, 1.0)
    inner = v * F0(vc) - F1(vc)
    return np.where(v >= 1.0, v, np.where(v <= -1.0, 0.0, inner))


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise-linear function through (breaks[i], values[i]).

    Outside the breaks it continues with the first/last slope.
    """

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or b.shape != v.shape or len(b) < 2 or np.any(np.diff(b) <= 0):
            raise ValueError("breaks must be increasing and match values")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breaks)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        b, v, s = self.breaks, self.values, self.slopes
        y = np.interp(x, b, v)
        y = np.where(x < b[0], v[0] + s[0] * (x - b[0]), y)
        return np.where(x > b[-1], v[-1] + s[-1] * (x - b[-1]), y)

    def shortest_piece(self) -> float:
        return float(np.min(np.diff(self.breaks)))

    def mollified(self, h: float, check: bool = True) -> Callable:
        """Exact convolution with the bump of half-width h, as a callable."""
        if h <= 0:
            raise MollifierError("smoothing width must be positive")
        if check and h >= 0.5 * self.shortest_piece():
            raise MollifierError("smoothing width too large for the linear pieces")
        b = self.breaks[1:-1]
        jumps = np.diff(self.slopes)
        keep = jumps != 0
        b, jumps = b[keep], jumps[keep]

        def ev(x):
            x = np.asarray(x, dtype=float)
            y = self(x)
            if len(b) == 0:
                return y
            flat = x.reshape(-1)
            out = y.reshape(-1).copy()
            lo = np.searchsorted(b, flat - h, side="left")
            hi = np.searchsorted(b, flat + h, side="right")
            for j in range(int(np.max(hi - lo, initial=0))):
                idx = np.nonzero(lo + j < hi)[0]
                k = lo[idx] + j
                d = flat[idx] - b[k]
                out[idx] += jumps[k] * (h * smoothed_ramp(d / h) - np.maximum(d, 0.0))
            return out.reshape(x.shape)

        return ev


def _pl_extended(phi) -> PiecewiseLinear:
    """Linear interpolant of the samples extended past the domain.

    Interval maps use odd reflection through both fixed endpoints, circle lifts
    and plain functions on the circle use the periodic extension, plain
    functions on the interval or line keep their end slopes.
    """
    g = phi.grid
    x = g.nodes
    if isinstance(phi, IntervalDiffeo):
        v = phi.values
        xe = np.concatenate([-x[:0:-1], x, 2.0 - x[-2::-1]])
        ve = np.concatenate([-v[:0:-1], v, 2.0 - v[-2::-1]])
        return PiecewiseLinear(xe, ve)
    if g.periodic:
        L = g.length
        v = phi.lift if isinstance(phi, CircleDiffeo) else phi.values
        shift = 1.0 if isinstance(phi, CircleDiffeo) else 0.0
        xe = np.concatenate([x - L, x, x + L, [2 * L]])
        ve = np.concatenate([v - shift, v, v + shift, [v[0] + 2 * shift]])
        return PiecewiseLinear(xe, ve)
    return PiecewiseLinear(x, phi.values)


def mollify(obj, h: float):
    """Convolve with the unit-mass bump of half-width h.

    ``obj`` is a :class:`PiecewiseLinear` (returns a callable, checks h
    against the shortest piece), or a sampled function or diffeo, which is
    treated as the linear interpolant of its samples and returned as the same
    kind on the same grid.
    """
    if isinstance(obj, PiecewiseLinear):
        return obj.mollified(h)
    if h <= 0:
        raise MollifierError("smoothing width must be positive")
    if not obj.grid.periodic and h >= 0.5 * obj.grid.length:
        raise MollifierError("smoothing width too large for the domain")
    sm = _pl_extended(obj).mollified(h, check=False)
    v = sm(obj.grid.nodes)
    if isinstance(obj, IntervalDiffeo):
        v[0], v[-1] = 0.0, 1.0
        return IntervalDiffeo(obj.grid, v)
    if isinstance(obj, CircleDiffeo):
        return CircleDiffeo(obj.grid, v)
    return SampledFunction(obj.grid, v)


def sample_piecewise_linear(breaks: Sequence[float], values: Sequence[float], grid: Grid1D,
                            h: float = 0.0, kind: str = "function"):
    """Sample a (mollified when h > 0) piecewise-linear map on ``grid``.

    ``kind`` selects the return type: ``function``, ``interval`` (diffeo) or
    ``circle`` (lift).
    """
    pl = PiecewiseLinear(np.asarray(breaks), np.asarray(values))
    if kind == "interval":
        # reflect so the endpoints stay fixed after smoothing
        b, v = pl.breaks, pl.values
        pl = PiecewiseLinear(np.concatenate([-b[:0:-1], b, 2 - b[-2::-1]]),
                             np.concatenate([-v[:0:-1], v, 2 - v[-2::-1]]))
    elif kind == "circle":
        b, v = pl.breaks, pl.values
        pl = PiecewiseLinear(np.concatenate([b[:-1] - 1, b, b[1:] + 1]),
                             np.concatenate([v[:-1] - 1, v, v[1:] + 1]))
    if h > 0:
        if h >= 0.5 * PiecewiseLinear(np.asarray(breaks), np.asarray(values)).shortest_piece():
            raise MollifierError("smoothing width too large for the linear pieces")
        ev = pl.mollified(h, check=False)
    else:
        ev = pl
    vals = ev(grid.nodes)
    if kind == "interval":
        vals[0], vals[-1] = 0.0, 1.0
        return IntervalDiffeo(grid, vals)
    if kind == "circle":
        return CircleDiffeo(grid, vals)
    return SampledFunction(grid, vals)
