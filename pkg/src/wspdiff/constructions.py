"""Named maps, fields and closed-form quantities.

The contraction map psi has slope ``Lambda`` on [0, (1 - delta)/Lambda] and
maps that piece onto [0, 1 - delta]; the rest of [0, 1] is mapped linearly
onto [1 - delta, 1]. Formulas for its affine homotopy are written in terms of
lam = Lambda - 1, which keeps them short.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .grids import (CircleDiffeo, Grid1D, IntervalDiffeo, SampledFunction, _ramp_tables,
                    circle_grid, compose, derivative, interval_grid, invert,
                    sample_piecewise_linear, smoothed_ramp)
from .lenells import lenells_forward, lenells_inverse, sphere_point  # noqa: F401
from .paths import DiffPath, TimeGrid, flow_points
from .radial import RadialDim, RadialProfile, radial_lift_field

__all__ = [
    "PsiParams", "make_psi", "AppendixField", "appendixA_field", "RegionIntegrals",
    "appendixA_region_integrals", "appendixA_region_bounds", "appendixA_region_quadrature",
    "appendixA_seminorm", "appendixA_total_length", "appendixA_envelope_constant",
    "make_u_alpha_eps", "u_alpha_eps", "displacement_time", "displacement_pair",
    "lenells_forward", "lenells_inverse", "spike_pair", "spike_distance", "support_split",
    "translation", "translation_path", "RadialMap", "make_radial_psi", "radial_field_profile", "radial_step_field",
    "secant_max_slope", "DisplacementPair", "ball_u_alpha_eps", "commutator_pair", "composed_density",
    "DensityMap",
]


# ---------------------------------------------------------------------------
# contraction map and its affine homotopy


@dataclass(frozen=True)
class PsiParams:
    slope: float  # Lambda
    delta: float

    def __post_init__(self):
        if not self.slope >= 1:
            raise ValueError("slope must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def lam(self) -> float:
        return self.slope - 1.0

    @property
    def kink(self) -> float:
        return (1 - self.delta) / self.slope

    @property
    def second_slope(self) -> float:
        return self.delta * self.slope / (self.slope - 1 + self.delta)

    def breaks(self):
        return [0.0, self.kink, 1.0], [0.0, 1 - self.delta, 1.0]


def make_psi(params: PsiParams, mollify_h: float = 0.0, grid: Optional[Grid1D] = None,
             n_points: int = 2049) -> IntervalDiffeo:
    """psi sampled on an interval grid, smoothed at its kink when mollify_h > 0."""
    grid = grid or interval_grid(n_points)
    b, v = params.breaks()
    if params.slope == 1:
        return IntervalDiffeo.identity(grid)
    return sample_piecewise_linear(b, v, grid, mollify_h, kind="interval")


@dataclass(frozen=True)
class AppendixField:
    """u_t and u_t' for the affine homotopy from Id to psi at time t."""

    t: float
    params: PsiParams
    breakpoint: float
    slope_left: float
    slope_right: float

    def u(self, y):
        y = np.asarray(y, dtype=float)
        ys = self.breakpoint
        left = self.slope_left * y
        right = -self.slope_right * (1 - y)
        out = np.where(y < ys, left, right)
        return np.where((y < 0) | (y > 1), 0.0, out)

    def du(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y < self.breakpoint, self.slope_left, self.slope_right)
        return np.where((y < 0) | (y > 1), 0.0, out)

    __call__ = u


def appendixA_field(t: float, params: PsiParams) -> AppendixField:
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    lam, d = params.lam, params.delta
    ys = (1 - d) * (1 + lam * t) / (lam + 1)
    a = lam / (1 + lam * t)
    b = -lam * (1 - d) / (lam + d - t * lam * (1 - d))
    return AppendixField(t, params, ys, a, b)


@dataclass(frozen=True)
class RegionIntegrals:
    """Ordered-pair region integrals of |u'(x) - u'(x+s)|^p s^{-1-sigma p}, s > 0.

    I1: x < 0, x+s left of the breakpoint.  I2: x < 0, x+s right of it.
    I3: x left, x+s right.  I4: x right, x+s > 1.  I5: x left, x+s > 1.
    The full seminorm^p over R x R is 2 (I1 + ... + I5).
    """

    I1: float
    I2: float
    I3: float
    I4: float
    I5: float

    def as_tuple(self):
        return (self.I1, self.I2, self.I3, self.I4, self.I5)

    @property
    def seminorm_power(self) -> float:
        return 2.0 * float(sum(self.as_tuple()))


def _check_sp(sigma, p):
    if not (sigma > 0 and p > 1):
        raise ValueError("need sigma > 0 and p > 1")
    if sigma * p >= 1:
        raise ValueError("closed forms need sigma * p < 1")


def appendixA_region_integrals(t: float, params: PsiParams, sigma: float, p: float) -> RegionIntegrals:
    """Exact values of the five region integrals."""
    _check_sp(sigma, p)
    f = appendixA_field(t, params)
    a = 1 - sigma * p
    c = 1.0 / (a * sigma * p)
    A, B, ys = abs(f.slope_left), abs(f.slope_right), f.breakpoint
    return RegionIntegrals(
        A ** p * c * ys ** a,
        B ** p * c * (1 - ys ** a),
        (A + B) ** p * c * (ys ** a + (1 - ys) ** a - 1),
        B ** p * c * (1 - ys) ** a,
        A ** p * c * (1 - (1 - ys) ** a),
    )


def appendixA_region_bounds(t: float, params: PsiParams, sigma: float, p: float) -> RegionIntegrals:
    """Upper bounds for the region integrals that only involve t, lam and delta.

    The middle region uses |A + B|^p <= p (A^p + B^p), which is the convexity
    bound 2^{p-1} (A^p + B^p) for p = 2 and fails to be an upper bound for
    p > 2 in general. The fifth region is bounded like the first one.
    """
    _check_sp(sigma, p)
    lam, d = params.lam, params.delta
    a = 1 - sigma * p
    c = 1.0 / (a * sigma * p)
    left = (t + 1 / lam) ** (-p + a) if lam > 0 else 0.0
    right = (d + (1 - d) * (1 - t)) ** (-p + a)
    b1 = c * left
    b2 = (1 - d) ** p * c * right
    b3 = (left + right) / (a * sigma)
    return RegionIntegrals(b1, b2, b3, b2, b1)


def appendixA_region_quadrature(t: float, params: PsiParams, sigma: float, p: float,
                                epsrel: float = 1e-8) -> RegionIntegrals:
    """Adaptive 2-D quadrature of each region, integrating the actual field."""
    _check_sp(sigma, p)
    f = appendixA_field(t, params)
    ys = f.breakpoint
    sp = sigma * p
    inf = np.inf

    def ker(x, s):
        return abs(float(f.du(x)) - float(f.du(x + s))) ** p * s ** (-1 - sp)

    def by_partner(lo, hi):
        # x < 0 and y = x + s in (lo, hi): integrate s over (y, inf)
        return integrate.dblquad(lambda s, y: ker(y - s, s), lo, hi, lambda y: y, lambda y: inf,
                                 epsrel=epsrel, epsabs=0)[0]

    I1 = by_partner(0.0, ys)
    I2 = by_partner(ys, 1.0)
    I3 = integrate.dblquad(lambda s, x: ker(x, s), 0.0, ys, lambda x: ys - x, lambda x: 1 - x,
                           epsrel=epsrel, epsabs=0)[0]
    I4 = integrate.dblquad(lambda s, x: ker(x, s), ys, 1.0, lambda x: 1 - x, lambda x: inf,
                           epsrel=epsrel, epsabs=0)[0]
    I5 = integrate.dblquad(lambda s, x: ker(x, s), 0.0, ys, lambda x: 1 - x, lambda x: inf,
                           epsrel=epsrel, epsabs=0)[0]
    return RegionIntegrals(I1, I2, I3, I4, I5)


def appendixA_seminorm(t: float, params: PsiParams, sigma: float, p: float) -> float:
    """Exact Gagliardo seminorm of u_t' (zero extension to the line)."""
    return appendixA_region_integrals(t, params, sigma, p).seminorm_power ** (1 / p)


def _graded_panels(params: PsiParams, levels: int = 40) -> np.ndarray:
    g = 2.0 ** -np.arange(1, levels + 1)
    pts = {0.0, 1.0, 0.5, *g, *(1 - g)}
    lam = params.lam
    if lam > 0:
        pts |= {min(1.0, k / lam) for k in (0.25, 0.5, 1, 2, 4)}
    return np.array(sorted(pts))


def appendixA_total_length(params: PsiParams, sigma: float, p: float, t_quad: int = 8) -> float:
    """int_0^1 ||u_t'||_{W^{sigma,p}} dt with the exact seminorm.

    Gauss-Legendre with ``t_quad`` nodes on panels graded geometrically toward
    both ends of [0, 1], where the integrand has integrable power behaviour.
    """
    _check_sp(sigma, p)
    edges = _graded_panels(params)
    z, w = np.polynomial.legendre.leggauss(t_quad)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        ts = lo + 0.5 * (hi - lo) * (z + 1)
        vals = np.array([appendixA_seminorm(t, params, sigma, p) for t in ts])
        total += 0.5 * (hi - lo) * float(np.sum(w * vals))
    return total


def appendixA_envelope_constant(params: PsiParams, sigma: float, p: float, n_t: int = 400) -> float:
    """Smallest C with ||u_t'|| <= C (t^{-1+a/p} + (1-t)^{-1+a/p}) on a t sample,
    a = 1 - sigma p. The envelope integrates to 2 C p / a."""
    a = 1 - sigma * p
    e = -1 + a / p
    t = np.concatenate([np.geomspace(1e-8, 0.5, n_t // 2), 1 - np.geomspace(1e-8, 0.5, n_t // 2)])
    vals = np.array([appendixA_seminorm(ti, params, sigma, p) for ti in t])
    return float(np.max(vals / (t ** e + (1 - t) ** e)))


# ---------------------------------------------------------------------------
# displacement on the circle


def _smooth_sign(v):
    F0 = _ramp_tables()[0]
    return 2 * F0(np.clip(v, -1.0, 1.0)) - 1


def u_alpha_eps(alpha: float, eps: float, h: Optional[float] = None) -> Callable:
    """x^{1-alpha} with linear pieces to 0 at 0 ~ 1, as a 1-periodic callable.

    The kinks at eps and 3/4 are smoothed with the bump of half-width h
    (default eps/4); the corner at 0 ~ 1 is smoothed by x S(x/h) with a smooth
    sign S, which keeps u(0) = 0.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    h = eps / 4 if h is None else h
    if h > 0 and h >= eps / 2:
        raise ValueError("smoothing width too large")
    c = 4 * 0.75 ** (1 - alpha)
    s_eps_l, s_eps_r = eps ** -alpha, (1 - alpha) * eps ** -alpha
    s34_l, s34_r = (1 - alpha) * 0.75 ** -alpha, -c
    s0_l, s0_r = -c, eps ** -alpha

    def raw(x):
        return np.where(x < eps, eps ** -alpha * x,
                        np.where(x < 0.75, np.maximum(x, eps) ** (1 - alpha), c * (1 - x)))

    def ev(x):
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        y = raw(x)
        if h <= 0:
            return y
        for b, jump in ((eps, s_eps_r - s_eps_l), (0.75, s34_r - s34_l)):
            d = x - b
            near = np.abs(d) < h
            y = np.where(near, y + jump * (h * smoothed_ramp(d / h) - np.maximum(d, 0.0)), y)
        # corner at 0 ~ 1, written in the signed distance to 0
        d = np.where(x > 0.5, x - 1.0, x)
        near = np.abs(d) < h
        half = 0.5 * (s0_r - s0_l)
        corr = half * (d * _smooth_sign(d / h) - np.abs(d))
        return np.where(near, y + corr, y)

    return ev


def make_u_alpha_eps(alpha: float, eps: float, grid: Optional[Grid1D] = None,
                     n_points: int = 2048, h: Optional[float] = None) -> SampledFunction:
    grid = grid or circle_grid(n_points)
    return SampledFunction(grid, u_alpha_eps(alpha, eps, h)(grid.nodes))


def displacement_time(alpha: float) -> float:
    return 1.0 / (alpha * 2 ** alpha)


@dataclass(frozen=True)
class DisplacementPair:
    phi: CircleDiffeo
    psi: CircleDiffeo
    t0: float
    alpha: float
    eps: float

    def conjugation_defect(self, steps: int = 1024) -> float:
        """max over nodes of |phi(psi(x)) - (phi(x) + 1/2)| modulo 1.

        This is the conjugation identity in the form phi o psi = T_{1/2} o phi.
        phi is applied to psi(x) by flowing pointwise, so the check measures
        the round-trip error of the flows rather than interpolation of psi,
        which is far below grid resolution on most of the circle.
        """
        u = u_alpha_eps(self.alpha, self.eps)
        lhs = _flow_circle(lambda t, z: u(z), self.psi.values, self.t0, steps)
        rhs = self.phi.values + 0.5
        return float(np.max(np.abs(np.mod(lhs - rhs + 0.5, 1.0) - 0.5)))


def _flow_circle(u: Callable, x0: np.ndarray, t_end: float, steps: int = 1024) -> np.ndarray:
    times = np.linspace(0.0, t_end, steps + 1)
    return flow_points(u, np.asarray(x0, dtype=float), times)[-1]


def displacement_pair(alpha: float, eps: float, grid: Optional[Grid1D] = None,
                      n_points: int = 2048, steps: int = 1024) -> DisplacementPair:
    """phi = time-t0 flow of u_{alpha,eps} and psi = phi^{-1} o T_{1/2} o phi.

    Both are computed pointwise on the grid nodes by RK4 (psi by flowing
    phi(x) + 1/2 backward), not by interpolation.
    """
    grid = grid or circle_grid(n_points)
    u = u_alpha_eps(alpha, eps)
    t0 = displacement_time(alpha)
    x = grid.nodes
    fwd = _flow_circle(lambda t, z: u(z), x, t0, steps)
    phi = CircleDiffeo(grid, fwd)
    y = fwd + 0.5
    k = np.floor(y)
    back = _flow_circle(lambda t, z: -u(z), y - k, t0, steps) + k
    psi = CircleDiffeo(grid, back)
    return DisplacementPair(phi, psi, t0, alpha, eps)


def secant_max_slope(phi) -> float:
    """max over grid cells of the secant slope, a certified lower bound for max phi'."""
    g = phi.grid
    v = np.asarray(phi.values, dtype=float)
    if g.periodic:
        v = np.append(v, v[0] + 1.0)
    return float(np.max(np.diff(v)) / g.h)


# ---------------------------------------------------------------------------
# spikes on the L^q sphere


def spike_distance(q: float, height: float, eps: float) -> float:
    """Exact L^q distance between f = q and the unsmoothed normalized spike."""
    w = height ** -q
    c = (1 + eps ** q * (1 - w)) ** (-1 / q)
    val = abs(c * height - 1) ** q * w + (1 - w) * abs(1 - c * eps) ** q
    return float(q * val ** (1 / q))


def spike_pair(q: float, height: float, eps: float, grid: Optional[Grid1D] = None,
               n_points: int = 2048):
    """f = q and g = c q (height on (0, height^-q), eps elsewhere), smoothed.

    The smoothing half-width is min(eps, height^-q)/4 and c is computed on the
    grid so that ||g||_q = q exactly. Raises ValueError when the spike is
    narrower than 8 grid cells.
    """
    grid = grid or circle_grid(n_points)
    w = height ** -q
    if w < 8 * grid.h:
        raise ValueError("spike not resolved on this grid; use spike_distance")
    h = min(eps, w) / 4
    F0 = _ramp_tables()[0]
    x = grid.nodes

    def step(v):
        return F0(np.clip(v / h, -1.0, 1.0))

    # 1-periodic indicator of (0, w): images at -1, 0, 1 cover the smoothing windows
    ind = sum(step(x - k) - step(x - k - w) for k in (-1.0, 0.0, 1.0))
    raw = eps + (height - eps) * ind
    g = sphere_point(raw, grid, q)
    f = SampledFunction(grid, np.full(grid.n_points, float(q)))
    return f, SampledFunction(grid, g)


# ---------------------------------------------------------------------------
# support splitting on [0, 1]


def _as_interval(phi: CircleDiffeo) -> IntervalDiffeo:
    g = phi.grid
    lift = np.asarray(phi.values, dtype=float) - phi.values[0]
    return IntervalDiffeo(interval_grid(g.n_points + 1), np.append(lift, 1.0))


def support_split(phi, delta: float, tol: float = 1e-12):
    """Write phi = phi1 o phi2 with phi1 = Id on [1-delta, 1], phi2 = Id on [0, delta].

    If phi is the identity on a stretch of [delta, 1-delta], the cut is placed
    in its middle. Otherwise phi2 follows phi from some b >= 2 delta on and is
    blended into Id on [delta, b] through its derivative, with b picked to keep
    the blend density as flat as possible. Raises ValueError when delta is too
    large for phi.
    """
    if isinstance(phi, CircleDiffeo):
        if not phi.base_point_fixed(1e-10):
            raise ValueError("expected phi(0) = 0")
        phi = _as_interval(phi)
    g = phi.grid
    x = g.nodes
    v = np.asarray(phi.values, dtype=float)
    fixed = np.abs(v - x) <= tol
    inside = (x >= delta) & (x <= 1 - delta)
    run = fixed & inside
    if run.any():
        # longest run of fixed nodes
        idx = np.flatnonzero(run)
        splits = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate([[idx[0]], idx[splits + 1]])
        ends = np.concatenate([idx[splits], [idx[-1]]])
        k = int(np.argmax(ends - starts))
        cut = (starts[k] + ends[k]) // 2
        v2 = np.where(np.arange(len(x)) >= cut, v, x)
        v1 = np.where(np.arange(len(x)) < cut, v, x)
        return IntervalDiffeo(g, v1), IntervalDiffeo(g, v2)

    a = delta
    allowed = x[(x >= 2 * delta) & (x <= 1 - delta) & (v <= 1 - delta)]
    if 2 * delta >= 1 or not len(allowed):
        raise ValueError("delta too large for this map; shrink delta")
    d = derivative(phi).values
    ia = np.searchsorted(x, a)

    def blend(ib):
        xs = x[ia:ib + 1]
        s = (xs - xs[0]) / (xs[-1] - xs[0])
        wgt = _ramp_tables()[0](2 * s - 1)  # bump cdf: 0 -> 1, flat at both ends
        bumpf = (1 - (2 * s - 1) ** 2).clip(0) ** 2
        base = (1 - wgt) + wgt * d[ia:ib + 1]
        need = v[ib] - x[ia]

        def cum(f):
            return np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(xs))])

        # multiplicative mass correction keeps the density positive; the mass
        # is increasing in beta, so a root exists whenever need > 0
        mass = lambda beta: cum(base * np.exp(beta * bumpf))[-1] - need
        lo, hi = -1.0, 1.0
        while mass(lo) > 0 and lo > -700:
            lo *= 2
        while mass(hi) < 0 and hi < 700:
            hi *= 2
        if mass(lo) > 0 or mass(hi) < 0:
            return None, -np.inf
        dens = base * np.exp(optimize.brentq(mass, lo, hi, xtol=1e-14) * bumpf)
        return x[ia] + cum(dens), dens.min() / dens.max()

    # the blend window [delta, b] runs to the b that keeps its density flattest
    best = None
    for b in np.unique(np.linspace(allowed[0], allowed[-1], 16)):
        ib = int(np.searchsorted(x, b))
        vals, score = blend(ib)
        if best is None or score > best[0]:
            best = (score, ib, vals)
    if not np.isfinite(best[0]) or best[0] <= 0:
        raise ValueError("blend is not monotone; shrink delta")
    _, ib, vals = best
    v2 = v.copy()
    v2[:ia] = x[:ia]
    v2[ia:ib + 1] = vals
    v2[ib] = v[ib]
    phi2 = IntervalDiffeo(g, v2)
    phi1 = compose(phi, invert(phi2))
    v1 = np.asarray(phi1.values).copy()
    v1[x >= v[ib]] = x[x >= v[ib]]
    return IntervalDiffeo(g, v1), phi2


# ---------------------------------------------------------------------------
# translations


def translation(c: float, grid: Optional[Grid1D] = None, n_points: int = 2048) -> CircleDiffeo:
    if not 0 <= c < 1:
        raise ValueError("c must lie in [0, 1)")
    grid = grid or circle_grid(n_points)
    return CircleDiffeo(grid, grid.nodes + c)


def translation_path(c: float, grid: Optional[Grid1D] = None, times=128) -> DiffPath:
    """Flow of the constant field c for unit time."""
    grid = grid or circle_grid(2048)
    tg = times if isinstance(times, TimeGrid) else TimeGrid(int(times))
    return DiffPath(tg, [CircleDiffeo(grid, grid.nodes + t * c) for t in tg.nodes])


# ---------------------------------------------------------------------------
# radial contraction on the unit ball


@dataclass(frozen=True)
class RadialMap:
    """Psi(x) = psi(|x|) x/|x| on the closed unit ball."""

    profile: Callable
    dim: RadialDim

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = np.linalg.norm(pts, axis=-1)
        rs = np.where(r > 0, r, 1.0)
        return (self.profile(r) / rs)[..., None] * pts


def make_radial_psi(params: PsiParams, mollify_h: float = 0.0, n: int = 2,
                    n_points: int = 2049) -> RadialMap:
    psi = make_psi(params, mollify_h, n_points=n_points)
    return RadialMap(psi.interpolant(), RadialDim(n))


def radial_field_profile(t: float, params: PsiParams, n_points: int = 2049) -> RadialProfile:
    """The homotopy field u_t as a profile for the radial field lift."""
    f = appendixA_field(t, params)
    return RadialProfile.from_callable(f.u, n_points=n_points, support=(0.0, 1.0),
                                       allow_origin=True, breaks=(f.breakpoint,))


def radial_step_field(t: float, params: PsiParams, n: int = 2, n_points: int = 2049):
    return radial_lift_field(radial_field_profile(t, params, n_points), RadialDim(n))


def ball_u_alpha_eps(alpha: float, eps: float, n_points: int = 4097) -> RadialProfile:
    """Profile for the ball field U = u(|x|) x/|x|: zero on [0, eps/2], r^{1-alpha}
    on [eps, 2/3], zero from 3/4 on, with smooth bump-cdf transitions.

    Derivatives of the inner transition scale like eps^{1-alpha-j}.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    F0 = _ramp_tables()[0]

    def fn(r):
        inner = F0(np.clip((r - 0.75 * eps) / (0.25 * eps), -1.0, 1.0))
        outer = 1 - F0(np.clip((r - 17 / 24) / (1 / 24), -1.0, 1.0))
        return inner * outer * np.maximum(r, 1e-300) ** (1 - alpha)

    return RadialProfile.from_callable(fn, n_points=n_points, support=(eps / 2, 0.75),
                                       breaks=(eps, 2 / 3))


# ---------------------------------------------------------------------------
# non-commuting pair on the circle


def _smoothed_levels(x, breaks, levels, h):
    """1-periodic piecewise constant (levels[i] on [breaks[i], breaks[i+1])),
    convolved with the bump of half-width h. breaks[0] must be 0."""
    F0 = _ramp_tables()[0]
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, float(levels[-1]))
    prev = levels[-1]
    for b, v in zip(breaks, levels):
        for k in (-1.0, 0.0, 1.0):
            out = out + (v - prev) * F0(np.clip((x - b - k) / h, -1.0, 1.0))
        out = out - (v - prev) * 1.0  # the image at b - 1 is fully switched on for x in [0, 1)
        prev = v
    return out


@dataclass(frozen=True)
class DensityMap:
    """Circle diffeo given by a positive density of unit mass, with phi(0) = 0."""

    density: Callable
    diffeo: CircleDiffeo

    @classmethod
    def from_density(cls, density: Callable, grid: Grid1D) -> "DensityMap":
        from .grids import antiderivative_circle

        d = density(grid.nodes)
        cum = antiderivative_circle(grid, d)
        return cls(density, CircleDiffeo(grid, cum[:-1] / cum[-1]))


def commutator_pair(n: int, floor: float = 1e-3, grid: Optional[Grid1D] = None,
                    n_points: int = 2 ** 14, h: Optional[float] = None):
    """Smoothed maps with phi' = 0, 2, 1 on [0, 1/n), [1/n, 2/n), [2/n, 1) and
    psi' = n on [0, 1/n), 0 elsewhere.

    Densities are floor + (1 - floor) * (bump-smoothed levels), which keeps unit
    mass; the smoothing half-width defaults to 1/(16 n).
    """
    if n < 3:
        raise ValueError("need n >= 3")
    grid = grid or circle_grid(n_points)
    h = 1.0 / (16 * n) if h is None else h

    def dphi(x):
        return floor + (1 - floor) * _smoothed_levels(np.mod(x, 1.0), [0.0, 1 / n, 2 / n], [0.0, 2.0, 1.0], h)

    def dpsi(x):
        return floor + (1 - floor) * _smoothed_levels(np.mod(x, 1.0), [0.0, 1 / n], [float(n), 0.0], h)

    return DensityMap.from_density(dphi, grid), DensityMap.from_density(dpsi, grid)


def composed_density(outer: DensityMap, inner: DensityMap, x) -> np.ndarray:
    """(outer o inner)'(x) = outer'(inner(x)) inner'(x) using the exact densities."""
    y = inner.diffeo(x)
    return outer.density(np.mod(y, 1.0)) * inner.density(x)
