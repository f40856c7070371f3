"""Radial functions f(|x|) and radial fields f(|x|) x/|x| on the unit ball.

Norms are taken for the zero extension to R^n. Rotational symmetry reduces the
Gagliardo double integral to three variables: the radius r of x, the angle
gamma between the direction theta and x/|x|, and the distance rho along theta:

    [F]^p = omega_n int_0^1 r^{n-1} int_S ( int_0^{rho_max} |D^kF(x) - D^kF(x + rho theta)|^p
             rho^{-1-sigma p} d rho + 2 |D^kF(x)|^p rho_max^{-sigma p} / (sigma p) ) d theta dr

where rho_max is the distance from x to the unit sphere along theta. The
second term is the exact contribution of partners outside the ball.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .grids import Grid1D, SampledFunction, interval_grid, line_grid
from .norms import NormReport, SobolevIndex, UnsupportedConfigurationError

DEFAULT_SEED = 0x5EED


@dataclass(frozen=True)
class RadialDim:
    n: int

    def __post_init__(self):
        if self.n not in (2, 3):
            raise UnsupportedConfigurationError("only n = 2 and n = 3 are supported")

    @property
    def omega(self) -> float:
        """Measure of the unit (n-1)-sphere."""
        return 2 * np.pi if self.n == 2 else 4 * np.pi


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Profile on [0, 1] vanishing outside ``support``.

    ``allow_origin`` admits supports starting at 0 for profiles that vanish
    linearly at the origin (e.g. f(r) = c r near 0, which lifts to the smooth
    field c x).
    """

    r_grid: Grid1D
    values: np.ndarray
    support: tuple
    allow_origin: bool = False
    breaks: tuple = ()

    def __post_init__(self):
        if self.r_grid.periodic or self.r_grid.length != 1.0:
            raise ValueError("profiles live on the unit interval grid")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.r_grid.n_points,) or not np.all(np.isfinite(v)):
            raise ValueError("values must be finite and match the grid")
        a, b = map(float, self.support)
        if not (0 <= a < b <= 1):
            raise ValueError("support must be a sub-interval of [0, 1]")
        if (a <= 0 and not self.allow_origin) or b > 1 or (b == 1 and not self.allow_origin):
            raise ValueError("support must stay away from 0 and 1")
        x = self.r_grid.nodes
        outside = (x < a - 1e-12) | (x > b + 1e-12)
        if np.any(np.abs(v[outside]) > 1e-12 * max(1.0, np.max(np.abs(v)))):
            raise ValueError("profile does not vanish outside its support")
        v = np.where(outside, 0.0, v)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "support", (a, b))

    @classmethod
    def from_callable(cls, fn: Callable, n_points: int = 2049, support=(0.2, 0.8), **kw):
        g = interval_grid(n_points)
        x = g.nodes
        a, b = support
        v = np.where((x >= a) & (x <= b), fn(np.clip(x, a, b)), 0.0)
        return cls(g, v, support, **kw)

    @cached_property
    def spline(self) -> CubicSpline:
        return CubicSpline(self.r_grid.nodes, self.values)

    def __call__(self, r, nu: int = 0):
        r = np.asarray(r, dtype=float)
        a, b = self.support
        out = self.spline(np.clip(r, 0.0, 1.0), nu)
        return np.where((r < a) | (r > b), 0.0, out)

    def as_function(self, n_points: Optional[int] = None) -> SampledFunction:
        """The profile as a compactly supported function on the line."""
        if n_points is None:
            return SampledFunction(line_grid(self.r_grid.n_points), self.values)
        g = line_grid(n_points)
        return SampledFunction(g, self(g.nodes))


@dataclass(frozen=True, eq=False)
class RadialLift:
    profile: RadialProfile
    dim: RadialDim
    kind: str  # "function" or "field"

    def tensor(self, k: int, pts: np.ndarray) -> np.ndarray:
        """D^k of the lift at points ``pts`` of shape (N, n); returns (N, n, ..., n)."""
        f = self.profile
        n = self.dim.n
        r = np.linalg.norm(pts, axis=-1)
        tiny = r < 1e-12
        rs = np.where(tiny, 1.0, r)
        xh = pts / rs[:, None]
        xh[tiny] = np.eye(n)[0]
        I = np.eye(n)
        f0 = f(r)
        if k == 0:
            return f0 if self.kind == "function" else f0[:, None] * xh
        f1 = f(r, 1)
        if self.kind == "function":
            if k == 1:
                return f1[:, None] * xh
            if k == 2:
                f2 = f(r, 2)
                q = np.where(tiny, f2, f1 / rs)
                xx = xh[:, :, None] * xh[:, None, :]
                return f2[:, None, None] * xx + q[:, None, None] * (I - xx)
        else:
            g = np.where(tiny, f1, f0 / rs)  # f/r, with its limit at 0
            xx = xh[:, :, None] * xh[:, None, :]
            if k == 1:
                return f1[:, None, None] * xx + g[:, None, None] * (I - xx)
            if k == 2:
                f2 = f(r, 2)
                g1 = np.where(tiny, 0.5 * f2, f1 / rs - f0 / rs ** 2)
                g2 = f2 / rs - 2 * f1 / rs ** 2 + 2 * f0 / rs ** 3
                c3 = np.where(tiny, 0.0, g2 * r - g1)
                xxx = xx[:, :, :, None] * xh[:, None, None, :]
                sym = (I[None, :, :, None] * xh[:, None, None, :]
                       + xh[:, :, None, None] * I[None, None, :, :]
                       + I[None, :, None, :] * xh[:, None, :, None])
                return c3[:, None, None, None] * xxx + g1[:, None, None, None] * sym
        raise UnsupportedConfigurationError("derivative order above 2")

    def magnitude(self, k: int, r: np.ndarray) -> np.ndarray:
        pts = np.zeros((len(r), self.dim.n))
        pts[:, 0] = r
        t = self.tensor(k, pts)
        return np.sqrt(np.sum(t.reshape(len(r), -1) ** 2, axis=1))


def radial_lift_function(f: RadialProfile, dim: RadialDim) -> RadialLift:
    """Tf(x) = f(|x|)."""
    return RadialLift(f, dim, "function")


def radial_lift_field(f: RadialProfile, dim: RadialDim) -> RadialLift:
    """T~f(x) = f(|x|) x/|x|."""
    return RadialLift(f, dim, "field")


def _panels(prof: RadialProfile, extra: Sequence[float] = ()) -> np.ndarray:
    a, b = prof.support
    pts = {0.0, a, b, 1.0, *[float(e) for e in extra], *prof.breaks}
    return np.array(sorted(p for p in pts if 0 <= p <= 1))


def _composite_gauss(edges: np.ndarray, n_total: int):
    """Gauss-Legendre nodes/weights split over the panels given by ``edges``."""
    lens = np.diff(edges)
    keep = lens > 0
    lo, lens = edges[:-1][keep], lens[keep]
    per = max(4, int(np.ceil(n_total / len(lens))))
    z, w = np.polynomial.legendre.leggauss(per)
    x = (lo[:, None] + 0.5 * lens[:, None] * (z[None, :] + 1)).ravel()
    ww = (0.5 * lens[:, None] * w[None, :]).ravel()
    return x, ww


def _lp_parts(F: RadialLift, k: int, p: float, n_r: int):
    edges = _panels(F.profile)
    r, w = _composite_gauss(edges, max(n_r, 256))
    out = []
    for j in range(k + 1):
        m = F.magnitude(j, r)
        out.append((j, float((F.dim.omega * np.sum(w * np.abs(m) ** p * r ** (F.dim.n - 1))) ** (1 / p))))
    return out


def _geometry(r, mu, n):
    """Directions theta at angle acos(mu) from e1 and the exit distance rho_max."""
    rho_max = -r * mu + np.sqrt(np.maximum(1.0 - r * r * (1.0 - mu * mu), 0.0))
    return rho_max


def _integrand(F: RadialLift, k, sigma, p, r, mu, u, beta):
    """Reduced integrand for arrays r, mu, u of equal shape (flattened).

    Returns interior + exterior contributions per unit (r, theta, u) measure,
    without the omega_n r^{n-1} and sphere-measure factors.
    """
    n = F.dim.n
    sp = sigma * p
    rho_max = _geometry(r, mu, n)
    rho = rho_max * u ** beta
    drho = rho_max * beta * u ** (beta - 1)
    s = np.sqrt(np.maximum(1 - mu * mu, 0.0))
    x = np.zeros((len(r), n))
    x[:, 0] = r
    y = x.copy()
    y[:, 0] += rho * mu
    y[:, 1] += rho * s
    tx = F.tensor(k, x).reshape(len(r), -1)
    ty = F.tensor(k, y).reshape(len(r), -1)
    diff = np.sqrt(np.sum((tx - ty) ** 2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = np.where(rho > 0, diff ** p * rho ** (-1 - sp) * drho, 0.0)
        mag = np.sqrt(np.sum(tx ** 2, axis=1))
        ext = np.where(mag > 0, 2 * mag ** p * rho_max ** (-sp) / sp, 0.0)
    return inner + ext


def _fractional_quadrature(F: RadialLift, k, sigma, p, n_r, n_ang, n_rho, extra_breaks=()):
    """Deterministic product rule (n = 2): composite Gauss in r, midpoint in gamma,
    Gauss in u with rho = rho_max u^beta."""
    beta = max(1.0, 2.0 / (p * (1 - sigma)))
    edges = _panels(F.profile, extra_breaks)
    r, wr = _composite_gauss(edges, n_r)
    gam = (np.arange(n_ang) + 0.5) * np.pi / n_ang
    wg = 2 * np.pi / n_ang  # gamma over [0, 2 pi) folded onto [0, pi]
    z, wz = np.polynomial.legendre.leggauss(n_rho)
    u, wu = 0.5 * (z + 1), 0.5 * wz
    G, U = np.meshgrid(np.cos(gam), u, indexing="ij")
    G, U = G.ravel(), U.ravel()
    Wgu = (wg * np.repeat(np.ones(n_ang), n_rho) * np.tile(wu, n_ang))
    acc = np.empty(len(r))
    for i, (ri, wi) in enumerate(zip(r, wr)):
        vals = _integrand(F, k, sigma, p, np.full(G.shape, ri), G, U, beta)
        acc[i] = wi * ri ** (F.dim.n - 1) * np.sum(Wgu * vals)
    return F.dim.omega * float(np.sum(acc))


def _fractional_mc(F: RadialLift, k, sigma, p, samples, seed, n_strata=(64, 4, 4), extra_breaks=()):
    """Stratified Monte Carlo (n = 3) over a product of strata in r, mu = cos(gamma)
    and u, with equal samples per stratum."""
    beta = max(1.0, 2.0 / (p * (1 - sigma)))
    rng = np.random.default_rng(seed)
    nr, nm, nu = n_strata
    m = max(2, samples // (nr * nm * nu))
    sphere = 2 * np.pi  # azimuth around e1; mu ranges over [-1, 1]
    vol = (1.0 / nr) * (2.0 / nm) * (1.0 / nu)
    est, var = 0.0, 0.0
    r_lo = np.arange(nr) / nr
    mu_lo = -1.0 + 2.0 * np.arange(nm) / nm
    u_lo = np.arange(nu) / nu
    R, M, U = (a.ravel() for a in np.meshgrid(r_lo, mu_lo, u_lo, indexing="ij"))
    for lo_r, lo_mu, lo_u in zip(R, M, U):
        r = lo_r + rng.uniform(0.0, 1.0 / nr, m)
        mu = lo_mu + rng.uniform(0.0, 2.0 / nm, m)
        u = lo_u + rng.uniform(0.0, 1.0 / nu, m)
        vals = _integrand(F, k, sigma, p, r, mu, u, beta) * r ** (F.dim.n - 1) * sphere
        est += vol * float(np.mean(vals))
        var += vol ** 2 * float(np.var(vals, ddof=1)) / m
    return F.dim.omega * est, F.dim.omega * np.sqrt(var)


def radial_wsp_norm(F: RadialLift, idx: SobolevIndex, n_r: int = 128, n_ang: int = 64,
                    n_rho: int = 64, mc_samples: int = 2 ** 20, seed: int = DEFAULT_SEED,
                    extra_breaks: Sequence[float] = ()) -> NormReport:
    """W^{s,p}(R^n) norm of a radial lift, s <= 2.

    n = 2 uses the deterministic product rule; n = 3 uses stratified Monte
    Carlo for the fractional part and reports its standard error.
    """
    if idx.s > 2 + 1e-12:
        raise UnsupportedConfigurationError("s > 2 is not supported for radial lifts")
    k, sigma, p = idx.k, idx.sigma, idx.p
    integer_parts = _lp_parts(F, k, p, n_r)
    lp_part = float(sum(v for _, v in integer_parts))
    parts = []
    meta = {"dim": F.dim.n, "kind": F.kind, "est_rel_err": 0.0}
    if idx.caveat:
        meta["caveat"] = idx.caveat
    if sigma > 0:
        if F.dim.n == 2:
            val = _fractional_quadrature(F, k, sigma, p, n_r, n_ang, n_rho, extra_breaks)
            meta["grid"] = {"n_r": n_r, "n_ang": n_ang, "n_rho": n_rho}
        else:
            val, se = _fractional_mc(F, k, sigma, p, mc_samples, seed, extra_breaks=extra_breaks)
            meta["grid"] = {"mc_samples": mc_samples}
            meta["mc_seed"] = seed
            # standard error of the seminorm via the delta method
            meta["mc_stderr"] = se / (p * max(val, 1e-300) ** (1 - 1 / p)) if val > 0 else se
            meta["mc_power_stderr"] = se
            meta["est_rel_err"] = meta["mc_stderr"] / max(val ** (1 / p), 1e-300)
        parts.append((idx.s, float(max(val, 0.0) ** (1 / p))))
    else:
        meta["grid"] = {"n_r": max(n_r, 256)}
    total = lp_part + float(sum(v for _, v in parts))
    return NormReport(idx.s, p, F.dim.n, lp_part, parts, total, integer_parts, meta)


def lp_norm_exact(f: RadialProfile, dim: RadialDim, p: float) -> float:
    """omega_n int |f|^p r^{n-1} dr by adaptive quadrature."""
    from scipy.integrate import quad

    a, b = f.support
    val = quad(lambda r: abs(float(f(r))) ** p * r ** (dim.n - 1), a, b, limit=400,
               epsabs=1e-14, epsrel=1e-12)[0]
    return float((dim.omega * val) ** (1 / p))
