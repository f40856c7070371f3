"""Registered experiments: each returns rows plus pass/fail verdicts."""
from __future__ import annotations

import csv
import io
import json
import platform
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy

from . import __version__
from .constructions import (PsiParams, appendixA_envelope_constant, appendixA_field,
                            appendixA_region_integrals, appendixA_region_quadrature,
                            appendixA_total_length, ball_u_alpha_eps, commutator_pair,
                            composed_density, displacement_pair, displacement_time,
                            make_psi, make_u_alpha_eps, radial_step_field, secant_max_slope,
                            spike_distance, support_split, translation_path)
from .grids import (CircleDiffeo, InvalidDiffeoError, MollifierError, SampledFunction,
                    antiderivative_circle, circle_grid, compose, derivative, invert, line_grid)
from .norms import (SobolevIndex, UnsupportedConfigurationError, critical_embedding_ratio,
                    homogeneous_norm, lp_norm, scaling_op, wsp_norm)
from .paths import (DiffPath, FlowError, TimeGrid, affine_path, flow, h1dot_distance_closed_form,
                    h1dot_distance_from_densities, lenells_sphere_path, path_length,
                    path_shorten)
from .radial import (DEFAULT_SEED, RadialDim, RadialProfile, lp_norm_exact, radial_lift_field,
                     radial_lift_function, radial_wsp_norm)


class ExperimentError(ValueError):
    """Unknown experiment or invalid parameters."""


class NumericalFailure(RuntimeError):
    def __init__(self, step: str, cause: Exception):
        super().__init__(f"{step}: {cause}")
        self.step = step


PARAM_KEYS = ("s", "p", "q", "lambda", "delta", "alpha", "eps", "n", "grid", "tsteps", "seed")


@dataclass
class ExperimentSpec:
    name: str
    params: dict = field(default_factory=dict)
    output: Optional[str] = None
    format: str = "json"


@dataclass
class Verdict:
    check: str
    passed: bool
    measured: float
    threshold: float
    grid: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    spec: dict
    rows: list
    verdicts: list
    provenance: dict

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "rows": self.rows,
            "verdicts": [asdict(v) for v in self.verdicts],
            "passed": self.passed,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(_plain(self.to_dict()), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        """Verdict table followed by the row table."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "passed", "measured", "threshold"])
        for v in self.verdicts:
            w.writerow([v.check, v.passed, repr(float(v.measured)), repr(float(v.threshold))])
        if self.rows:
            keys = sorted({k for r in self.rows for k in r})
            w.writerow([])
            w.writerow(keys)
            for r in self.rows:
                w.writerow([_plain(r.get(k, "")) for k in keys])
        return buf.getvalue()


def _plain(o):
    if isinstance(o, dict):
        return {str(k): _plain(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_plain(v) for v in o]
    if isinstance(o, (np.floating, float)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


@dataclass(frozen=True)
class Experiment:
    name: str
    func: Callable
    description: str
    defaults: dict
    param_help: dict


REGISTRY: dict = {}


def register(name: str, description: str, defaults: dict, param_help: Optional[dict] = None):
    def deco(fn):
        REGISTRY[name] = Experiment(name, fn, description, defaults, param_help or {})
        return fn
    return deco


def _as_list(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return [float(x) for x in v]
    return [float(v)]


def _validate(exp: Experiment, params: dict) -> dict:
    out = dict(exp.defaults)
    for k, v in params.items():
        if v is None:
            continue
        if k not in exp.defaults:
            raise ExperimentError(f"experiment {exp.name!r} does not take --{k}")
        d = exp.defaults[k]
        try:
            if isinstance(d, list):
                out[k] = _as_list(v)
            elif isinstance(d, int) and not isinstance(d, bool):
                vv = _as_list(v)
                if len(vv) != 1 or vv[0] != int(vv[0]):
                    raise ValueError
                out[k] = int(vv[0])
            else:
                vv = _as_list(v)
                if len(vv) != 1:
                    raise ValueError
                out[k] = vv[0]
        except (TypeError, ValueError):
            raise ExperimentError(f"invalid value for --{k}: {v!r}") from None
    return out


def run(spec: ExperimentSpec) -> ExperimentReport:
    if spec.name not in REGISTRY:
        raise ExperimentError(f"unknown experiment {spec.name!r}; see `wspdiff list`")
    exp = REGISTRY[spec.name]
    params = _validate(exp, spec.params)
    try:
        rows, verdicts = exp.func(params)
    except (ExperimentError, NumericalFailure, UnsupportedConfigurationError):
        raise
    except (InvalidDiffeoError, MollifierError, FlowError, ArithmeticError, RuntimeError,
            np.linalg.LinAlgError) as exc:
        raise NumericalFailure(f"{spec.name}: {type(exc).__name__}", exc) from exc
    except ValueError as exc:
        raise ExperimentError(f"invalid parameters for {spec.name}: {exc}") from exc
    prov = {
        "package": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "seed": params.get("seed"),
        "conventions": {
            "circle_kernel": "arc distance",
            "interval_kernel": "zero extension to the line",
            "h1dot_closed_form": "arccos(int sqrt(phi' psi')), no factor 2",
            "norm": "W^{s,p} = sum_{j<=k} ||D^j f||_p + [D^k f]_{sigma,p}",
        },
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    spec_echo = {"name": spec.name, "params": params, "output": spec.output, "format": spec.format}
    return ExperimentReport(_plain(spec_echo), _plain(rows), verdicts, prov)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# ---------------------------------------------------------------------------
# shared test objects


def bump_function(grid, center=0.5, width=0.35, wiggle=0.3, freq=3.0):
    """Smooth compactly supported test function on a line grid."""
    x = grid.nodes / grid.length
    z = (x - center) / width
    out = np.zeros_like(x)
    m = np.abs(z) < 1
    out[m] = np.exp(1 - 1 / (1 - z[m] ** 2)) * (1 + wiggle * np.sin(2 * np.pi * freq * x[m]))
    return SampledFunction(grid, out)


def random_circle_diffeo(grid, rng, modes: int = 4, amp: float = 0.6) -> CircleDiffeo:
    """Base-point-fixed diffeo with log-density a random trigonometric polynomial."""
    x = grid.nodes
    g = np.zeros_like(x)
    for k in range(1, modes + 1):
        a, b = rng.normal(size=2) * amp / k
        g += a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
    dens = np.exp(g)
    cum = antiderivative_circle(grid, dens)
    return CircleDiffeo(grid, cum[:-1] / cum[-1])


def density_diffeo(grid, dens: np.ndarray) -> CircleDiffeo:
    cum = antiderivative_circle(grid, dens)
    return CircleDiffeo(grid, cum[:-1] / cum[-1])


# ---------------------------------------------------------------------------
# 1. scaling


@register("scaling", "matched-grid rescaling identities for u(lam x)/lam and the blow-up direction lam < 1",
          {"s": [0.5, 1.0, 1.5, 2.3], "p": [1.5, 2.0, 3.0], "lambda": [2.0, 4.0, 8.0], "grid": 2049},
          {"grid": "points of the line grid"})
def exp_scaling(P):
    rows, verdicts = [], []
    g = line_grid(P["grid"])
    f = bump_function(g)
    for lam in P["lambda"]:
        fl = scaling_op(f, lam)
        for p in P["p"]:
            lp_ratio = lp_norm(fl, p) / lp_norm(f, p)
            want = lam ** (-1 - 1 / p)
            err = _rel(lp_ratio, want)
            rows.append({"lambda": lam, "p": p, "quantity": "Lp", "ratio": lp_ratio, "expected": want,
                         "rel_err": err})
            verdicts.append(Verdict(f"Lp ratio lam={lam:g} p={p:g}", err <= 1e-10, err, 1e-10,
                                    {"n": g.n_points}))
            for s in P["s"]:
                idx = SobolevIndex(s, p)
                r = homogeneous_norm(fl, idx) / homogeneous_norm(f, idx)
                want = lam ** ((s - 1) - 1 / p)
                err = _rel(r, want)
                rows.append({"lambda": lam, "p": p, "s": s, "quantity": "homogeneous", "ratio": r,
                             "expected": want, "rel_err": err})
                verdicts.append(Verdict(f"homogeneous ratio s={s:g} p={p:g} lam={lam:g}", err <= 1e-10,
                                        err, 1e-10, {"n": g.n_points}))
    # blow-up direction: spreading a field out (lam < 1) costs at least lam^{-1/p}
    for lam in (0.5, 0.25):
        for p in P["p"]:
            idx = SobolevIndex(1.0, p)
            base = wsp_norm(f, idx, estimate_error=False).total
            big = wsp_norm(scaling_op(f, lam), idx, estimate_error=False).total
            bound = lam ** (-1 / p) * base
            rows.append({"lambda": lam, "p": p, "quantity": "W1p blow-up", "norm": big, "bound": bound})
            verdicts.append(Verdict(f"W1p blow-up lam={lam:g} p={p:g}", big >= bound, big, bound,
                                    {"n": g.n_points}))
    return rows, verdicts


# ---------------------------------------------------------------------------
# 2. Lenells isometry


@register("lenells-isometry", "Wdot^{1,q} length of pulled-back sphere paths equals their L^q image length",
          {"q": [1.0, 2.0, 4.0], "n": 5, "grid": 2048, "tsteps": 128, "seed": 0},
          {"n": "number of random endpoint pairs"})
def exp_lenells(P):
    rows, verdicts = [], []
    g = circle_grid(P["grid"])
    rng = np.random.default_rng(P["seed"])
    pairs = [(random_circle_diffeo(g, rng), random_circle_diffeo(g, rng)) for _ in range(P["n"])]
    for q in P["q"]:
        idx = SobolevIndex(1.0, q)
        for i, (a, b) in enumerate(pairs):
            path, sp = lenells_sphere_path(a, b, q, P["tsteps"], with_sphere=True)
            L = path_length(path, idx, homogeneous_only=True)
            img = sp.image_length()
            err = _rel(L, img)
            rows.append({"q": q, "pair": i, "pullback_length": L, "image_length": img, "rel_diff": err})
            verdicts.append(Verdict(f"isometry q={q:g} pair={i}", err <= 1e-3, err, 1e-3,
                                    {"n": g.n_points, "m": P["tsteps"]}))
    return rows, verdicts


# ---------------------------------------------------------------------------
# 3. U_q diameter


@register("uq-diam", "sphere-image diameter bounds: affine paths <= 8q, spike pairs > q",
          {"q": [1.0, 2.0, 4.0, 8.0], "n": 20, "eps": 0.01, "grid": 2048, "tsteps": 128, "seed": 0},
          {"n": "number of random sphere pairs"})
def exp_uq_diam(P):
    rows, verdicts = [], []
    g = circle_grid(P["grid"])
    rng = np.random.default_rng(P["seed"])
    eps = P["eps"]
    for q in P["q"]:
        worst = 0.0
        for i in range(P["n"]):
            a = random_circle_diffeo(g, rng, amp=1.0)
            b = random_circle_diffeo(g, rng, amp=1.0)
            _, sp = lenells_sphere_path(a, b, q, TimeGrid(P["tsteps"]), with_sphere=True)
            L = sp.image_length()
            worst = max(worst, L)
            rows.append({"q": q, "pair": i, "affine_image_length": L})
        verdicts.append(Verdict(f"affine upper bound q={q:g}", worst <= 8 * q, worst, 8 * q,
                                {"n": g.n_points, "m": P["tsteps"], "pairs": P["n"]}))
        heights = (10.0, 100.0, 1000.0)
        d = [spike_distance(q, hgt, eps) for hgt in heights]
        limit = 2 ** (1 / q) * q
        for hgt, dv in zip(heights, d):
            rows.append({"q": q, "height": hgt, "spike_distance": dv, "limit": limit})
        verdicts.append(Verdict(f"spike lower bound q={q:g}", d[0] > q, d[0], q, {"height": 10, "eps": eps}))
        mono = all(abs(limit - d[i + 1]) < abs(limit - d[i]) for i in range(2))
        gap = _rel(d[-1], limit)
        verdicts.append(Verdict(f"spike approaches 2^(1/q) q, q={q:g}", mono and gap <= 0.05, gap, 0.05,
                                {"heights": list(heights), "eps": eps}))
    return rows, verdicts


# ---------------------------------------------------------------------------
# 4. Appendix A homotopy


@register("affine-homotopy", "affine homotopy to psi: exact region integrals vs quadrature, total length ladder",
          {"s": 1.25, "p": 2.0, "lambda": [2.0, 4.0, 8.0], "delta": [0.5, 0.1, 0.01],
           "n": 5, "grid": 8},
          {"lambda": "lam with psi slope lam + 1 (region check); the length ladder is 2..64",
           "n": "number of t values in (0, 1)", "grid": "Gauss nodes per time panel"})
def exp_affine_homotopy(P):
    rows, verdicts = [], []
    sigma, p = P["s"] - 1.0, P["p"]
    ts = [(i + 1) / (P["n"] + 1) for i in range(P["n"])]
    worst = 0.0
    for lam in P["lambda"]:
        for d in P["delta"]:
            prm = PsiParams(lam + 1, d)
            for t in ts:
                ex = appendixA_region_integrals(t, prm, sigma, p)
                nq = appendixA_region_quadrature(t, prm, sigma, p)
                for k, (e, q) in enumerate(zip(ex.as_tuple(), nq.as_tuple()), 1):
                    err = _rel(q, e) if e > 0 else abs(q)
                    worst = max(worst, err)
                    rows.append({"lambda": lam, "delta": d, "t": t, "region": k, "exact": e,
                                 "quadrature": q, "rel_err": err})
    verdicts.append(Verdict("region integrals vs adaptive quadrature", worst <= 0.01, worst, 0.01,
                            {"points": len(P["lambda"]) * len(P["delta"]) * len(ts)}))
    ladder = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
    a = 1 - sigma * p
    for d in P["delta"]:
        L = {lam: appendixA_total_length(PsiParams(lam + 1, d), sigma, p, P["grid"]) for lam in ladder}
        for lam in ladder:
            rows.append({"delta": d, "lambda": lam, "total_length": L[lam]})
        C = appendixA_envelope_constant(PsiParams(ladder[-1] + 1, d), sigma, p)
        rows.append({"delta": d, "envelope_C": C, "envelope_bound": 2 * C * p / a,
                     "envelope_holds": bool(max(L.values()) <= 2 * C * p / a)})
        growth = L[64.0] / L[16.0] - 1
        verdicts.append(Verdict(f"length saturation delta={d:g} (64 vs 16)", growth < 0.05, growth, 0.05,
                                {"t_quad": P["grid"]}))
    return rows, verdicts


# ---------------------------------------------------------------------------
# 5. supercritical lower bound


def _embedding_family(g, rng, count=50):
    """Smooth periodic fields: random trigonometric polynomials of several
    bandwidths plus single modes and localized bumps, which come close to the
    extremal ratio ||v'||_inf / ||v||_{W^{2,2}}."""
    x = g.nodes
    fam = []
    for k in (1, 2, 3, 4, 6, 8):
        fam.append(np.sin(2 * np.pi * k * x))
    for w in (0.05, 0.08, 0.12, 0.2, 0.3):
        z = (np.mod(x - 0.5, 1.0) - 0.5) / w
        fam.append(np.exp(-z ** 2) * z)
        fam.append(np.exp(-z ** 2))
    while len(fam) < count:
        K = int(rng.integers(2, 10))
        v = np.zeros_like(x)
        for k in range(1, K + 1):
            a, b = rng.normal(size=2) / k
            v += a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
        fam.append(v)
    return [SampledFunction(g, v) for v in fam[:count]]


def _log_linear_path(g, logd: np.ndarray, times: TimeGrid) -> DiffPath:
    return DiffPath(times, [density_diffeo(g, np.exp(t * logd)) for t in times.nodes])


@register("supercritical-lb", "length of any path to phi is at least max log phi' / C_emb (s = 2, p = 2)",
          {"s": 2.0, "p": 2.0, "n": 50, "grid": 512, "tsteps": 64, "seed": 0},
          {"n": "size of the embedding test family"})
def exp_supercritical(P):
    rows, verdicts = [], []
    idx = SobolevIndex(P["s"], P["p"])
    g = circle_grid(P["grid"])
    rng = np.random.default_rng(P["seed"])
    ratios = []
    for v in _embedding_family(g, rng, P["n"]):
        dv = derivative(v).values
        ratios.append(np.max(np.abs(dv)) / wsp_norm(v, idx, estimate_error=False).total)
    C = float(np.max(ratios))
    rows.append({"C_emb": C, "family": len(ratios)})
    x = g.nodes
    # spike density 1 + A (B - mean B) with max exactly e^L at the node x = 1/2
    B = np.exp(-((x - 0.5) / 0.02) ** 2)
    mB = float(np.sum(g.weights() * B))
    times = TimeGrid(P["tsteps"])
    lengths = {"affine": [], "flow": [], "shortened": []}
    Ls = (1.0, 2.0, 3.0)
    for Lv in Ls:
        A = (np.exp(Lv) - 1) / (1 - mB)
        dens = 1 + A * (B - mB)
        if np.min(dens) <= 0:
            raise NumericalFailure("target construction", ValueError("density not positive"))
        logd = np.log(dens)
        target = density_diffeo(g, dens)
        mlog = float(np.max(np.log(derivative(target).values)))
        aff = affine_path(target, times)
        ll = _log_linear_path(g, logd, times)
        fl = flow(ll.fields, times, g, substeps=4)
        short = path_shorten(affine_path(target, TimeGrid(16)), idx, iters=10)
        for name, path in (("affine", aff), ("flow", fl), ("shortened", short)):
            L = path_length(path, idx)
            lengths[name].append(L)
            lb = mlog / C
            rows.append({"L": Lv, "max_log_dphi": mlog, "path": name, "length": L, "lower_bound": lb})
            verdicts.append(Verdict(f"{name} length >= L/C_emb, L={Lv:g}", L >= lb, L, lb,
                                    {"n": g.n_points, "m": path.m}))
    for name, vals in lengths.items():
        inc = all(b > a for a, b in zip(vals[:-1], vals[1:]))
        verdicts.append(Verdict(f"{name} lengths increase with L", inc,
                                float(min(np.diff(vals))), 0.0, {"L": list(Ls)}))
    return rows, verdicts


# ---------------------------------------------------------------------------
# 6. critical growth


@register("critical-growth", "sphere chord distances to spike targets grow at least like q; "
          "the critical embedding ratio stays in a bounded band",
          {"q": [2.0, 4.0, 8.0, 16.0], "p": 2.0, "n": 10, "eps": 0.01, "grid": 2049},
          {"n": "spike height factor"})
def exp_critical_growth(P):
    rows, verdicts = [], []
    qs = P["q"]
    chords = [spike_distance(q, P["n"], P["eps"]) for q in qs]
    for q, c in zip(qs, chords):
        rows.append({"q": q, "chord": c, "chord_over_q": c / q})
        verdicts.append(Verdict(f"chord > q at q={q:g}", c > q, c, q, {"height": P["n"], "eps": P["eps"]}))
    inc = all(b > a for a, b in zip(chords[:-1], chords[1:]))
    verdicts.append(Verdict("chords increase in q", inc, float(min(np.diff(chords))), 0.0, {}))
    g = line_grid(P["grid"])
    fam = [bump_function(g, c, w, wig, fr) for c, w, wig, fr in
           ((0.5, 0.35, 0.3, 3.0), (0.5, 0.2, 0.0, 1.0), (0.4, 0.25, 0.5, 5.0), (0.6, 0.3, 0.2, 2.0))]
    sups = []
    for q in qs:
        r = [critical_embedding_ratio(f, P["p"], q) for f in fam]
        sups.append(max(r))
        rows.append({"q": q, "embedding_ratios": r})
    band = max(sups) / min(sups)
    verdicts.append(Verdict("embedding ratio band max/min", band <= 3.0, band, 3.0, {"n": g.n_points}))
    return rows, verdicts


# ---------------------------------------------------------------------------
# 7. displacement on the circle


@register("displacement-s1", "displacement energy on the circle: translation cost, bounded construction, "
          "derivative growth of displacing maps",
          {"s": 1.2, "p": 2.0, "delta": [0.1, 0.05], "alpha": -1.0, "grid": 2048, "tsteps": 128},
          {"alpha": "flow exponent; negative means 0.5 (1 + 1/p - s)"})
def exp_displacement(P):
    rows, verdicts = [], []
    s, p = P["s"], P["p"]
    idx = SobolevIndex(s, p)
    g = circle_grid(P["grid"])
    tp = translation_path(0.5, g, P["tsteps"])
    cost = path_length(tp, idx)
    verdicts.append(Verdict("translation cost 1/2", abs(cost - 0.5) <= 1e-10, abs(cost - 0.5), 1e-10,
                            {"n": g.n_points, "m": P["tsteps"]}))
    alpha = P["alpha"] if P["alpha"] > 0 else 0.5 * (1 + 1 / p - s)
    if not (0 < alpha and (alpha + s - 1) * p < 1):
        raise ExperimentError("alpha must satisfy 0 < alpha and (alpha + s - 1) p < 1")
    totals = []
    for d in P["delta"]:
        eps = d / 2
        u = make_u_alpha_eps(alpha, eps, g)
        un = wsp_norm(u, idx).total
        t0 = displacement_time(alpha)
        total = 2 * t0 * un + cost
        totals.append(total)
        pair = displacement_pair(alpha, eps, g)
        x = g.nodes
        I = x > d
        img = np.mod(pair.psi.values[I], 1.0)
        hits = int(np.sum((img > d) & (img < 1)))
        slope = secant_max_slope(pair.psi)
        rows.append({"delta": d, "eps": eps, "alpha": alpha, "t0": t0, "u_norm": un, "total_length": total,
                     "psi_image_max": float(np.max(img)), "nodes_hit": hits, "max_slope_lower": slope,
                     "conjugation_defect": pair.conjugation_defect(),
                     "phi_min_beyond_eps": float(np.min(pair.phi.values[x > eps]))})
        verdicts.append(Verdict(f"psi(I) misses I, delta={d:g}", hits == 0, hits, 0, {"n": g.n_points}))
        verdicts.append(Verdict(f"max psi' > (1-delta)/delta, delta={d:g}", slope > (1 - d) / d, slope,
                                (1 - d) / d, {"n": g.n_points}))
    spread = (max(totals) - min(totals)) / min(totals)
    verdicts.append(Verdict("construction length varies < 10% in delta", spread < 0.10, spread, 0.10,
                            {"deltas": P["delta"]}))
    # best alpha over a small grid (informational)
    for a in sorted({0.1, 0.25, 0.5 * (1 + 1 / p - s)}):
        if (a + s - 1) * p < 1:
            un = wsp_norm(make_u_alpha_eps(a, min(P["delta"]) / 2, g), idx, estimate_error=False).total
            rows.append({"alpha_scan": a, "construction_bound": 2 * displacement_time(a) * un + 0.5})
    return rows, verdicts


# ---------------------------------------------------------------------------
# 8. radial lifts


def _radial_profiles(count=10):
    out = []
    for i in range(count):
        a = 0.15 + 0.03 * (i % 4)
        b = 0.65 + 0.05 * (i % 5)
        fr = 1 + i % 3
        c = 0.5 * (a + b)

        def fn(r, a=a, b=b, fr=fr, c=c, i=i):
            z = (r - c) / (0.5 * (b - a))
            w = np.exp(1 - 1 / np.maximum(1 - z * z, 1e-300))
            return w * (1 + 0.4 * np.cos(np.pi * fr * r + i))
        out.append(RadialProfile.from_callable(fn, support=(a, b)))
    return out


def _one_d_norm(prof, idx):
    return wsp_norm(prof.as_function(), idx, estimate_error=False).total


@register("radial-lift", "radial lifts on the unit ball: exact L^p identity, bounded ratios, "
          "Monte Carlo reproducibility, radial homotopy and U_alpha_eps",
          {"s": [0.0, 0.5, 1.0, 1.5], "p": 2.0, "n": [2.0, 3.0], "grid": 128, "seed": DEFAULT_SEED,
           "eps": [0.1, 0.05, 0.025], "alpha": 0.5, "delta": 0.1},
          {"n": "dimensions", "grid": "radial Gauss nodes (angular nodes are grid/2)",
           "eps": "U_alpha_eps ladder", "seed": "Monte Carlo seed"})
def exp_radial(P):
    rows, verdicts = [], []
    p = P["p"]
    profs = _radial_profiles()
    dims = [int(n) for n in P["n"]]
    nr, na = P["grid"], max(8, P["grid"] // 2)
    if 2 in dims:
        worst = 0.0
        for prof in profs:
            F = radial_lift_function(prof, RadialDim(2))
            val = radial_wsp_norm(F, SobolevIndex(0.0, p), n_r=nr).total
            ex = lp_norm_exact(prof, RadialDim(2), p)
            worst = max(worst, _rel(val, ex))
        rows.append({"check": "Lp lift", "max_rel_err": worst})
        verdicts.append(Verdict("Lp lift matches omega_n formula (n=2)", worst <= 1e-6, worst, 1e-6,
                                {"n_r": max(nr, 256)}))
        for s in P["s"]:
            idx = SobolevIndex(s, p)
            sup = {}
            for scale in (1, 2):
                r = []
                for prof in profs:
                    F = radial_lift_function(prof, RadialDim(2))
                    nv = radial_wsp_norm(F, idx, n_r=nr * scale, n_ang=na * scale, n_rho=64 * scale).total
                    r.append(nv / _one_d_norm(prof, idx))
                sup[scale] = max(r)
                rows.append({"s": s, "dim": 2, "grid_scale": scale, "ratios": r, "sup": sup[scale]})
            ch = _rel(sup[2], sup[1])
            verdicts.append(Verdict(f"ratio sup stable under doubling s={s:g}", ch < 0.2, ch, 0.2,
                                    {"n_r": nr, "n_ang": na}))
        # radial homotopy field along the affine homotopy of psi
        idx = SobolevIndex(0.5, p)
        z, w = np.polynomial.legendre.leggauss(12)
        L = {}
        for lam in (2.0, 4.0, 8.0, 16.0, 32.0, 64.0):
            prm = PsiParams(lam + 1, P["delta"])
            vals = [radial_wsp_norm(radial_step_field(0.5 * (zi + 1), prm), idx, n_r=nr, n_ang=na,
                                    extra_breaks=(appendixA_field(0.5 * (zi + 1), prm).breakpoint,)).total
                    for zi in z]
            L[lam] = 0.5 * float(np.sum(w * np.array(vals)))
            rows.append({"radial_homotopy_lambda": lam, "length": L[lam]})
        growth = L[64.0] / L[16.0] - 1
        verdicts.append(Verdict("radial homotopy length saturation (64 vs 16)", growth < 0.05, growth, 0.05,
                                {"s": 0.5, "delta": P["delta"]}))
        # U_alpha_eps on the ball, k = 1
        idx = SobolevIndex(1.0, p)
        vals = []
        for e in P["eps"]:
            U = radial_lift_field(ball_u_alpha_eps(P["alpha"], e), RadialDim(2))
            vals.append(radial_wsp_norm(U, idx, n_r=max(nr, 512)).total)
            rows.append({"U_alpha_eps_eps": e, "W1p_norm": vals[-1]})
        spread = (max(vals) - min(vals)) / min(vals)
        verdicts.append(Verdict("U_alpha_eps norm uniform in eps (spread)", spread < 0.2, spread, 0.2,
                                {"alpha": P["alpha"]}))
    if 3 in dims:
        seeds = (int(P["seed"]), int(P["seed"]) + 1)
        for s in P["s"]:
            idx = SobolevIndex(s, p)
            frac = idx.sigma > 0
            ratios = []
            for j, prof in enumerate(profs):
                F = radial_lift_function(prof, RadialDim(3))
                reps = [radial_wsp_norm(F, idx, seed=sd) for sd in (seeds if frac else seeds[:1])]
                ratios.append(reps[0].total / _one_d_norm(prof, idx))
                if not frac:
                    continue
                parts = [r.homogeneous_parts[-1][1] for r in reps]
                ses = [r.meta["mc_stderr"] for r in reps]
                gap = abs(parts[0] - parts[1])
                tol = 3 * float(np.hypot(*ses))
                rows.append({"s": s, "dim": 3, "profile": j, "seminorm_seeds": parts, "stderr": ses})
                verdicts.append(Verdict(f"MC reproducible s={s:g} profile={j}", gap <= tol, gap, tol,
                                        {"mc_samples": reps[0].meta["grid"]["mc_samples"], "seeds": list(seeds)}))
            rows.append({"s": s, "dim": 3, "ratios": ratios, "sup": max(ratios)})
    return rows, verdicts


# ---------------------------------------------------------------------------
# 9. commutator counterexample


@register("commutator-h1", "Hdot^1 commutator counterexample: dist(Id, phi_n) -> 0, commutator distance near pi/2",
          {"n": [4.0, 16.0, 64.0], "eps": 1e-3, "grid": 16384},
          {"n": "indices of the sequence", "eps": "slope floor of the smoothed maps"})
def exp_commutator(P):
    rows, verdicts = [], []
    g = circle_grid(P["grid"])
    fine = circle_grid(16 * P["grid"])
    ns = [int(n) for n in P["n"]]
    dists, comms = [], []
    for n in ns:
        phi, psi = commutator_pair(n, P["eps"], g)
        I = CircleDiffeo.identity(g)
        d = h1dot_distance_closed_form(I, phi.diffeo)
        c = h1dot_distance_closed_form(compose(phi.diffeo, psi.diffeo), compose(psi.diffeo, phi.diffeo))
        od = h1dot_distance_from_densities(fine, np.ones(fine.n_points), phi.density(fine.nodes))
        oc = h1dot_distance_from_densities(fine, composed_density(phi, psi, fine.nodes),
                                           composed_density(psi, phi, fine.nodes))
        dists.append(d)
        comms.append(c)
        rows.append({"n": n, "dist_id_phi": d, "oracle_dist": od, "commutator": c, "oracle_commutator": oc,
                     "floor": P["eps"]})
    for floor in (1e-2, 1e-4):
        phi, psi = commutator_pair(ns[-1], floor, g)
        oc = h1dot_distance_from_densities(fine, composed_density(phi, psi, fine.nodes),
                                           composed_density(psi, phi, fine.nodes))
        rows.append({"n": ns[-1], "floor": floor, "oracle_commutator": oc})
    dec = all(b < a for a, b in zip(dists[:-1], dists[1:]))
    verdicts.append(Verdict("dist(Id, phi_n) strictly decreasing", dec, float(max(np.diff(dists))), 0.0, {}))
    verdicts.append(Verdict("dist at last n below half of first", dists[-1] < 0.5 * dists[0], dists[-1],
                            0.5 * dists[0], {}))
    gap = abs(comms[-1] - np.pi / 2)
    verdicts.append(Verdict("commutator distance within 0.15 of pi/2", gap <= 0.15, gap, 0.15,
                            {"n": g.n_points}))
    agree = max(abs(r["commutator"] - r["oracle_commutator"]) for r in rows if "commutator" in r)
    agree = max(agree, max(abs(r["dist_id_phi"] - r["oracle_dist"]) for r in rows if "dist_id_phi" in r))
    verdicts.append(Verdict("agreement with density quadrature", agree <= 1e-2, agree, 1e-2,
                            {"oracle_n": fine.n_points}))
    return rows, verdicts


# ---------------------------------------------------------------------------
# 10. subcritical contraction


def subcritical_test_map(g) -> CircleDiffeo:
    """Base-point-fixed map moving points only inside (0.1, 0.4) and (0.6, 0.9)."""
    x = g.nodes

    def bump(c, w):
        z = (x - c) / w
        out = np.zeros_like(x)
        m = np.abs(z) < 1
        out[m] = np.exp(1 - 1 / (1 - z[m] ** 2))
        return out

    dens = 1 + 0.6 * np.sin(2 * np.pi * (x - 0.1) / 0.3) * bump(0.25, 0.15) \
        + 0.5 * np.sin(2 * np.pi * (x - 0.6) / 0.3) * bump(0.75, 0.15)
    return density_diffeo(g, dens)


@register("subcritical-upper", "subcritical pipeline: support split, contraction of path lengths by "
          "lam^{(s-1)-1/p}, assembled upper bound 2C/(1 - lam^{(s-1)-1/p})",
          {"s": 1.2, "p": 2.0, "lambda": [2.0, 4.0, 8.0], "grid": 2048, "tsteps": 128, "eps": -1.0},
          {"eps": "delta of psi; negative means the value fixed by the split"})
def exp_subcritical(P):
    rows, verdicts = [], []
    s, p = P["s"], P["p"]
    if not (s - 1) * p < 1 or s <= 1:
        raise ExperimentError("need 1 < s < 1 + 1/p")
    idx = SobolevIndex(s, p)
    g = circle_grid(P["grid"])
    phi = subcritical_test_map(g)
    phi1, phi2 = support_split(phi, 0.05)
    x1 = phi1.grid.nodes
    moved = np.flatnonzero(np.abs(phi1.values - x1) > 1e-12)
    top = x1[moved[-1]] if len(moved) else 0.0
    # largest admissible delta: phi1 must be the identity on [1 - delta, 1]
    delta = P["eps"] if P["eps"] > 0 else min(0.5, float(np.floor((1 - top) * 10) / 10))
    if delta <= 0 or delta >= 1 or top > 1 - delta:
        raise ExperimentError(f"delta={delta:g} incompatible with the support of phi1 (up to {top:.3g})")
    recomposed = compose(phi1, phi2)
    ref = np.append(phi.values - phi.values[0], 1.0)
    err = float(np.max(np.abs(recomposed.values - ref)))
    rows.append({"split_recomposition_err": err, "phi1_support_top": top, "delta": delta})
    verdicts.append(Verdict("phi1 o phi2 recovers phi", err <= 1e-10, err, 1e-10, {"n": phi1.grid.n_points}))
    path = affine_path(phi1, P["tsteps"])
    fields = path.fields
    w = path.times.weights()
    base = float(np.sum(w * np.array([homogeneous_norm(u, idx) for u in fields])))
    expo = (s - 1) - 1 / p
    for lam in P["lambda"]:
        # conjugation by the slope-lam contraction reproduces phi1(lam x)/lam near 0
        psi = make_psi(PsiParams(lam, delta), 0.0, grid=phi1.grid)
        conj = compose(invert(psi), compose(phi1, psi))
        lin = x1 <= (1 - delta) / lam - 2 * phi1.grid.h
        resc = phi1(lam * x1[lin]) / lam
        cerr = float(np.max(np.abs(conj.values[lin] - resc)))
        scaled = float(np.sum(w * np.array([homogeneous_norm(scaling_op(u, lam), idx)
                                             for u in fields])))
        ratio = scaled / base
        want = lam ** expo
        e = _rel(ratio, want)
        rows.append({"lambda": lam, "length": base, "scaled_length": scaled, "ratio": ratio, "expected": want,
                     "conjugation_err": cerr})
        verdicts.append(Verdict(f"contraction ratio lam={lam:g}", e <= 1e-3, e, 1e-3,
                                {"n": phi1.grid.n_points, "m": P["tsteps"]}))
    ladder = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
    bounds = []
    for lam in ladder:
        C = appendixA_total_length(PsiParams(lam, delta), s - 1, p)
        B = 2 * C / (1 - lam ** expo)
        bounds.append(B)
        rows.append({"lambda": lam, "C_psi_length": C, "assembled_bound": B})
    dec = all(b < a for a, b in zip(bounds[:-1], bounds[1:]))
    verdicts.append(Verdict("assembled bound decreases in lambda", dec, float(max(np.diff(bounds))), 0.0,
                            {"delta": delta}))
    conv = abs(bounds[-1] - bounds[-2]) / bounds[-1]
    verdicts.append(Verdict("assembled bound converges (32 vs 64)", conv <= 0.02, conv, 0.02,
                            {"delta": delta}))
    return rows, verdicts

