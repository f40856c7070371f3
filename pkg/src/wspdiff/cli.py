"""Command line entry point: ``wspdiff run | list | norm | make``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings

import numpy as np

from .experiments import (REGISTRY, ExperimentError, ExperimentSpec, NumericalFailure, PARAM_KEYS,
                          run)
from .grids import (DOMAINS, Grid1D, InvalidDiffeoError, MollifierError, SampledFunction,
                    circle_grid, interval_grid)
from .norms import SobolevIndex, UnsupportedConfigurationError, wsp_norm

EXIT_OK, EXIT_FAIL, EXIT_ARGS, EXIT_NUMERIC = 0, 1, 2, 3

FACTORIES = ("psi", "uae", "spike", "radial-psi", "translation")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_ARGS)


def _listish(text: str):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or comma list, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty value")
    return vals if len(vals) > 1 else vals[0]


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wspdiff", description="Fractional Sobolev norms and diffeomorphism-group experiments")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a registered experiment")
    r.add_argument("experiment")
    for key in PARAM_KEYS:
        r.add_argument(f"--{key}", dest=key, type=_listish, default=None)
    r.add_argument("--out", default=None, help="write the report here instead of stdout")
    r.add_argument("--format", choices=("json", "csv"), default="json")

    sub.add_parser("list", help="list experiments")

    n = sub.add_parser("norm", help="W^{s,p} norm of sampled data (columns: node, value)")
    n.add_argument("--input", required=True)
    n.add_argument("--s", type=float, required=True)
    n.add_argument("--p", type=float, required=True)
    n.add_argument("--domain", choices=DOMAINS, default="line")

    m = sub.add_parser("make", help="emit a named construction as function/diffeo CSV or JSON")
    m.add_argument("factory", choices=FACTORIES)
    m.add_argument("--lambda", dest="lam", type=float, default=4.0, help="slope of psi")
    m.add_argument("--delta", type=float, default=0.1)
    m.add_argument("--h", type=float, default=0.0, help="mollification half-width")
    m.add_argument("--alpha", type=float, default=0.15)
    m.add_argument("--eps", type=float, default=0.05)
    m.add_argument("--q", type=float, default=2.0)
    m.add_argument("--n", type=float, default=10.0, help="spike height factor")
    m.add_argument("--c", type=float, default=0.5, help="translation amount")
    m.add_argument("--grid", type=int, default=2048)
    m.add_argument("--out", default=None)
    m.add_argument("--format", choices=("json", "csv"), default="json")
    return ap


# ---------------------------------------------------------------------------
# function io


def function_to_csv(grid: Grid1D, values) -> str:
    lines = ["node,value"]
    lines += [f"{x!r},{float(v)!r}" for x, v in zip(grid.nodes.tolist(), np.asarray(values).tolist())]
    return "\n".join(lines) + "\n"


def function_to_json(grid: Grid1D, values, **extra) -> str:
    return json.dumps({"grid": grid.to_dict(), "values": np.asarray(values, dtype=float).tolist(), **extra})


def read_function_csv(path: str, domain: str) -> SampledFunction:
    """Two columns (node, value); an optional header row is skipped.

    Nodes must be uniform and start at 0; the grid length is inferred from
    the spacing.
    """
    xs, vs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                x, v = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if xs:
                    raise ValueError(f"bad row {row!r}") from None
                continue
            xs.append(x)
            vs.append(v)
    x = np.array(xs)
    if len(x) < 8:
        raise ValueError("need at least 8 samples")
    h = np.diff(x)
    if abs(x[0]) > 1e-12 or np.max(np.abs(h - h.mean())) > 1e-9 * max(1.0, abs(h.mean())):
        raise ValueError("nodes must be uniform and start at 0")
    n = len(x)
    length = h.mean() * (n if domain == "circle" else n - 1)
    return SampledFunction(Grid1D(n, domain, float(length)), np.array(vs))


def _make(args):
    from .constructions import (PsiParams, make_psi, make_u_alpha_eps, spike_pair, translation)

    if args.factory == "psi":
        psi = make_psi(PsiParams(args.lam, args.delta), args.h, grid=interval_grid(args.grid + 1))
        return psi.grid, psi.values, {}
    if args.factory == "radial-psi":
        psi = make_psi(PsiParams(args.lam, args.delta), args.h, grid=interval_grid(args.grid + 1))
        return psi.grid, psi.values, {"radial_profile": True}
    if args.factory == "uae":
        u = make_u_alpha_eps(args.alpha, args.eps, circle_grid(args.grid))
        return u.grid, u.values, {}
    if args.factory == "spike":
        _, g = spike_pair(args.q, args.n, args.eps, circle_grid(args.grid))
        return g.grid, g.values, {}
    tr = translation(args.c, circle_grid(args.grid))
    return tr.grid, tr.values, {}


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            w = max(len(k) for k in REGISTRY)
            for name, exp in REGISTRY.items():
                print(f"{name:<{w}}  {exp.description}")
            return EXIT_OK
        if args.command == "norm":
            f = read_function_csv(args.input, args.domain)
            rep = wsp_norm(f, SobolevIndex(args.s, args.p))
            print(json.dumps(rep.to_dict(), indent=2))
            return EXIT_OK
        if args.command == "make":
            grid, values, extra = _make(args)
            if args.format == "csv":
                _emit(function_to_csv(grid, values), args.out)
            else:
                _emit(function_to_json(grid, values, **extra), args.out)
            return EXIT_OK
        params = {k: getattr(args, k) for k in PARAM_KEYS if getattr(args, k) is not None}
        spec = ExperimentSpec(args.experiment, params, args.out, args.format)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run(spec)
        _emit(report.to_csv() if args.format == "csv" else report.to_json(), args.out)
        for v in report.verdicts:
            print(f"{'PASS' if v.passed else 'FAIL'}  {v.check}  measured={v.measured:.6g} "
                  f"threshold={v.threshold:.6g}", file=sys.stderr)
        return EXIT_OK if report.passed else EXIT_FAIL
    except NumericalFailure as exc:
        print(f"numerical failure in {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ExperimentError, UnsupportedConfigurationError, InvalidDiffeoError, MollifierError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
