"""Run every registered experiment and write one JSON report per experiment.

usage: python3 scripts/run_all.py [OUTDIR] [--only NAME ...]
"""
import argparse
import pathlib
import sys
import time
import warnings

from wspdiff.experiments import REGISTRY, ExperimentError, ExperimentSpec, NumericalFailure, run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", nargs="?", default="reports")
    ap.add_argument("--only", nargs="*", default=None)
    args = ap.parse_args(argv)
    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    names = args.only or list(REGISTRY)
    worst = 0
    for name in names:
        t0 = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rep = run(ExperimentSpec(name, output=str(out / f"{name}.json")))
        except ExperimentError as exc:
            print(f"{name:<20} ERROR {exc}")
            worst = max(worst, 2)
            continue
        except NumericalFailure as exc:
            print(f"{name:<20} NUMERICAL FAILURE {exc}")
            worst = max(worst, 3)
            continue
        (out / f"{name}.json").write_text(rep.to_json())
        n_ok = sum(v.passed for v in rep.verdicts)
        status = "PASS" if rep.passed else "FAIL"
        print(f"{name:<20} {status}  {n_ok}/{len(rep.verdicts)} verdicts  {time.perf_counter() - t0:.1f}s")
        for v in rep.verdicts:
            if not v.passed:
                print(f"    failed: {v.check} (measured {v.measured:.4g}, threshold {v.threshold:.4g})")
        if not rep.passed:
            worst = max(worst, 1)
    return worst


if __name__ == "__main__":
    sys.exit(main())
