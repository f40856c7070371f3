"""Recompute the reference values frozen in the test suite.

Uses only tests/oracles.py (scipy quadrature and closed forms), never the
package discretizations. Takes a few minutes; the n = 3 Hankel values
dominate.
"""
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "tests"))

from oracles import (appendix_total_length, gagliardo_circle, gagliardo_line,  # noqa: E402
                     radial_seminorm_hankel)


def main():
    hat = lambda x: max(0.0, 0.25 - abs(x - 0.5))
    print("hat (0.5, 2):", gagliardo_line(hat, 0.5, 2, breaks=(0.25, 0.5, 0.75)))
    bump = lambda x: np.sin(np.pi * x) ** 4
    for sig, p in ((0.5, 2.0), (0.25, 2.0), (0.3, 3.0), (0.9, 1.5)):
        print(f"sin^4 bump {sig, p}:", gagliardo_line(bump, sig, p))
    sine = lambda x: np.sin(2 * np.pi * x)
    for sig, p in ((0.5, 2.0), (0.25, 2.0), (0.3, 3.0), (0.2, 1.5)):
        print(f"sin circle {sig, p}:", gagliardo_circle(sine, sig, p))
    print("1 + x with end jumps (0.25, 2):", gagliardo_line(lambda x: 1 + x, 0.25, 2))
    prof = lambda r: np.sin(np.pi * (r - 0.2) / 0.6) ** 4
    for kind in ("function", "field"):
        for n, s in ((2, 0.5), (3, 0.5), (2, 0.3)):
            print(f"radial {kind} n={n} s={s}:", radial_seminorm_hankel(prof, (0.2, 0.8), kind, n, s))
    for lam in (16, 64):
        print(f"homotopy length lam={lam} delta=0.1:", appendix_total_length(lam, 0.1, 0.25, 2.0))


if __name__ == "__main__":
    main()
