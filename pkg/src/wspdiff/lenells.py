"""The map phi -> q (phi')^{1/q} from base-point-fixed circle diffeos to the
radius-q sphere of L^q, and its inverse."""
from __future__ import annotations

import numpy as np

from .grids import CircleDiffeo, SampledFunction, antiderivative_circle, derivative
from .norms import lp_norm_values


def lenells_forward(phi: CircleDiffeo, q: float) -> SampledFunction:
    if not phi.base_point_fixed(1e-10):
        raise ValueError("expected a base-point-fixed diffeo (phi(0) = 0)")
    d = derivative(phi).values
    if np.any(d <= 0):
        raise ValueError("derivative must be positive")
    return SampledFunction(phi.grid, q * d ** (1.0 / q))


def lenells_inverse(f: SampledFunction, q: float, tol: float = 1e-6, info: dict = None) -> CircleDiffeo:
    """phi(x) = int_0^x (f/q)^q, renormalized so that phi(1) = 1 exactly.

    A relative sphere defect larger than ``tol`` is recorded in ``info`` under
    ``renormalized``.
    """
    v = np.asarray(f.values, dtype=float)
    if np.any(v <= 0):
        raise ValueError("f must be positive")
    dens = (v / q) ** q
    cum = antiderivative_circle(f.grid, dens)
    total = cum[-1]
    if info is not None:
        info["renormalized"] = abs(lp_norm_values(f.grid, v, q) / q - 1.0) > tol
        info["mass"] = total
    lift = cum[:-1] / total
    return CircleDiffeo(f.grid, lift)


def sphere_point(g: np.ndarray, grid, q: float) -> np.ndarray:
    """Radial projection of a positive sample onto the radius-q L^q sphere."""
    return q * g / lp_norm_values(grid, g, q)
