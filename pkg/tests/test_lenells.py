import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wspdiff.experiments import random_circle_diffeo
from wspdiff.grids import CircleDiffeo, SampledFunction, circle_grid, derivative
from wspdiff.lenells import lenells_forward, lenells_inverse, sphere_point
from wspdiff.norms import lp_norm_values


def random_maps(count, n=1024, seed=7):
    rng = np.random.default_rng(seed)
    g = circle_grid(n)
    return [random_circle_diffeo(g, rng) for _ in range(count)]


def test_identity_maps_to_constant():
    g = circle_grid(64)
    for q in (1.0, 2.0, 4.0):
        f = lenells_forward(CircleDiffeo.identity(g), q)
        assert np.allclose(f.values, q, atol=1e-12)
        back = lenells_inverse(SampledFunction(g, np.full(64, q)), q)
        assert np.allclose(back.values, g.nodes, atol=1e-15)


@pytest.mark.parametrize("q", [1.0, 2.0, 4.0, 8.0])
def test_sphere_norm_and_roundtrip(q):
    for phi in random_maps(20):
        f = lenells_forward(phi, q)
        assert lp_norm_values(f.grid, f.values, q) == pytest.approx(q, abs=1e-8)
        back = lenells_inverse(f, q)
        assert np.max(np.abs(back.values - phi.values)) <= 1e-8


def test_inverse_derivative_and_winding():
    g = circle_grid(512)
    x = g.nodes
    q = 3.0
    f = sphere_point(1.5 + np.cos(2 * np.pi * x) * 0.5, g, q)
    info = {}
    phi = lenells_inverse(SampledFunction(g, f), q, info=info)
    assert not info["renormalized"]
    assert np.max(np.abs(derivative(phi).values - (f / q) ** q)) < 1e-8
    # base point fixed and one full turn: phi' integrates to 1 over the period
    assert phi.lift[0] == 0.0
    assert np.sum(g.weights() * derivative(phi).values) == pytest.approx(1.0, abs=1e-10)
    # off-sphere input is renormalized and recorded
    info = {}
    phi2 = lenells_inverse(SampledFunction(g, 1.1 * f), q, info=info)
    assert info["renormalized"]
    assert np.allclose(phi2.values, phi.values, atol=1e-12)


def test_rejects_bad_input():
    g = circle_grid(32)
    with pytest.raises(ValueError):
        lenells_inverse(SampledFunction(g, np.zeros(32)), 2.0)
    with pytest.raises(ValueError):
        lenells_forward(CircleDiffeo(g, g.nodes + 0.1), 2.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.0, 6.0))
def test_forward_lands_on_sphere(seed, q):
    phi = random_circle_diffeo(circle_grid(256), np.random.default_rng(seed))
    f = lenells_forward(phi, q)
    assert np.all(f.values > 0)
    assert lp_norm_values(f.grid, f.values, q) == pytest.approx(q, rel=1e-9)
