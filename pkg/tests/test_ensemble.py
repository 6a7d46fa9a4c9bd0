import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entcert.ensemble import (Ensemble, GdConfig, gradient, init_ensemble, loss_stage1, loss_stage2,
                              product_vectors, realize, run)
from entcert.linalg import DensityMatrix, embed_product, partial_trace
from entcert.partitions import StructureSpec, family
from entcert.states import NoiseModel, make_state
from oracles import finite_difference, grid_segment


def setup(kind="ghz", n=3, structure="full-sep", per=5, seed=0):
    rho = make_state(kind, n)
    sigma = NoiseModel.white(rho.dims).endpoint
    e = init_ensemble(family(StructureSpec.parse(structure, n)), per, seed=seed, dims=rho.dims)
    return e, rho, sigma


@pytest.mark.parametrize("structure", ["full-sep", "part:2", "prod:2"])
@pytest.mark.parametrize("stage", [1, 2])
def test_gradient_matches_finite_differences(structure, stage):
    e, rho, sigma = setup(n=4, structure=structure, per=4, seed=7)
    e.weights = np.random.default_rng(1).uniform(0.5, 1.5, len(e.weights))
    if stage == 1:
        f = lambda x: loss_stage1(e.unpack(x), rho, sigma)
        g = gradient(e, "segment", rho, sigma).pack()
    else:
        f = lambda x: loss_stage2(e.unpack(x), rho)
        g = gradient(e, "target", rho).pack()
    x = e.pack()
    idx = np.random.default_rng(2).choice(x.size, size=min(100, x.size), replace=False)
    fd = finite_difference(f, x, idx, h=1e-6)
    scale = np.max(np.abs(fd))
    np.testing.assert_allclose(g[idx], fd, rtol=1e-4, atol=1e-4 * scale)


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1))
def test_stage1_loss_is_squared_distance_to_segment(seed):
    e, rho, sigma = setup(per=3, seed=seed)
    q = realize(e).data
    _, dist = grid_segment(q, rho.data, sigma.data)
    assert abs(np.sqrt(loss_stage1(e, rho, sigma)) - dist) < 1e-8


def test_vertices_are_pure_products_and_mixture_is_a_state():
    e, rho, sigma = setup(n=4, structure="part:2", per=3)
    psi = product_vectors(e)
    assert np.allclose(np.linalg.norm(psi, axis=1), 1)
    for v, vec in zip(e.vertices(), psi):
        state = DensityMatrix(np.outer(vec, vec.conj()), e.dims)
        factors = []
        for part in v.partition.parts:
            red = partial_trace(state, part)
            assert abs(np.trace(red.data @ red.data) - 1) < 1e-10  # each factor is pure
            factors.append((red, part))
        np.testing.assert_allclose(embed_product(factors, e.dims).data, state.data, atol=1e-12)
    realize(e).check()


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(0, 2 * np.pi))
@settings(max_examples=20)
def test_mixture_is_gauge_invariant(seed, mag, phase):
    e, _, _ = setup(per=2, seed=seed)
    ref = realize(e).data
    f = e.copy()
    f.blocks[0].amps[0] = f.blocks[0].amps[0] * (mag * np.exp(1j * phase))
    f.weights = -2.0 * f.weights
    np.testing.assert_allclose(realize(f).data, ref, atol=1e-13)


def test_pack_unpack_round_trip():
    e, _, _ = setup(n=4, structure="part:2", per=3)
    x = e.pack()
    back = e.unpack(x)
    np.testing.assert_array_equal(back.pack(), x)
    assert isinstance(back, Ensemble) and len(back) == len(e)


def test_descent_is_deterministic():
    e, rho, sigma = setup(per=10)
    cfg = GdConfig(max_iterations=150, seed=3)
    a, b = run(e, rho, sigma, cfg), run(e, rho, sigma, cfg)
    np.testing.assert_array_equal(a.ensemble.pack(), b.ensemble.pack())
    assert a.stage1_iterations == b.stage1_iterations


def test_descent_reaches_the_segment_and_writes_a_trace():
    e, rho, sigma = setup(per=20)
    buf = io.StringIO()
    res = run(e, rho, sigma, GdConfig(max_iterations=400), trace_file=buf)
    assert res.converged
    r = 0.01 * np.linalg.norm(rho.data - sigma.data)
    assert res.segment_distance <= r
    lines = buf.getvalue().splitlines()
    assert lines[0] == "iteration,stage,loss,segment_distance"
    assert len(lines) == len(res.trace) + 1
    stages = {row[1] for row in res.trace}
    assert stages == {1, 2}
    # stage 2 pulled the mixture toward the target
    assert res.stage2_loss < np.linalg.norm(realize(e).data - rho.data) ** 2


def test_absolute_threshold_overrides_relative():
    e, rho, sigma = setup(per=10)
    res = run(e, rho, sigma, GdConfig(max_iterations=50, threshold_r=10.0))
    assert res.converged and res.stage1_iterations == 0


def test_config_validation():
    with pytest.raises(ValueError):
        GdConfig(step_size=0)
    with pytest.raises(ValueError):
        GdConfig(optimizer="lbfgs")
    with pytest.raises(ValueError):
        init_ensemble(family(StructureSpec.parse("full-sep", 3)), 0)


@pytest.mark.parametrize("opt", ["plain", "momentum", "adam"])
def test_all_optimizers_decrease_stage1_loss(opt):
    e, rho, sigma = setup(per=10)
    before = loss_stage1(e, rho, sigma)
    res = run(e, rho, sigma, GdConfig(max_iterations=100, optimizer=opt, step_size=0.01))
    assert res.stage1_loss < before
