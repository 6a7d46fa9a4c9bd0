import numpy as np
import pytest
from hypothesis import given, strategies as st

from entcert.linalg import (DensityMatrix, LayoutError, ValidationError, embed_product, from_herm_coords,
                            herm_coords, hs_inner, partial_trace, permute_parties, segment_projection,
                            segment_projection_array, tensor_product, uhlmann_fidelity)
from oracles import (brute_embed, brute_partial_trace, fidelity_pure, grid_segment, random_density,
                     random_hermitian)

layouts = st.lists(st.sampled_from([2, 3]), min_size=1, max_size=3).filter(lambda d: np.prod(d) <= 18)


@st.composite
def layout_and_subsets(draw):
    dims = draw(st.lists(st.sampled_from([2, 3]), min_size=2, max_size=4).filter(lambda d: np.prod(d) <= 24))
    order = draw(st.permutations(range(len(dims))))
    cuts = sorted(draw(st.sets(st.integers(1, len(dims) - 1), max_size=len(dims) - 1)))
    subsets = [list(order[a:b]) for a, b in zip([0] + cuts, cuts + [len(dims)])]
    return dims, subsets


@given(layout_and_subsets(), st.integers(0, 2**32 - 1))
def test_embed_product_matches_index_remapping(case, seed):
    dims, subsets = case
    rng = np.random.default_rng(seed)
    factors = [(random_density(int(np.prod([dims[q] for q in s])), rng), s) for s in subsets]
    got = embed_product(factors, dims).data
    np.testing.assert_allclose(got, brute_embed(factors, dims), atol=1e-14)


def test_embed_product_in_order_is_kron():
    rng = np.random.default_rng(1)
    a, b = random_density(2, rng), random_density(3, rng)
    np.testing.assert_allclose(embed_product([(a, [0]), (b, [1])], [2, 3]).data, np.kron(a, b))
    swapped = embed_product([(a, [1]), (b, [0])], [3, 2]).data
    np.testing.assert_allclose(swapped, np.kron(b, a))


def test_embed_product_rejects_bad_cover():
    a = np.eye(2) / 2
    with pytest.raises(LayoutError):
        embed_product([(a, [0]), (a, [0])], [2, 2])
    with pytest.raises(LayoutError):
        embed_product([(np.eye(3) / 3, [0]), (a, [1])], [2, 2])


def test_permute_parties_swap_two_qubits():
    swap = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            swap[2 * j + i, 2 * i + j] = 1
    rho = random_density(4, np.random.default_rng(0))
    np.testing.assert_allclose(permute_parties(rho, [2, 2], [1, 0]), swap @ rho @ swap.T, atol=1e-15)


@given(layout_and_subsets(), st.integers(0, 2**32 - 1))
def test_partial_trace_matches_brute_force(case, seed):
    dims, subsets = case
    rng = np.random.default_rng(seed)
    rho = DensityMatrix(random_density(int(np.prod(dims)), rng), dims)
    keep = sorted(subsets[0])
    np.testing.assert_allclose(partial_trace(rho, keep).data, brute_partial_trace(rho.data, dims, keep), atol=1e-14)


def test_partial_trace_of_product_recovers_factor():
    rng = np.random.default_rng(3)
    a, b = random_density(2, rng), random_density(3, rng)
    ab = tensor_product(DensityMatrix(a, [2]), DensityMatrix(b, [3]))
    np.testing.assert_allclose(partial_trace(ab, [1]).data, b, atol=1e-15)
    np.testing.assert_allclose(partial_trace(ab, [0]).data, a, atol=1e-15)


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 8]))
def test_segment_projection_matches_grid_scan(seed, d):
    rng = np.random.default_rng(seed)
    rho, sigma, q = (random_density(d, rng) for _ in range(3))
    s, dist = segment_projection_array(q, rho, sigma)
    s_ref, dist_ref = grid_segment(q, rho, sigma)
    assert abs(dist - dist_ref) <= 1e-8
    assert 0.0 <= s <= 1.0


def test_segment_projection_clamps_to_endpoints():
    rho = np.diag([1.0, 0.0]).astype(complex)
    sigma = np.eye(2) / 2
    far = 2 * rho - sigma  # beyond rho on the line
    assert segment_projection_array(far, rho, sigma)[0] == 1.0
    behind = 2 * sigma - rho
    assert segment_projection_array(behind, rho, sigma)[0] == 0.0
    on = 0.3 * rho + 0.7 * sigma
    p = segment_projection(DensityMatrix(on, [2]), DensityMatrix(rho, [2]), DensityMatrix(sigma, [2]))
    assert abs(p.s - 0.3) < 1e-15 and p.distance < 1e-15
    with pytest.raises(ValueError):
        segment_projection_array(on, sigma, sigma)


def test_fidelity_of_pure_states_is_overlap():
    rng = np.random.default_rng(5)
    for _ in range(5):
        psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        phi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        psi /= np.linalg.norm(psi)
        phi /= np.linalg.norm(phi)
        f = uhlmann_fidelity(DensityMatrix.pure(psi, [2, 2]), DensityMatrix.pure(phi, [2, 2]))
        assert abs(f - fidelity_pure(psi, phi)) < 1e-7


def test_fidelity_of_commuting_states_is_classical():
    p, q = np.array([0.5, 0.3, 0.2]), np.array([0.1, 0.6, 0.3])
    f = uhlmann_fidelity(DensityMatrix(np.diag(p), [3]), DensityMatrix(np.diag(q), [3]))
    assert abs(f - np.sum(np.sqrt(p * q)) ** 2) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_fidelity_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = (DensityMatrix(random_density(4, rng), [2, 2]) for _ in range(2))
    fab, fba = uhlmann_fidelity(a, b), uhlmann_fidelity(b, a)
    assert abs(fab - fba) < 1e-8
    assert 0.0 <= fab <= 1.0
    assert abs(uhlmann_fidelity(a, a) - 1) < 1e-8


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_hermitian_coordinates_are_an_isometry(d, seed):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(d, rng), random_hermitian(d, rng)
    ca, cb = herm_coords(a), herm_coords(b)
    assert ca.shape == (d * d,)
    assert abs(ca @ cb - hs_inner(a, b)) < 1e-12
    np.testing.assert_allclose(from_herm_coords(ca, d), a, atol=1e-14)


def test_validation_names_the_failed_check():
    with pytest.raises(ValidationError) as e:
        DensityMatrix.validated(np.array([[0.5, 1.0], [0.0, 0.5]]), [2])
    assert e.value.check == "hermitian"
    with pytest.raises(ValidationError) as e:
        DensityMatrix.validated(np.eye(2), [2])
    assert e.value.check == "trace"
    with pytest.raises(ValidationError) as e:
        DensityMatrix.validated(np.diag([1.5, -0.5]), [2])
    assert e.value.check == "psd"
    with pytest.raises(LayoutError):
        DensityMatrix(np.eye(4) / 4, [2, 3])
    with pytest.raises(LayoutError):
        DensityMatrix(np.eye(1), [1])


def test_validation_symmetrizes_tiny_asymmetry():
    a = np.eye(2, dtype=complex) / 2
    a[0, 1] = 1e-12
    rho = DensityMatrix.validated(a, [2])
    np.testing.assert_allclose(rho.data, rho.data.conj().T, atol=0)
