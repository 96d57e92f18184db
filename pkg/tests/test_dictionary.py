import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from covgl.dictionary import (
    BasisSpec,
    DesignMatrix,
    DesignPoints,
    build_dictionary,
    compute_weights,
    subset_columns,
)
from covgl.errors import ValidationError


def test_haar_size_two():
    G = build_dictionary(BasisSpec("haar", 2)).G
    expected = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    # equal up to column sign and order
    matches = np.abs(np.abs(G.T @ expected) - np.eye(2)).max() < 1e-12
    swapped = np.abs(np.abs(G.T @ expected) - np.eye(2)[::-1]).max() < 1e-12
    assert matches or swapped


def test_fourier_first_column_constant():
    G = build_dictionary(BasisSpec("fourier", 4)).G
    np.testing.assert_allclose(G[:, 0], 0.5, atol=1e-15)


def test_mixed_dimensions_and_unit_columns():
    spec = BasisSpec("mixed", children=(BasisSpec("haar", 128), BasisSpec("fourier", 128)))
    G = build_dictionary(spec)
    assert G.shape == (128, 256)
    np.testing.assert_allclose(G.col_norms, 1.0, atol=1e-12)


@pytest.mark.parametrize("kind", ["haar", "symmlet8", "fourier"])
@pytest.mark.parametrize("M", [8, 32, 128])
def test_full_grid_orthonormal(kind, M):
    G = build_dictionary(BasisSpec(kind, M))
    assert np.linalg.norm(G.gram() - np.eye(M)) <= 1e-10 * M


@pytest.mark.parametrize("M", [7, 9, 15])
def test_fourier_orthonormal_odd(M):
    G = build_dictionary(BasisSpec("fourier", M))
    assert np.linalg.norm(G.gram() - np.eye(M)) <= 1e-10 * M


def test_invalid_specs_rejected():
    with pytest.raises(ValidationError):
        BasisSpec("haar", 6)
    with pytest.raises(ValidationError):
        BasisSpec("mixed", children=(BasisSpec("haar", 4),))
    with pytest.raises(ValidationError):
        DesignPoints(np.array([0.2, 1.3]))
    with pytest.raises(ValidationError):
        DesignPoints.from_grid(8, [1, 1, 2])
    with pytest.raises(ValidationError):
        # wavelet evaluation needs grid points
        build_dictionary(BasisSpec("haar", 8), DesignPoints(np.array([0.1, 0.33])))


def test_subset_examples():
    G = DesignMatrix(np.eye(3))
    np.testing.assert_array_equal(subset_columns(G, [1]).G, np.eye(3)[:, [1]])
    np.testing.assert_array_equal(subset_columns(G, [0, 1, 2]).G, G.G)
    H = build_dictionary(BasisSpec("haar", 4))
    sub = subset_columns(H, [0, 2])
    assert sub.shape == (4, 2)
    np.testing.assert_allclose(sub.gram(), np.eye(2), atol=1e-12)
    with pytest.raises(ValidationError):
        subset_columns(G, [])
    with pytest.raises(ValidationError):
        subset_columns(G, [3])


def test_weights_examples():
    gamma, delta = compute_weights(build_dictionary(BasisSpec("symmlet8", 16)))
    np.testing.assert_allclose(gamma, 2.0, atol=1e-12)
    np.testing.assert_allclose(delta, 1.0, atol=1e-12)
    gamma, _ = compute_weights(DesignMatrix(3.0 * np.eye(2)))
    np.testing.assert_allclose(gamma, 18.0, rtol=1e-12)
    with pytest.raises(ValidationError):
        compute_weights(DesignMatrix(np.array([[1.0, 0.0], [0.0, 0.0]])))


def test_permuted_design_rows():
    pts = DesignPoints.permuted_subset(128, 90, seed=7)
    G = build_dictionary(BasisSpec("symmlet8", 128), pts)
    full = build_dictionary(BasisSpec("symmlet8", 128)).G
    np.testing.assert_array_equal(G.G, full[pts.grid_indices])
    assert np.all(np.diff(pts.points) > 0)


def test_build_is_deterministic():
    spec = BasisSpec("mixed", children=(BasisSpec("symmlet8", 32), BasisSpec("fourier", 32)))
    assert build_dictionary(spec).G.tobytes() == build_dictionary(spec).G.tobytes()


matrices = st.integers(1, 6).flatmap(
    lambda n: st.integers(1, 6).flatmap(
        lambda m: st.lists(
            st.floats(-10, 10).filter(lambda v: abs(v) > 1e-3), min_size=n * m, max_size=n * m
        ).map(lambda vals: np.array(vals).reshape(n, m))
    )
)


@given(matrices)
def test_design_matrix_invariants(A):
    G = DesignMatrix(A)
    np.testing.assert_allclose(G.col_norms, np.linalg.norm(A, axis=0), rtol=1e-12)
    assert G.G_max == G.col_norms.max()
    gamma, delta = compute_weights(G)
    assert np.all(delta > 0) and np.all(delta <= 1.0)
    assert np.isclose(delta.max(), 1.0)
    np.testing.assert_allclose(gamma, 2 * G.col_norms * np.sqrt(G.rho_max_outer), rtol=1e-12)
    assert np.isclose(G.rho_max_gram, G.rho_max_outer, rtol=1e-9)


@given(st.data())
def test_subset_composition(data):
    G = DesignMatrix(np.arange(1.0, 25.0).reshape(3, 8) ** 0.5)
    J = sorted(data.draw(st.sets(st.integers(0, 7), min_size=1)))
    rel = sorted(data.draw(st.sets(st.integers(0, len(J) - 1), min_size=1)))
    twice = subset_columns(subset_columns(G, J), rel)
    direct = subset_columns(G, [J[i] for i in rel])
    np.testing.assert_array_equal(twice.G, direct.G)
