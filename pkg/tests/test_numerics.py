import itertools

import numpy as np
import pytest
from conftest import random_complex
from hypothesis import given
from hypothesis import strategies as st

from cohroof.numerics import (
    CohroofError,
    DimensionError,
    InvariantError,
    ToleranceConfig,
    count_support,
    hermitian_eig,
    numerical_rank,
    partial_trace,
    polar_factor,
    support_mask,
    svd,
    tensor_product,
)


def trace_by_summation(m, dims, keep):
    """Reference partial trace by explicit index loops."""
    n = len(dims)
    kept = [k for k in range(n) if k in keep]
    traced = [k for k in range(n) if k not in keep]
    kd = [dims[k] for k in kept]
    out = np.zeros((int(np.prod(kd)),) * 2, dtype=complex)

    def flat(idx):
        return int(np.ravel_multi_index(idx, dims))

    for ki in itertools.product(*[range(x) for x in kd]):
        for kj in itertools.product(*[range(x) for x in kd]):
            total = 0
            for t in itertools.product(*[range(dims[k]) for k in traced]):
                row, col = [0] * n, [0] * n
                for pos, k in enumerate(kept):
                    row[k], col[k] = ki[pos], kj[pos]
                for pos, k in enumerate(traced):
                    row[k] = col[k] = t[pos]
                total += m[flat(row), flat(col)]
            out[np.ravel_multi_index(ki, kd), np.ravel_multi_index(kj, kd)] = total
    return out


@given(
    dims=st.lists(st.integers(1, 3), min_size=2, max_size=3),
    seed=st.integers(0, 2**32 - 1),
    data=st.data(),
)
def test_partial_trace_matches_index_summation(dims, seed, data):
    rng = np.random.default_rng(seed)
    total = int(np.prod(dims))
    m = random_complex(rng, total, total)
    keep = data.draw(st.sets(st.integers(0, len(dims) - 1), min_size=1))
    np.testing.assert_allclose(partial_trace(m, dims, keep), trace_by_summation(m, dims, keep), atol=1e-12)


def test_partial_trace_of_product_recovers_factors(rng):
    a = random_complex(rng, 2, 2)
    b = random_complex(rng, 3, 3)
    b /= np.trace(b)
    a /= np.trace(a)
    prod = tensor_product(a, b)
    np.testing.assert_allclose(partial_trace(prod, (2, 3), "S"), a, atol=1e-12)
    np.testing.assert_allclose(partial_trace(prod, (2, 3), "A"), b, atol=1e-12)


def test_partial_trace_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(4), (2, 3), 0)
    with pytest.raises(DimensionError):
        partial_trace(np.eye(4), (2, 2), 2)


def test_tensor_product_of_kets_is_a_ket():
    v = tensor_product([1, 0], [0, 1])
    assert v.shape == (4,)
    np.testing.assert_array_equal(v, [0, 1, 0, 0])


def test_hermitian_eig_descending_and_reconstructs(rng):
    g = random_complex(rng, 4, 4)
    h = g + g.conj().T
    w, v = hermitian_eig(h)
    assert np.all(np.diff(w) <= 0)
    np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-10)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(InvariantError):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_svd_reconstructs(rng):
    m = random_complex(rng, 3, 5)
    u, s, vh = svd(m)
    np.testing.assert_allclose(u[:, :3] @ np.diag(s) @ vh[:3], m, atol=1e-12)


def test_support_is_relative_to_largest_entry():
    v = np.array([1.0, 1e-10, 1e-8, 0.0])
    np.testing.assert_array_equal(support_mask(v), [True, False, True, False])
    assert count_support(1e-6 * v) == 2
    assert count_support(v, ToleranceConfig(support_eps=1e-11)) == 3


def test_support_of_zero_vector_raises():
    with pytest.raises(CohroofError):
        count_support(np.zeros(3))


def test_numerical_rank():
    assert numerical_rank([3.0, 1e-3, 1e-12]) == 2
    assert numerical_rank([0.0, 0.0]) == 0


def test_polar_factor_has_orthonormal_rows(rng):
    t = polar_factor(random_complex(rng, 3, 7))
    np.testing.assert_allclose(t @ t.conj().T, np.eye(3), atol=1e-12)


def test_polar_factor_is_nearest(rng):
    # the polar factor beats random orthonormal-row candidates in Frobenius distance
    m = random_complex(rng, 2, 4)
    best = np.linalg.norm(m - polar_factor(m))
    for _ in range(200):
        q = polar_factor(random_complex(rng, 2, 4))
        assert np.linalg.norm(m - q) >= best - 1e-12


@pytest.mark.parametrize("field", ["support_eps", "psd_eps", "ortho_eps"])
@pytest.mark.parametrize("bad", [0.0, -1e-9, 1e-2])
def test_tolerance_config_validates(field, bad):
    with pytest.raises(CohroofError):
        ToleranceConfig(**{field: bad})


def test_marginals_of_random_two_by_three_have_unit_trace(rng):
    g = random_complex(rng, 6, 6)
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    for keep in (0, 1):
        ref = trace_by_summation(rho, (2, 3), {keep})
        assert np.trace(ref) == pytest.approx(1.0)
        np.testing.assert_allclose(partial_trace(rho, (2, 3), keep), ref, atol=1e-12)


def test_eigenvalue_sum_equals_trace(rng):
    g = random_complex(rng, 4, 4)
    h = g + g.conj().T
    w, _ = hermitian_eig(h)
    assert w.sum() == pytest.approx(np.trace(h).real, abs=1e-10)
