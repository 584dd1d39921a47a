import math

import numpy as np
import pytest
import scipy.linalg
from conftest import random_complex
from hypothesis import given
from hypothesis import strategies as st

from cohroof.measures import (
    MeasureResult,
    coherence_number_bounds,
    coherence_number_lower,
    coherence_rank,
    l1_coherence,
    log_coherence_rank,
    log_schmidt_rank,
    relative_entropy_coherence,
    row_col_support,
    schmidt_coefficients,
    schmidt_rank,
    superposition_bounds,
    von_neumann_entropy,
)
from cohroof.numerics import InvariantError
from cohroof.states import (
    PureState,
    make_maximally_coherent,
    make_noisy_mcs,
    random_density,
)


def state_on_support(rng, d, support):
    v = np.zeros(d, dtype=complex)
    v[list(support)] = random_complex(rng, len(support))
    return PureState.from_vector(v)


@given(d=st.integers(1, 8), seed=st.integers(0, 2**32 - 1), data=st.data())
def test_coherence_rank_counts_support(d, seed, data):
    support = data.draw(st.sets(st.integers(0, d - 1), min_size=1))
    psi = state_on_support(np.random.default_rng(seed), d, support)
    assert coherence_rank(psi) == len(support)
    assert log_coherence_rank(psi) == math.log2(len(support))


def test_coherence_rank_ignores_relative_noise():
    psi = PureState.from_vector([1.0, 1e-12, 0.5])
    assert coherence_rank(psi) == 2


def test_maximally_coherent_rank():
    assert coherence_rank(make_maximally_coherent(8)) == 8
    assert log_coherence_rank(make_maximally_coherent(8)) == 3.0


@given(
    ds=st.integers(1, 4), da=st.integers(1, 4), seed=st.integers(0, 2**32 - 1), data=st.data()
)
def test_schmidt_rank_of_constructed_state(ds, da, seed, data):
    rng = np.random.default_rng(seed)
    r = data.draw(st.integers(1, min(ds, da)))
    u = np.linalg.qr(random_complex(rng, ds, ds))[0][:, :r]
    v = np.linalg.qr(random_complex(rng, da, da))[0][:, :r]
    coeffs = rng.uniform(0.2, 1.0, size=r)
    psi = PureState.from_vector(sum(c * np.kron(u[:, k], v[:, k]) for k, c in enumerate(coeffs)))
    assert schmidt_rank(psi, (ds, da)) == r
    sv = schmidt_coefficients(psi, (ds, da))
    np.testing.assert_allclose(np.sort(sv[:r])[::-1], np.sort(coeffs / np.linalg.norm(coeffs))[::-1], atol=1e-10)


def test_bell_state():
    bell = PureState.from_vector([1, 0, 0, 1])
    assert schmidt_rank(bell, (2, 2)) == 2
    assert log_schmidt_rank(bell, (2, 2)) == 1.0
    assert row_col_support(bell, (2, 2)) == (2, 2)


def test_row_col_support():
    psi = PureState.from_vector([1, 1, 0, 0, 0, 1])  # rows {0,1}, cols {0,1,2}
    assert row_col_support(psi, (2, 3)) == (2, 3)
    assert row_col_support(PureState.basis(6, 4), (2, 3)) == (1, 1)


def test_l1_by_direct_sum(rng):
    rho = random_density(4, seed=rng)
    direct = sum(abs(rho.matrix[i, j]) for i in range(4) for j in range(4) if i != j)
    assert l1_coherence(rho) == pytest.approx(direct, rel=1e-12)
    assert l1_coherence(make_noisy_mcs(4, 0.5)) == pytest.approx(0.5 * 3)


def test_relative_entropy_against_matrix_log(rng):
    rho = random_density(3, seed=rng).matrix
    s_rho = -np.trace(rho @ scipy.linalg.logm(rho)).real / np.log(2)
    p = np.diag(rho).real
    s_diag = -(p * np.log2(p)).sum()
    assert von_neumann_entropy(rho) == pytest.approx(s_rho, abs=1e-10)
    assert relative_entropy_coherence(rho) == pytest.approx(s_diag - s_rho, abs=1e-10)


def test_relative_entropy_of_maximally_coherent():
    assert relative_entropy_coherence(make_noisy_mcs(4, 1.0)) == pytest.approx(2.0, abs=1e-12)
    assert relative_entropy_coherence(np.diag([0.3, 0.7])) == 0.0


def test_superposition_bounds_cases():
    rng = np.random.default_rng(0)
    a = state_on_support(rng, 5, {0, 1})
    b = state_on_support(rng, 5, {2, 3, 4})
    assert superposition_bounds(a, b) == (1, 5)
    c = state_on_support(rng, 3, {0, 1, 2})
    assert superposition_bounds(c, c) == (0, 3)


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 6))
def test_superposition_within_bounds(seed, d):
    rng = np.random.default_rng(seed)
    s1 = set(rng.choice(d, size=rng.integers(1, d + 1), replace=False).tolist())
    s2 = set(rng.choice(d, size=rng.integers(1, d + 1), replace=False).tolist())
    psi, phi = state_on_support(rng, d, s1), state_on_support(rng, d, s2)
    v = psi.amplitudes + rng.normal() * phi.amplitudes
    lo, hi = superposition_bounds(psi, phi)
    assert lo <= coherence_rank(PureState.from_vector(v)) <= hi


def test_coherence_number_lower():
    assert coherence_number_lower(np.diag([0.5, 0.5])) == 1
    assert coherence_number_lower(make_noisy_mcs(4, 1.0)) == 4
    assert coherence_number_lower(make_noisy_mcs(4, 0.3)) == 2


def test_coherence_number_bounds_uses_engine():
    class Fake:
        class result:
            value = 3.0

    lo, hi = coherence_number_bounds(make_noisy_mcs(4, 0.3), engine=lambda rho: Fake)
    assert (lo, hi) == (2, 3)


def test_coherence_number_bounds_default_engine():
    assert coherence_number_bounds(make_noisy_mcs(4, 1.0)) == (4, 4)


def test_measure_result_validation():
    assert MeasureResult(-1e-13, "exact").value == 0.0
    with pytest.raises(InvariantError):
        MeasureResult(-0.1, "exact")
    with pytest.raises(InvariantError):
        MeasureResult(0.1, "guess")
    with pytest.raises(InvariantError):
        MeasureResult(float("nan"), "exact")


def test_w_like_state_schmidt_rank_by_gram_eigenvalues():
    psi = PureState.from_vector([1, 1, 1, 0])
    m = psi.amplitudes.reshape(2, 2)
    # M M^dag = [[2,1],[1,1]]/3 has eigenvalues (3 +- sqrt 5)/6, both nonzero
    gram = m @ m.conj().T
    tr, det = np.trace(gram).real, np.linalg.det(gram).real
    eig = [(tr + s * math.sqrt(tr * tr - 4 * det)) / 2 for s in (1, -1)]
    assert eig[1] == pytest.approx((3 - math.sqrt(5)) / 6)
    assert schmidt_rank(psi, (2, 2)) == sum(e > 1e-12 for e in eig) == 2
    assert coherence_rank(psi) == 3


def test_l1_of_maximally_coherent_projector():
    for d in range(1, 6):
        rho = make_maximally_coherent(d).projector()
        assert l1_coherence(rho) == pytest.approx(d - 1)
