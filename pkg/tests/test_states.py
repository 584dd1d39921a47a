import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohroof.numerics import CohroofError, DimensionError, InvariantError
from cohroof.states import (
    BipartiteView,
    DensityMatrix,
    Ensemble,
    PureState,
    ensemble_to_density,
    ensemble_to_json,
    make_discontinuity_state,
    make_maximally_coherent,
    make_noisy_mcs,
    make_quantum_incoherent,
    random_density,
    random_ensemble,
    random_mixer,
    random_pure,
    read_state,
    state_from_json,
    state_to_json,
    superpose,
    write_state,
)


def test_pure_state_requires_unit_norm():
    with pytest.raises(InvariantError, match="squared-modulus"):
        PureState(np.array([1.0, 1.0]))
    with pytest.raises(InvariantError):
        PureState(np.array([]))
    assert PureState.from_vector([3, 4j]).amplitudes[1] == pytest.approx(0.8j)


def test_pure_state_is_immutable():
    psi = PureState.basis(3, 1)
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1


@pytest.mark.parametrize(
    "matrix, invariant",
    [
        (np.array([[0.5, 0.1], [0.2, 0.5]]), "Hermitian"),
        (np.eye(2), "trace"),
        (np.diag([1.5, -0.5]), "positive semidefinite"),
        (np.ones((2, 3)) / 2, "square"),
    ],
)
def test_density_matrix_names_violated_invariant(matrix, invariant):
    with pytest.raises(InvariantError, match=invariant):
        DensityMatrix(matrix)


def test_is_incoherent():
    assert DensityMatrix(np.diag([0.2, 0.8])).is_incoherent()
    assert not make_noisy_mcs(3, 0.1).is_incoherent()


def test_ensemble_invariants():
    psi = PureState.basis(2, 0)
    with pytest.raises(InvariantError, match="sum to 1"):
        Ensemble(((0.5, psi),))
    with pytest.raises(InvariantError, match="positive"):
        Ensemble(((1.0, psi), (0.0, psi)))
    with pytest.raises(InvariantError, match="dimension"):
        Ensemble(((0.5, psi), (0.5, PureState.basis(3, 0))))


def test_ensemble_from_vectors_round_trip(rng):
    x = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    x[:, 2] = 0
    x /= np.linalg.norm(x)
    e = Ensemble.from_vectors(x)
    assert len(e) == 3
    np.testing.assert_allclose(e.vectors() @ e.vectors().conj().T, x @ x.conj().T, atol=1e-12)


def test_maximally_coherent_amplitudes():
    psi = make_maximally_coherent(4, phases=[0, np.pi / 2, np.pi, 0])
    np.testing.assert_allclose(np.abs(psi.amplitudes), 0.5)
    assert psi.amplitudes[1] == pytest.approx(0.5j)


def test_noisy_mcs_endpoints():
    np.testing.assert_allclose(make_noisy_mcs(4, 0.0).matrix, np.eye(4) / 4)
    np.testing.assert_allclose(make_noisy_mcs(3, 1.0).matrix, np.full((3, 3), 1 / 3))
    with pytest.raises(CohroofError):
        make_noisy_mcs(3, 1.5)


def test_quantum_incoherent_structure():
    b0 = np.array([[0.5, 0.5], [0.5, 0.5]])
    b1 = np.diag([1.0, 0.0])
    chi = make_quantum_incoherent([0.25, 0.75], [b0, b1]).matrix
    expected = np.zeros((4, 4))
    expected[:2, :2] = 0.25 * b0
    expected[2:, 2:] = 0.75 * b1
    np.testing.assert_allclose(chi, expected)


def test_discontinuity_state_close_to_basis_state():
    psi = make_discontinuity_state(4, 1e-6)
    assert abs(psi.amplitudes[0]) ** 2 == pytest.approx(1 - 1e-6, abs=1e-15)
    assert np.all(np.abs(psi.amplitudes) > 0)


@given(d=st.integers(1, 6), seed=st.integers(0, 2**32 - 1), data=st.data())
def test_random_density_has_requested_rank(d, seed, data):
    rank = data.draw(st.integers(1, d))
    rho = random_density(d, rank, seed)
    w = np.linalg.eigvalsh(rho.matrix)
    assert int((w > 1e-10).sum()) == rank


def test_random_mixer_orthonormal_rows():
    t = random_mixer(3, 5, seed=1)
    np.testing.assert_allclose(t @ t.conj().T, np.eye(3), atol=1e-12)
    with pytest.raises(CohroofError):
        random_mixer(3, 2)


def test_random_ensemble_reproduces_state():
    rho = random_density(3, 2, seed=5)
    e = random_ensemble(rho, 4, seed=6)
    np.testing.assert_allclose(ensemble_to_density(e).matrix, rho.matrix, atol=1e-12)


def test_seeded_generators_are_deterministic():
    np.testing.assert_array_equal(random_pure(5, 3).amplitudes, random_pure(5, 3).amplitudes)
    np.testing.assert_array_equal(random_density(3, 2, 9).matrix, random_density(3, 2, 9).matrix)


def test_superpose():
    e0, e1 = PureState.basis(2, 0), PureState.basis(2, 1)
    plus = superpose(1, e0, 1, e1)
    np.testing.assert_allclose(plus.amplitudes, [2**-0.5, 2**-0.5])
    with pytest.raises(CohroofError, match="cancels"):
        superpose(1, e0, -1, e0)
    with pytest.raises(DimensionError):
        superpose(1, e0, 1, PureState.basis(3, 0))


def test_bipartite_view():
    psi = PureState(np.array([0, 1, 0, 0, 0, 0], dtype=complex))
    view = BipartiteView.of(psi, (2, 3))
    assert view.coeffs.shape == (2, 3)
    assert view.coeffs[0, 1] == 1
    with pytest.raises(DimensionError):
        BipartiteView.of(psi, (4, 2))


def test_state_json_round_trip(tmp_path):
    psi = random_pure(3, seed=2)
    rho = random_density(3, seed=2)
    for state in (psi, rho):
        path = tmp_path / "s.json"
        write_state(path, state)
        obj = json.loads(path.read_text())
        assert obj["dim"] == 3 and obj["kind"] in ("pure", "density")
        back = read_state(path)
        a = state.amplitudes if isinstance(state, PureState) else state.matrix
        b = back.amplitudes if isinstance(back, PureState) else back.matrix
        np.testing.assert_array_equal(a, b)


def test_density_json_is_row_major():
    m = np.array([[0.5, 0.25j], [-0.25j, 0.5]])
    obj = state_to_json(DensityMatrix(m))
    assert obj["data"][1] == [0.0, 0.25]
    assert obj["data"][2] == [0.0, -0.25]


@pytest.mark.parametrize(
    "obj, invariant",
    [
        ({"dim": 2, "kind": "pure"}, "dim, kind and data"),
        ({"dim": 2, "kind": "mixed", "data": []}, "kind"),
        ({"dim": 2, "kind": "pure", "data": [[1, 0]]}, "entry count"),
        ({"dim": 2, "kind": "pure", "data": [1, 0]}, "pairs"),
        ({"dim": 2, "kind": "pure", "data": [[1, 0], [1, 0]]}, "squared-modulus"),
    ],
)
def test_state_json_errors_name_invariant(obj, invariant):
    with pytest.raises(InvariantError, match=invariant):
        state_from_json(obj)


def test_ensemble_json():
    e = Ensemble(((0.25, PureState.basis(2, 0)), (0.75, PureState.basis(2, 1))))
    obj = ensemble_to_json(e)
    assert obj["kind"] == "ensemble"
    assert [m["weight"] for m in obj["members"]] == [0.25, 0.75]


def test_noisy_mcs_off_diagonal():
    m = make_noisy_mcs(2, 0.5).matrix
    assert m[0, 1] == pytest.approx(0.25)
    assert m[0, 0] == pytest.approx(0.5)


def test_quantum_incoherent_marginal_is_average_block():
    from cohroof.numerics import partial_trace

    b0, b1 = random_density(2, seed=1).matrix, random_density(2, seed=2).matrix
    chi = make_quantum_incoherent([0.5, 0.5], [b0, b1]).matrix
    np.testing.assert_allclose(partial_trace(chi, (2, 2), "A"), (b0 + b1) / 2, atol=1e-12)
    np.testing.assert_allclose(partial_trace(chi, (2, 2), "S"), np.eye(2) / 2, atol=1e-12)


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-6])
def test_discontinuity_amplitude_overlap(eps):
    # <0|psi> = sqrt(1 - eps) = 1 - eps/2 + O(eps^2)
    psi = make_discontinuity_state(4, eps)
    assert abs(psi.amplitudes[0]) == pytest.approx(1 - eps / 2, abs=eps * eps)
