import math

import numpy as np
import pytest

from noonsim.fock import (
    ConfigurationError,
    LinearOperator,
    ModeSystem,
    StateVector,
    build_mode_operator,
    evolve_exact,
)
from noonsim.optics import (
    KerrCoupling,
    beam_splitter,
    beam_splitter_generator,
    cross_kerr,
    noon_state,
    phase_shifter,
    polarization_to_path,
)

from oracles import beam_splitter_full, index_of


def pair(N, total=None):
    cons = [({"a": 1, "b": 1}, total)] if total is not None else []
    return ModeSystem.build([("a", "bosonic", N), ("b", "bosonic", N)], cons)


def test_beam_splitter_on_vacuum():
    s = pair(2)
    vac = StateVector.basis_state(s, (0, 0))
    out = beam_splitter(s, "a", "b", 0.37) @ vac
    assert np.allclose(out.amplitudes, vac.amplitudes)


def test_fifty_fifty_single_photon():
    s = pair(1, 1)
    out = beam_splitter(s, "a", "b", math.pi / 4) @ StateVector.basis_state(s, (1, 0))
    assert out.amplitude((1, 0)) == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    assert out.amplitude((0, 1)) == pytest.approx(1j / math.sqrt(2), abs=1e-14)


def test_hong_ou_mandel():
    s = pair(2, 2)
    out = beam_splitter(s, "a", "b", math.pi / 4) @ StateVector.basis_state(s, (1, 1))
    assert out.amplitude((2, 0)) == pytest.approx(1j / math.sqrt(2), abs=1e-14)
    assert out.amplitude((0, 2)) == pytest.approx(1j / math.sqrt(2), abs=1e-14)
    assert abs(out.amplitude((1, 1))) < 1e-14


def test_beam_splitter_matches_generator_exponential():
    s = pair(3, 3)
    G = beam_splitter_generator(s, "a", "b")
    psi = StateVector.basis_state(s, (2, 1))
    theta = 0.61
    ref = evolve_exact(LinearOperator(s, G.matrix, True), psi, -theta)  # exp(+i theta G)
    assert np.allclose((beam_splitter(s, "a", "b", theta) @ psi).amplitudes, ref.amplitudes, atol=1e-13)


@pytest.mark.parametrize("N", [1, 2, 4])
def test_beam_splitter_matches_kronecker_oracle(N):
    s = pair(N, N)
    theta = 0.9
    U = beam_splitter(s, "a", "b", theta).dense()
    full = beam_splitter_full(N, theta)
    dims = (N + 1, N + 1)
    idx = [index_of(occ, dims) for occ in s.basis]
    assert np.max(np.abs(U - full[np.ix_(idx, idx)])) < 1e-13


@pytest.mark.parametrize("theta", [0.1, math.pi / 4, 1.3])
def test_beam_splitter_unitary_and_inverse(theta):
    s = pair(4)
    U = beam_splitter(s, "a", "b", theta).dense()
    V = beam_splitter(s, "a", "b", -theta).dense()
    eye = np.eye(s.dim)
    assert np.max(np.abs(U.conj().T @ U - eye)) < 1e-12
    assert np.max(np.abs(U @ V - eye)) < 1e-12


def test_beam_splitter_conserves_total_photons():
    s = pair(3)
    U = beam_splitter(s, "a", "b", 0.4).dense()
    ntot = (build_mode_operator(s, "a", "number") + build_mode_operator(s, "b", "number")).dense()
    assert np.max(np.abs(U @ ntot - ntot @ U)) < 1e-12


def test_beam_splitter_rejects_unknown_or_non_bosonic_modes():
    s = ModeSystem.build([("q", "qubit", 1), ("a", "bosonic", 1)], [])
    with pytest.raises(ConfigurationError):
        beam_splitter(s, "q", "a", 0.1)
    with pytest.raises(ConfigurationError):
        beam_splitter(s, "a", "zz", 0.1)


def test_phase_shifter():
    s = pair(2)
    assert np.allclose(phase_shifter(s, "a", 0.0).dense(), np.eye(s.dim))
    two = StateVector.basis_state(s, (2, 0))
    assert (phase_shifter(s, "a", math.pi) @ two).amplitude((2, 0)) == pytest.approx(1.0)
    one = StateVector.basis_state(s, (1, 0))
    assert (phase_shifter(s, "a", math.pi / 2) @ one).amplitude((1, 0)) == pytest.approx(1j)


def test_cross_kerr_phases():
    s = pair(3)
    k = cross_kerr(s, KerrCoupling("a", "b", 0.1)).dense()
    lk = s.lookup()
    assert k[lk[(1, 1)], lk[(1, 1)]] == pytest.approx(np.exp(0.1j))
    assert k[lk[(3, 0)], lk[(3, 0)]] == pytest.approx(1.0)
    assert k[lk[(0, 2)], lk[(0, 2)]] == pytest.approx(1.0)
    phi0 = 0.23
    k2 = cross_kerr(s, KerrCoupling("a", "b", phi0)).dense()
    assert k2[lk[(2, 3)], lk[(2, 3)]] == pytest.approx(np.exp(6j * phi0))


def test_kerr_coupling_validation():
    with pytest.raises(ConfigurationError):
        KerrCoupling("a", "a", 0.1)
    with pytest.raises(ConfigurationError):
        KerrCoupling("a", "b", float("nan"))


def test_kerr_and_phase_shifter_commute_exactly():
    s = pair(3)
    K = cross_kerr(s, KerrCoupling("a", "b", 0.3)).dense()
    P = phase_shifter(s, "b", 1.1).dense()
    assert np.array_equal(K @ P, P @ K)


def test_elements_are_unitary():
    s = pair(4)
    for U in (phase_shifter(s, "a", 2.2).dense(), cross_kerr(s, KerrCoupling("a", "b", 0.7)).dense()):
        assert np.max(np.abs(U.conj().T @ U - np.eye(s.dim))) < 1e-12


def lr_system(N):
    return ModeSystem.build([("L", "bosonic", N), ("R", "bosonic", N)], [({"L": 1, "R": 1}, N)])


def test_polarization_to_path_relabels():
    s = lr_system(3)
    out = polarization_to_path(StateVector.basis_state(s, (3, 0)))
    assert out.system.labels == ("a_path", "b_path")
    assert out.amplitude((3, 0)) == pytest.approx(1.0)


def test_polarization_to_path_noon():
    s = lr_system(2)
    psi = noon_state(s, "L", "R", 2)
    out = polarization_to_path(psi)
    assert np.array_equal(out.amplitudes, psi.amplitudes)
    assert out.amplitude((2, 0)) == pytest.approx(1 / math.sqrt(2))
    assert out.amplitude((0, 2)) == pytest.approx(1 / math.sqrt(2))


def test_polarization_to_path_vacuum_and_errors():
    s = ModeSystem.build([("L", "bosonic", 1), ("R", "bosonic", 1)], [])
    out = polarization_to_path(StateVector.basis_state(s, (0, 0)))
    assert out.amplitude((0, 0)) == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        polarization_to_path(StateVector.basis_state(pair(1), (0, 0)))
