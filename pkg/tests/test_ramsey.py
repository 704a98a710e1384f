import math

import numpy as np
import pytest

from noonsim.fock import ConfigurationError, ModeSystem, StateVector, build_mode_operator
from noonsim.fredkin import u_qfg
from noonsim.ramsey import (
    RamseyParams,
    dispersive_phase,
    reference_output_state,
    ramsey_system,
    ramsey_zone,
    run_ramsey_qfg,
    u_ramsey_qfg,
)


@pytest.mark.parametrize("N", range(1, 7))
def test_pi_phase_gives_two_noon_forms(N):
    out = {o.atom_state: o for o in run_ramsey_qfg(RamseyParams.from_phase(N, math.pi))}
    assert set(out) == {"g1", "g2"}
    for o in out.values():
        assert o.probability == pytest.approx(0.5, abs=1e-12)
        assert o.noon_fidelity >= 1 - 1e-10
    # g2 leaves the "+" form, g1 the "-" form
    assert out["g2"].matched_form == "psi1"
    assert out["g1"].matched_form == "psi2"


@pytest.mark.parametrize("N", [1, 3, 4])
def test_zero_phase_returns_atom_to_g2(N):
    out = run_ramsey_qfg(RamseyParams.from_phase(N, 0.0))
    assert [o.atom_state for o in out] == ["g2"]
    assert out[0].probability == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("N", [2, 5])
@pytest.mark.parametrize("phi", [0.0, math.pi / 4, math.pi / 2, math.pi])
def test_outcome_probabilities_sum_to_one(N, phi):
    out = run_ramsey_qfg(RamseyParams.from_phase(N, phi))
    assert sum(o.probability for o in out) == pytest.approx(1.0, abs=1e-12)


def test_zone_is_unitary_involution():
    s = ramsey_system(3)
    R = ramsey_zone(s).dense()
    eye = np.eye(s.dim)
    assert np.max(np.abs(R @ R - eye)) < 1e-14
    assert np.max(np.abs(R.conj().T @ R - eye)) < 1e-14
    assert np.array_equal(R, ramsey_zone(s, "R2").dense())
    with pytest.raises(ConfigurationError):
        ramsey_zone(s, "R3")


def test_zone_on_single_atom():
    s = ramsey_system(1)
    R = ramsey_zone(s)
    out = R @ StateVector.basis_state(s, (0, 1, 0))
    assert out.amplitude((1, 1, 0)) == pytest.approx(1 / math.sqrt(2))
    assert out.amplitude((0, 1, 0)) == pytest.approx(-1 / math.sqrt(2))


def test_g1_sector_matches_control_photon_gate():
    N, phi = 3, 0.7
    s = ramsey_system(N)
    U = u_ramsey_qfg(RamseyParams.from_phase(N, phi), s).dense()
    sig = ModeSystem.build([("c", "bosonic", 1), ("a", "bosonic", N), ("b", "bosonic", N)],
                           [({"a": 1, "b": 1}, N)])
    V = u_qfg(sig, phi).dense()
    # identical basis ordering: atom occupation plays the control photon number
    assert s.basis == sig.basis
    assert np.max(np.abs(U - V)) < 1e-13
    g2 = s.occupations("atom") == 0
    assert np.allclose(U[np.ix_(g2, g2)], np.eye(g2.sum()))


def test_gate_unitary_and_commutes_with_atom_number():
    s = ramsey_system(4)
    U = u_ramsey_qfg(RamseyParams.from_phase(4, 1.1), s).dense()
    n = build_mode_operator(s, "atom", "number").dense()
    assert np.max(np.abs(U.conj().T @ U - np.eye(s.dim))) < 1e-12
    assert np.max(np.abs(U @ n - n @ U)) < 1e-12


def test_dispersive_phase_scaling():
    p = RamseyParams(2, 0.5, 3.0, 0.25)
    assert p.phi == pytest.approx(3.0)
    assert dispersive_phase(0.5, 6.0, 0.25) == pytest.approx(2 * p.phi)
    assert RamseyParams.from_phase(2, 1.3, g=2.0, Delta=5.0).phi == pytest.approx(1.3)


def test_reference_transit_gives_pi():
    g = 5 * math.pi * 1e6
    assert dispersive_phase(g, 2e-6, 10 * g) == pytest.approx(math.pi, rel=1e-12)


def test_reference_output_forms():
    plus, minus = reference_output_state(2, +1), reference_output_state(2, -1)
    assert plus.amplitude((0, 2)) == pytest.approx(-1 / math.sqrt(2))
    assert abs(np.vdot(plus.amplitudes, minus.amplitudes)) < 1e-15


def test_params_validation():
    with pytest.raises(ConfigurationError):
        RamseyParams(0, 1, 1, 1)
    with pytest.raises(ConfigurationError):
        RamseyParams(1, 1, -1, 1)
    with pytest.raises(ConfigurationError):
        RamseyParams(1, 1, 1, 0)
