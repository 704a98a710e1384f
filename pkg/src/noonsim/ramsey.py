"""Fredkin gate from a dispersive atom-cavity phase inside a Ramsey interferometer.

The atom is a two-level qubit mode ``atom`` whose occupation 1 is ``|g1>``
and 0 is ``|g2>``; ``sigma+ sigma-`` is then the atom's number operator.
Photons in the signal modes ``a``/``b`` see the cavity phase only while the
atom is in ``|g1>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock import (
    ConfigurationError,
    LinearOperator,
    ModeSystem,
    StateVector,
    measure_occupations,
    phase_free_two_component_fidelity,
)
from .fredkin import signal_system, u_qfg

ATOM = "atom"
G1, G2 = 1, 0


@dataclass(frozen=True)
class RamseyParams:
    N: int
    g: float
    tau_c: float
    Delta: float

    def __post_init__(self):
        if self.N < 1:
            raise ConfigurationError("N must be >= 1")
        if not (self.g > 0 and self.tau_c >= 0 and self.Delta > 0):
            raise ConfigurationError("g and Delta must be positive, tau_c nonnegative")

    @property
    def phi(self) -> float:
        return dispersive_phase(self.g, self.tau_c, self.Delta)

    @classmethod
    def from_phase(cls, N: int, phi: float, g: float = 1.0, Delta: float = 1.0) -> "RamseyParams":
        return cls(N, g, phi * Delta / g**2, Delta)


def dispersive_phase(g: float, tau_c: float, Delta: float) -> float:
    """Phase ``g^2 tau_c / Delta`` imprinted on ``|g1>`` per cavity photon."""
    return g * g * tau_c / Delta


def ramsey_system(N: int) -> ModeSystem:
    return ModeSystem.build(
        [(ATOM, "qubit", 1), ("a", "bosonic", N), ("b", "bosonic", N)],
        [({"a": 1, "b": 1}, N)],
    )


def ramsey_zone(system: ModeSystem, which: str = "R1") -> LinearOperator:
    """``|g1> -> (|g1>+|g2>)/sqrt2``, ``|g2> -> (|g1>-|g2>)/sqrt2`` on the atom.

    R1 and R2 are the same matrix.
    """
    if which not in ("R1", "R2"):
        raise ConfigurationError("Ramsey zone must be 'R1' or 'R2'")
    qi = system.index_of(ATOM)
    idx = system.lookup()
    s = 1 / math.sqrt(2)
    rows, cols, vals = [], [], []
    for col, state in enumerate(system.basis):
        flipped = list(state)
        flipped[qi] = 1 - state[qi]
        same, other = idx[tuple(state)], idx[tuple(flipped)]
        rows += [same, other]
        cols += [col, col]
        # g1 column: +, +   g2 column: -, +
        vals += [s if state[qi] == G1 else -s, s]
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(system.dim, system.dim), dtype=complex)
    return LinearOperator(system, mat, hermitian=True)


def u_ramsey_qfg(params: RamseyParams, system: ModeSystem | None = None) -> LinearOperator:
    """``exp[i phi s+s- J0] exp[i phi s+s- J2]`` with ``phi = g^2 tau_c / Delta``."""
    system = ramsey_system(params.N) if system is None else system
    return u_qfg(system, params.phi, control=ATOM)


def reference_output_state(N: int, sign: int) -> StateVector:
    """``(|N,0> + sign * e^{-i N pi/2} |0,N>)/sqrt(2)``."""
    return StateVector.superposition(
        signal_system(N), {(N, 0): 1.0, (0, N): sign * np.exp(-1j * N * math.pi / 2)}
    )


@dataclass(frozen=True, eq=False)
class AtomOutcome:
    atom_state: str  # "g1" or "g2"
    probability: float
    conditional_state: StateVector
    noon_fidelity: float
    psi1_fidelity: float  # vs the "+" output form
    psi2_fidelity: float  # vs the "-" output form

    @property
    def matched_form(self) -> str | None:
        if self.psi1_fidelity > 1 - 1e-8:
            return "psi1"
        if self.psi2_fidelity > 1 - 1e-8:
            return "psi2"
        return None

    def as_record(self) -> dict:
        return {
            "atom_state": self.atom_state,
            "probability": self.probability,
            "noon_fidelity": self.noon_fidelity,
            "psi1_fidelity": self.psi1_fidelity,
            "psi2_fidelity": self.psi2_fidelity,
            "matched_form": self.matched_form,
        }


def run_ramsey_qfg(params: RamseyParams) -> list[AtomOutcome]:
    """R1 -> dispersive gate -> R2 -> atom detection, atom starting in ``|g2>``.

    Returns the ``g1`` and ``g2`` outcomes (those with nonzero probability)
    with the normalized photon state left behind.
    """
    N = params.N
    system = ramsey_system(N)
    psi = StateVector.basis_state(system, (G2, N, 0))
    for op in (ramsey_zone(system, "R1"), u_ramsey_qfg(params, system), ramsey_zone(system, "R2")):
        psi = op @ psi
    forms = {+1: reference_output_state(N, +1), -1: reference_output_state(N, -1)}
    out = []
    for o in sorted(measure_occupations(psi, [ATOM]), key=lambda o: -o.counts[0]):
        st = o.state
        out.append(AtomOutcome(
            atom_state="g1" if o.counts[0] == G1 else "g2",
            probability=o.probability,
            conditional_state=st,
            noon_fidelity=phase_free_two_component_fidelity(st, (N, 0), (0, N)),
            psi1_fidelity=float(abs(np.vdot(forms[+1].amplitudes, st.amplitudes)) ** 2),
            psi2_fidelity=float(abs(np.vdot(forms[-1].amplitudes, st.amplitudes)) ** 2),
        ))
    return out
