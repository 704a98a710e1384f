"""Linear-optical elements and Kerr couplings as unitaries on a ModeSystem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import (
    BOSONIC,
    ConfigurationError,
    LinearOperator,
    Mode,
    ModeSystem,
    StateVector,
    build_monomial,
    unitary,
)


@dataclass(frozen=True)
class KerrCoupling:
    """Cross-Kerr coupling imparting ``phi0`` per photon pair of the two modes."""

    mode_a: str
    mode_b: str
    phi0: float

    def __post_init__(self):
        if self.mode_a == self.mode_b:
            raise ConfigurationError("cross-Kerr needs two distinct modes")
        if not np.isfinite(self.phi0):
            raise ConfigurationError("cross-Kerr phase must be finite")


def _bosonic(system: ModeSystem, label: str) -> None:
    mode = system.modes[system.index_of(label)]
    if mode.kind != BOSONIC:
        raise ConfigurationError(f"mode {label!r} is {mode.kind}, expected bosonic")


def beam_splitter_generator(system: ModeSystem, mode_a: str, mode_b: str) -> LinearOperator:
    """``a^dagger b + a b^dagger``."""
    _bosonic(system, mode_a)
    _bosonic(system, mode_b)
    hop = build_monomial(system, [(mode_a, "raising"), (mode_b, "lowering")])
    return hop.hermitian_part()


def beam_splitter(system: ModeSystem, mode_a: str, mode_b: str, theta: float) -> LinearOperator:
    """``exp[i theta (a^dagger b + a b^dagger)]``; ``theta = pi/4`` is 50/50.

    In this convention ``|1,0> -> (|1,0> + i|0,1>)/sqrt(2)`` at ``pi/4``.
    """
    return unitary(beam_splitter_generator(system, mode_a, mode_b), -theta)


def phase_shifter(system: ModeSystem, mode: str, phi: float) -> LinearOperator:
    """Diagonal ``exp(i phi n_mode)``."""
    n = system.occupations(mode)
    return LinearOperator.diagonal(system, np.exp(1j * phi * n))


def cross_kerr(system: ModeSystem, coupling: KerrCoupling) -> LinearOperator:
    """Diagonal ``exp(i phi0 n_A n_B)``."""
    na = system.occupations(coupling.mode_a)
    nb = system.occupations(coupling.mode_b)
    return LinearOperator.diagonal(system, np.exp(1j * coupling.phi0 * na * nb))


def polarization_to_path(
    psi: StateVector,
    left: str = "L",
    right: str = "R",
    path_a: str = "a_path",
    path_b: str = "b_path",
) -> StateVector:
    """Map circular-polarization modes onto two spatial paths.

    The QWP + PBS + HWP chain is lossless and sends each circular
    polarization into its own path with a common linear polarization, so it
    acts as a relabeling ``L -> a_path``, ``R -> b_path`` with amplitudes
    untouched.  Any other modes in ``psi`` keep their labels.
    """
    system = psi.system
    labels = system.labels
    if left not in labels or right not in labels:
        raise ConfigurationError(f"state has no {left!r}/{right!r} polarization modes")
    rename = {left: path_a, right: path_b}
    modes = tuple(Mode(rename.get(m.label, m.label), m.kind, m.cutoff) for m in system.modes)
    out = ModeSystem(modes, system.constraints)
    # same mode order and constraints, so the enumerated basis is identical
    return StateVector(out, psi.amplitudes)


def noon_state(system: ModeSystem, mode_a: str, mode_b: str, n: int, phase: float = 0.0,
               rest: dict[str, int] | None = None) -> StateVector:
    """``(|n,0> + e^{i phase}|0,n>)/sqrt(2)`` on two modes; other modes fixed by ``rest``."""
    rest = rest or {}
    ia, ib = system.index_of(mode_a), system.index_of(mode_b)
    occ = [rest.get(lab, 0) for lab in system.labels]
    first, second = list(occ), list(occ)
    first[ia], second[ib] = n, n
    if n == 0:
        return StateVector.basis_state(system, first)
    return StateVector.superposition(
        system, {tuple(first): 1.0, tuple(second): np.exp(1j * phase)}
    )
