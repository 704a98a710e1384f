"""Quantum Fredkin gate NOON generator and its bootstrapped variant.

Signal modes ``a``/``b`` carry the N photons that end up in the NOON state;
control modes ``c``/``d`` are the two arms of the second interferometer.
Detector D1 counts mode ``c`` and D2 counts mode ``d``.  A single-photon
control is the ``K = 1`` case of a control NOON state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fock import (
    DENSE_LIMIT,
    ConfigurationError,
    ContractViolation,
    LinearOperator,
    ModeSystem,
    ResourceError,
    StateVector,
    build_monomial,
    expm_dense,
    fidelity,
    measure_occupations,
    phase_free_two_component_fidelity,
)
from .optics import KerrCoupling, beam_splitter, cross_kerr, noon_state, phase_shifter

SIGNAL = ("a", "b")
CONTROL = ("c", "d")

# BS1 and BS2 of the signal interferometer; with these orientations the
# circuit equals exp(i chi n_c J0) exp(i chi n_c J2) exactly, no extra phases.
BS1_THETA = math.pi / 4
BS2_THETA = -math.pi / 4
# Output splitter of the control interferometer.
OUTPUT_THETA = math.pi / 4


class InfeasiblePostselection(RuntimeError):
    """No detection pattern satisfies the herald condition."""


def signal_control_system(N: int, K: int) -> ModeSystem:
    """Modes a, b (N photons total) and c, d (K photons total)."""
    return ModeSystem.build(
        [("a", "bosonic", N), ("b", "bosonic", N), ("c", "bosonic", K), ("d", "bosonic", K)],
        [({"a": 1, "b": 1}, N), ({"c": 1, "d": 1}, K)],
    )


def signal_system(N: int) -> ModeSystem:
    return ModeSystem.build(
        [("a", "bosonic", N), ("b", "bosonic", N)], [({"a": 1, "b": 1}, N)]
    )


@dataclass(frozen=True, eq=False)
class SchwingerOps:
    J0: LinearOperator
    J2: LinearOperator

    @classmethod
    def build(cls, system: ModeSystem, a: str = "a", b: str = "b") -> "SchwingerOps":
        na = build_monomial(system, [(a, "number")])
        nb = build_monomial(system, [(b, "number")])
        J0 = (na + nb).scale(0.5)
        # (a^dag b - a b^dag) / 2i == Y + Y^dag with Y = a^dag b / 2i
        J2 = build_monomial(system, [(a, "raising"), (b, "lowering")]).scale(1 / 2j).hermitian_part()
        return cls(J0, J2)


def u_qfg(system: ModeSystem, chi: float, control: str = "c") -> LinearOperator:
    """``exp(i chi n_c J0) exp(i chi n_c J2)``; the J2 factor acts first."""
    for lab in SIGNAL:
        system.index_of(lab)
    nc = build_monomial(system, [(control, "number")]).dense()
    ops = SchwingerOps.build(system)
    if system.dim > DENSE_LIMIT:
        raise ResourceError(f"dimension {system.dim} exceeds dense limit {DENSE_LIMIT}")
    U0 = expm_dense(1j * chi * nc @ ops.J0.dense())
    U2 = expm_dense(1j * chi * nc @ ops.J2.dense())
    return LinearOperator(system, sp.csr_matrix(U0 @ U2))


def circuit_qfg(system: ModeSystem, chi: float, control: str = "c") -> LinearOperator:
    """BS2 . cross-Kerr(b, control; chi per photon) . BS1 on the signal modes."""
    bs1 = beam_splitter(system, "a", "b", BS1_THETA)
    kerr = cross_kerr(system, KerrCoupling("b", control, chi))
    bs2 = beam_splitter(system, "a", "b", BS2_THETA)
    return bs2 @ kerr @ bs1


def swap_phase(N: int) -> float:
    """Phase picked up by ``|N,0> -> |0,N>`` under the gate at total phase pi."""
    return -N * math.pi / 2


def reference_relative_phase(n_d1: int, n_d2: int) -> complex:
    """Relative phase of ``|0,N>`` to ``|N,0>`` in the textbook conditional state

    ``(-i)^{n_D2}|N,0> + i (-i)^{n_D1}|0,N>``.
    """
    return 1j * (-1j) ** n_d1 / (-1j) ** n_d2


def convention_phase(N: int) -> float:
    """Extra relative phase of our beam-splitter conventions vs the textbook form.

    Simulated heralded states carry ``exp(-i N pi/2) i^{n_D2 - n_D1}`` on
    ``|0,N>``; the textbook form carries ``i * i^{n_D2 - n_D1}``.
    """
    return swap_phase(N) - math.pi / 2


def phase_correction(
    n_d1: int,
    n_d2: int,
    N: int,
    system: ModeSystem,
    K: int | None = None,
    convention: float = 0.0,
) -> LinearOperator:
    """Phase shifter on mode ``b`` removing the herald-dependent relative phase.

    The angle ``theta`` in ``[0, 2 pi)`` satisfies ``N theta = -arg(r)`` mod
    ``2 pi``, with ``r`` the textbook relative phase times ``exp(i convention)``.
    """
    if K is not None and n_d1 + n_d2 != K:
        raise ContractViolation(f"({n_d1}, {n_d2}) is not a heralded outcome for K={K}")
    r = reference_relative_phase(n_d1, n_d2) * np.exp(1j * convention)
    theta = ((-np.angle(r)) % (2 * math.pi)) / N
    if math.isclose(theta, 2 * math.pi / N):
        theta = 0.0
    return phase_shifter(system, "b", theta)


def kerr_boost_requirement(phi0: float, target: float = math.pi) -> int:
    """Control photons needed so that ``K * phi0`` reaches ``target``."""
    if not phi0 > 0:
        raise ConfigurationError("per-photon Kerr phase must be positive")
    ratio = target / phi0
    k = math.ceil(ratio)
    # guard against ceil(8.000000000000002) for exact divisions
    if math.isclose(ratio, round(ratio), rel_tol=1e-12, abs_tol=0.0):
        k = round(ratio)
    return max(int(k), 0)


@dataclass(frozen=True)
class BootstrapConfig:
    N: int
    K: int
    phi0: float
    detector_efficiency: float = 1.0
    mode: str = "exact"
    seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ConfigurationError("N must be >= 1")
        if self.K < 1:
            raise ConfigurationError("K must be >= 1")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ConfigurationError("detector_efficiency must lie in [0, 1]")
        if self.mode not in ("exact", "sampled"):
            raise ConfigurationError("mode must be 'exact' or 'sampled'")


@dataclass(frozen=True, eq=False)
class DetectionOutcome:
    n_D1: int
    n_D2: int
    heralded: bool
    probability: float
    conditional_state: StateVector | None
    corrected_state: StateVector | None = None
    noon_fidelity: float = 0.0
    corrected_fidelity: float = 0.0
    reference_form_fidelity: float = float("nan")
    raw: object = field(default=None, repr=False)

    def as_record(self) -> dict:
        return {
            "n_D1": self.n_D1,
            "n_D2": self.n_D2,
            "heralded": self.heralded,
            "probability": self.probability,
            "noon_fidelity": self.noon_fidelity,
            "corrected_fidelity": self.corrected_fidelity,
            "reference_form_fidelity": self.reference_form_fidelity,
        }


def _reference_form(N: int, n_d1: int, n_d2: int, convention: float) -> StateVector:
    system = signal_system(N)
    r = reference_relative_phase(n_d1, n_d2) * np.exp(1j * convention)
    return StateVector.superposition(system, {(N, 0): 1.0, (0, N): r})


def _finish(raw_outcomes, N: int, K: int, correct: bool) -> list[DetectionOutcome]:
    conv = convention_phase(N)
    target = noon_state(signal_system(N), "a", "b", N)
    out = []
    for o in raw_outcomes:
        n1, n2 = o.counts
        heralded = n1 + n2 == K
        if not heralded:
            rho = o.density_matrix()
            out.append(DetectionOutcome(
                n1, n2, False, o.probability, None,
                noon_fidelity=phase_free_two_component_fidelity(rho, (N, 0), (0, N), o.system),
                raw=o,
            ))
            continue
        st = o.state
        corrected = st
        if correct:
            corrected = phase_correction(n1, n2, N, st.system, K, conv) @ st
        out.append(DetectionOutcome(
            n1, n2, True, o.probability, st,
            corrected_state=corrected,
            noon_fidelity=phase_free_two_component_fidelity(st, (N, 0), (0, N)),
            corrected_fidelity=fidelity(corrected, target),
            reference_form_fidelity=fidelity(st, _reference_form(N, n1, n2, conv)),
            raw=o,
        ))
    return out


def run_single_control(N: int, chi: float, detector_efficiency: float = 1.0) -> list[DetectionOutcome]:
    """Single control photon behind a 50/50 splitter, closed-form gate."""
    if N < 1:
        raise ConfigurationError("N must be >= 1")
    system = signal_control_system(N, 1)
    psi = StateVector.superposition(system, {(N, 0, 1, 0): 1.0, (N, 0, 0, 1): 1.0})
    psi = u_qfg(system, chi, "c") @ psi
    psi = beam_splitter(system, "c", "d", OUTPUT_THETA) @ psi
    raw = measure_occupations(psi, CONTROL, detector_efficiency)
    return _finish(raw, N, 1, correct=True)


def bootstrap_state(N: int, K: int, phi0: float) -> StateVector:
    """Joint signal/control state just before the control detectors."""
    system = signal_control_system(N, K)
    psi = StateVector.superposition(system, {(N, 0, K, 0): 1.0, (N, 0, 0, K): 1.0})
    for op in (
        beam_splitter(system, "a", "b", BS1_THETA),
        cross_kerr(system, KerrCoupling("b", "c", phi0)),
        beam_splitter(system, "a", "b", BS2_THETA),
        beam_splitter(system, "c", "d", OUTPUT_THETA),
    ):
        psi = op @ psi
    return psi


def run_bootstrap(cfg: BootstrapConfig) -> list[DetectionOutcome]:
    """Fredkin gate driven by a K-photon control NOON state.

    Exact mode returns every detection pattern (heralded or not); sampled
    mode returns a single pattern drawn with ``cfg.seed``.
    """
    psi = bootstrap_state(cfg.N, cfg.K, cfg.phi0)
    raw = measure_occupations(
        psi, CONTROL, cfg.detector_efficiency, seed=cfg.seed, exact=True
    )
    outcomes = _finish(raw, cfg.N, cfg.K, correct=True)
    if not any(o.heralded and o.probability > 0 for o in outcomes):
        raise InfeasiblePostselection(
            f"no detection pattern with n_D1 + n_D2 = {cfg.K} at efficiency {cfg.detector_efficiency}"
        )
    if cfg.mode == "exact":
        return outcomes
    drawn = measure_occupations(
        psi, CONTROL, cfg.detector_efficiency, seed=cfg.seed, exact=False
    )
    return [o for o in outcomes if (o.n_D1, o.n_D2) == drawn[0].counts]


def herald_probability(outcomes: list[DetectionOutcome]) -> float:
    return float(sum(o.probability for o in outcomes if o.heralded))


def mean_heralded_fidelity(outcomes: list[DetectionOutcome], corrected: bool = False) -> float:
    p = herald_probability(outcomes)
    if p == 0:
        return 0.0
    attr = "corrected_fidelity" if corrected else "noon_fidelity"
    return float(sum(o.probability * getattr(o, attr) for o in outcomes if o.heralded) / p)
