"""Scalar feasibility arithmetic for the NOON-generation schemes.

All rates are angular frequencies (rad/s) and times are seconds.  The
atom-number limit uses a deliberately simple, documented noise model; it is
tagged ``MODEL-BASED`` in every report.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .fock import ConfigurationError
from .fredkin import kerr_boost_requirement
from .ramsey import dispersive_phase

ATOM_LIMIT_CAP = 10_000
MAX_G_TAU = 1e5

# The reference parameter set: g = 5 pi MHz, Delta = 10 g, target phase pi.
REFERENCE_G = 5 * math.pi * 1e6
REFERENCE_DELTA = 10 * REFERENCE_G


@dataclass(frozen=True)
class FeasibilityInput:
    Omega_c: float = 0.0
    g: float = REFERENCE_G
    kappa: float = 0.0
    Delta: float = REFERENCE_DELTA
    N_atoms: int = 100
    detector_efficiency: float = 1.0
    phi0: float = 0.1

    def __post_init__(self):
        for name in ("Omega_c", "g", "kappa", "Delta"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be nonnegative")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ConfigurationError("detector_efficiency must lie in [0, 1]")
        if self.N_atoms < 0:
            raise ConfigurationError("N_atoms must be nonnegative")


@dataclass
class FeasibilityReport:
    eta: float
    K_required: int
    tau_c: float
    g_tau_c: float
    atom_limit_estimate: int
    atom_limit_capped: bool
    herald_probability: float
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["tau_c_us"] = self.tau_c * 1e6
        return d


def raman_rabi(inp: FeasibilityInput) -> float:
    """Two-photon Raman Rabi frequency ``Omega_c g Delta / (kappa^2 + Delta^2)``."""
    denom = inp.kappa**2 + inp.Delta**2
    if denom == 0:
        raise ConfigurationError("kappa^2 + Delta^2 must be nonzero")
    return inp.Omega_c * inp.g * inp.Delta / denom


def dispersive_transit(g: float, Delta: float, target_phi: float = math.pi) -> float:
    """Cavity transit time giving phase ``target_phi = g^2 tau_c / Delta``."""
    if g == 0:
        raise ConfigurationError("g must be nonzero")
    return target_phi * Delta / (g * g)


def noise_photons(n_atoms: int, kappa: float, transfer_duration: float, excited_fraction: float) -> float:
    """Integrated noise photons ``n_atoms * kappa * T * excited_fraction``.

    Linear in atom number: collective emission and cavity loss both grow with
    the ensemble.  ``excited_fraction`` is the per-atom time-averaged
    occupation of the lossy levels during transfer.
    """
    return n_atoms * kappa * transfer_duration * excited_fraction


def atom_limit(inp: FeasibilityInput, transfer_duration: float, excited_fraction: float = 1.0,
               cap: int = ATOM_LIMIT_CAP) -> tuple[int, bool]:
    """Largest atom number keeping :func:`noise_photons` below one.

    Returns ``(limit, capped)``; with no loss the limit is ``cap`` and
    ``capped`` is True.
    """
    if not transfer_duration > 0:
        raise ConfigurationError("transfer_duration must be positive")
    rate = inp.kappa * transfer_duration * excited_fraction
    if rate <= 0:
        return cap, True
    # largest n with n * rate < 1
    n = math.ceil(1.0 / rate) - 1
    if noise_photons(n + 1, inp.kappa, transfer_duration, excited_fraction) < 1.0:
        n += 1
    if n >= cap:
        return cap, True
    return max(int(n), 0), False


def bootstrap_requirements(inp: FeasibilityInput) -> int:
    return kerr_boost_requirement(inp.phi0, math.pi)


def feasibility_report(inp: FeasibilityInput, transfer_duration: float = 1e-6,
                       excited_fraction: float = 1.0, target_phi: float = math.pi) -> FeasibilityReport:
    eta = raman_rabi(inp)
    K = bootstrap_requirements(inp)
    tau = dispersive_transit(inp.g, inp.Delta, target_phi)
    limit, capped = atom_limit(inp, transfer_duration, excited_fraction)
    notes = [
        f"REFERENCE: K_required = ceil(pi / phi0) = {K} control photons",
        f"REFERENCE: tau_c = phi * Delta / g^2 = {tau:.17g} s",
        f"REFERENCE: g * tau_c = {inp.g * tau:.6g} (bound {MAX_G_TAU:.0e}: "
        f"{'within' if inp.g * tau <= MAX_G_TAU else 'EXCEEDED'})",
        f"REFERENCE: eta = Omega_c g Delta / (kappa^2 + Delta^2) = {eta:.6g} rad/s",
        "MODEL-BASED: atom limit from noise = N * kappa * T * excited_fraction < 1"
        + (" (no loss: capped)" if capped else ""),
    ]
    return FeasibilityReport(
        eta=eta,
        K_required=K,
        tau_c=tau,
        g_tau_c=inp.g * tau,
        atom_limit_estimate=limit,
        atom_limit_capped=capped,
        herald_probability=inp.detector_efficiency**K,
        notes=notes,
    )


__all__ = [
    "FeasibilityInput",
    "FeasibilityReport",
    "atom_limit",
    "bootstrap_requirements",
    "dispersive_phase",
    "dispersive_transit",
    "feasibility_report",
    "noise_photons",
    "raman_rabi",
]
