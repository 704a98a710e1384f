"""Constrained occupation-number bases, state vectors and operators.

Everything downstream (optics elements, the Fredkin gate, the atom-cavity
NOON gun, the Ramsey gate) is expressed on a :class:`ModeSystem`: an ordered
list of modes with cutoffs plus linear conservation constraints.  Only the
occupation tuples satisfying every constraint are enumerated, which keeps the
collective atom-cavity Hilbert spaces small.

Units: hbar = 1, all Hamiltonian parameters are angular frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.stats import binom

BOSONIC = "bosonic"
ATOMIC = "atomic-population"
QUBIT = "qubit"
MODE_KINDS = (BOSONIC, ATOMIC, QUBIT)

DENSE_LIMIT = 4096
HERMITIAN_TOL = 1e-12
TIMEDEP_NORM_TOL = 1e-9


class ConfigurationError(ValueError):
    """Inconsistent mode system or constraint definition."""


class ContractViolation(ValueError):
    """An operation was called outside its precondition."""


class ResourceError(RuntimeError):
    """Hilbert-space dimension exceeds the dense limit."""


class NumericalError(RuntimeError):
    """Integration lost normalization beyond tolerance."""


@dataclass(frozen=True)
class Mode:
    label: str
    kind: str = BOSONIC
    cutoff: int = 1


@dataclass(frozen=True)
class Constraint:
    """Linear invariant ``sum(coeffs[i] * n_i) == value``."""

    coeffs: tuple[int, ...]
    value: int


@dataclass(frozen=True)
class ModeSystem:
    modes: tuple[Mode, ...]
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        labels = [m.label for m in self.modes]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"duplicate mode labels in {labels}")
        for m in self.modes:
            if m.kind not in MODE_KINDS:
                raise ConfigurationError(f"mode {m.label!r}: unknown kind {m.kind!r}")
            if m.cutoff < 0:
                raise ConfigurationError(f"mode {m.label!r}: negative cutoff")
            if m.kind == QUBIT and m.cutoff != 1:
                raise ConfigurationError(f"qubit mode {m.label!r} must have cutoff 1")
        for c in self.constraints:
            if len(c.coeffs) != len(self.modes):
                raise ConfigurationError(
                    f"constraint has {len(c.coeffs)} coefficients for {len(self.modes)} modes"
                )

    @classmethod
    def build(
        cls,
        modes: Iterable[tuple[str, str, int] | Mode],
        constraints: Iterable[tuple[dict[str, int] | Sequence[int], int]] = (),
    ) -> "ModeSystem":
        """Convenience constructor.

        Constraints may be given with a ``{label: coeff}`` dict instead of a
        full coefficient vector; missing labels get coefficient 0.
        """
        modes = tuple(m if isinstance(m, Mode) else Mode(*m) for m in modes)
        labels = [m.label for m in modes]
        cons = []
        for coeffs, value in constraints:
            if isinstance(coeffs, dict):
                unknown = set(coeffs) - set(labels)
                if unknown:
                    raise ConfigurationError(f"constraint names unknown modes {sorted(unknown)}")
                coeffs = tuple(int(coeffs.get(lab, 0)) for lab in labels)
            cons.append(Constraint(tuple(int(c) for c in coeffs), int(value)))
        return cls(modes, tuple(cons))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigurationError(f"unknown mode {label!r}; have {list(self.labels)}") from None

    @property
    def basis(self) -> tuple[tuple[int, ...], ...]:
        return enumerate_basis(self)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def lookup(self) -> dict[tuple[int, ...], int]:
        return _lookup(self)

    def constraint_diagonal(self, constraint: Constraint) -> np.ndarray:
        occ = np.asarray(self.basis, dtype=float).reshape(self.dim, len(self.modes))
        return occ @ np.asarray(constraint.coeffs, dtype=float)

    def occupations(self, label: str) -> np.ndarray:
        """Occupation of ``label`` for every basis state, as a float array."""
        i = self.index_of(label)
        return np.array([s[i] for s in self.basis], dtype=float)


BasisState = tuple[int, ...]


@lru_cache(maxsize=256)
def enumerate_basis(system: ModeSystem) -> tuple[BasisState, ...]:
    """All occupation tuples within cutoffs that satisfy every constraint.

    Tuples come out in lexicographic order over the declared mode order.
    Branches that can no longer meet a constraint are pruned using the
    reachable min/max of the remaining modes.
    """
    modes = system.modes
    cons = system.constraints
    n = len(modes)
    # lo[k][c], hi[k][c]: range of sum over modes k..n-1 for constraint c
    lo = np.zeros((n + 1, len(cons)), dtype=np.int64)
    hi = np.zeros((n + 1, len(cons)), dtype=np.int64)
    for k in range(n - 1, -1, -1):
        for ci, c in enumerate(cons):
            span = c.coeffs[k] * modes[k].cutoff
            lo[k, ci] = lo[k + 1, ci] + min(0, span)
            hi[k, ci] = hi[k + 1, ci] + max(0, span)
    targets = [c.value for c in cons]
    out: list[BasisState] = []

    def rec(k: int, prefix: list[int], partial: list[int]) -> None:
        if k == n:
            if partial == targets:
                out.append(tuple(prefix))
            return
        for v in range(modes[k].cutoff + 1):
            nxt = [p + c.coeffs[k] * v for p, c in zip(partial, cons)]
            if all(
                lo[k + 1, ci] <= targets[ci] - nxt[ci] <= hi[k + 1, ci] for ci in range(len(cons))
            ):
                prefix.append(v)
                rec(k + 1, prefix, nxt)
                prefix.pop()

    rec(0, [], [0] * len(cons))
    return tuple(out)


@lru_cache(maxsize=256)
def _lookup(system: ModeSystem) -> dict[BasisState, int]:
    return {s: i for i, s in enumerate(enumerate_basis(system))}


@dataclass(frozen=True, eq=False)
class StateVector:
    system: ModeSystem
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.system.dim,):
            raise ConfigurationError(
                f"amplitude vector has shape {amps.shape}, basis size is {self.system.dim}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, system: ModeSystem, occupations: Sequence[int]) -> "StateVector":
        return cls.superposition(system, {tuple(occupations): 1.0})

    @classmethod
    def superposition(
        cls, system: ModeSystem, terms: dict[tuple[int, ...], complex], normalize: bool = True
    ) -> "StateVector":
        amps = np.zeros(system.dim, dtype=complex)
        idx = system.lookup()
        for occ, amp in terms.items():
            occ = tuple(int(x) for x in occ)
            if occ not in idx:
                raise ConfigurationError(f"{occ} is not in the constrained basis")
            amps[idx[occ]] += amp
        if normalize:
            nrm = np.linalg.norm(amps)
            if nrm == 0:
                raise ConfigurationError("zero vector cannot be normalized")
            amps = amps / nrm
        return cls(system, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, occupations: Sequence[int]) -> complex:
        i = self.system.lookup().get(tuple(occupations))
        return 0j if i is None else complex(self.amplitudes[i])

    def expectation(self, op: "LinearOperator") -> complex:
        return complex(np.vdot(self.amplitudes, op.matrix @ self.amplitudes))

    def mean_occupation(self, label: str) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2 * self.system.occupations(label)))

    def terms(self, atol: float = 1e-12) -> dict[BasisState, complex]:
        return {
            s: complex(a) for s, a in zip(self.system.basis, self.amplitudes) if abs(a) > atol
        }


@dataclass(frozen=True, eq=False)
class LinearOperator:
    system: ModeSystem
    matrix: sp.csr_matrix
    hermitian: bool = False

    def __post_init__(self):
        mat = sp.csr_matrix(self.matrix, dtype=complex)
        d = self.system.dim
        if mat.shape != (d, d):
            raise ConfigurationError(f"operator shape {mat.shape} does not match basis size {d}")
        if self.hermitian and d:
            dev = abs(mat - mat.getH()).max() if mat.nnz else 0.0
            if dev > HERMITIAN_TOL:
                raise ContractViolation(f"operator flagged hermitian deviates by {dev:.3g}")
        object.__setattr__(self, "matrix", mat)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dagger(self) -> "LinearOperator":
        return LinearOperator(self.system, self.matrix.getH().tocsr(), self.hermitian)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        if self.matrix.nnz == 0:
            return True
        return abs(self.matrix - self.matrix.getH()).max() <= tol

    def _check(self, other_system: ModeSystem) -> None:
        if other_system != self.system:
            raise ConfigurationError("operands live on different mode systems")

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            self._check(other.system)
            return StateVector(self.system, self.matrix @ other.amplitudes)
        if isinstance(other, LinearOperator):
            self._check(other.system)
            return LinearOperator(self.system, (self.matrix @ other.matrix).tocsr())
        return NotImplemented

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        self._check(other.system)
        return LinearOperator(
            self.system, self.matrix + other.matrix, self.hermitian and other.hermitian
        )

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        self._check(other.system)
        return LinearOperator(
            self.system, self.matrix - other.matrix, self.hermitian and other.hermitian
        )

    def scale(self, factor: complex) -> "LinearOperator":
        keep = self.hermitian and complex(factor).imag == 0
        return LinearOperator(self.system, self.matrix * factor, keep)

    def hermitian_part(self) -> "LinearOperator":
        """``A + A^dagger``; used to add the h.c. of a coupling term."""
        return LinearOperator(self.system, self.matrix + self.matrix.getH(), True)

    @classmethod
    def identity(cls, system: ModeSystem) -> "LinearOperator":
        return cls(system, sp.identity(system.dim, dtype=complex, format="csr"), True)

    @classmethod
    def zero(cls, system: ModeSystem) -> "LinearOperator":
        return cls(system, sp.csr_matrix((system.dim, system.dim), dtype=complex), True)

    @classmethod
    def diagonal(cls, system: ModeSystem, values: np.ndarray) -> "LinearOperator":
        values = np.asarray(values)
        herm = bool(np.all(np.isreal(values)))
        return cls(system, sp.diags(values.astype(complex), format="csr"), herm)


LOWERING = "lowering"
RAISING = "raising"
NUMBER = "number"


def build_monomial(system: ModeSystem, factors: Sequence[tuple[str, str]]) -> LinearOperator:
    """Normal product of single-mode ladder/number operators.

    ``factors`` is written left to right as in the formula, e.g.
    ``[("aprime", "raising"), ("a", "lowering")]`` for ``d_a'^dagger d_a``;
    the rightmost factor acts first.  Matrix elements are computed on the
    occupation tuples directly, so intermediate states may leave the
    constrained basis; only the final image has to land in it.
    """
    resolved = [(system.index_of(lab), which) for lab, which in factors]
    for _, which in resolved:
        if which not in (LOWERING, RAISING, NUMBER):
            raise ConfigurationError(f"unknown operator kind {which!r}")
    cutoffs = [m.cutoff for m in system.modes]
    idx = system.lookup()
    rows, cols, vals = [], [], []
    for col, state in enumerate(system.basis):
        occ = list(state)
        amp = 1.0
        for mi, which in reversed(resolved):
            n = occ[mi]
            if which == LOWERING:
                if n == 0:
                    amp = 0.0
                    break
                amp *= math.sqrt(n)
                occ[mi] = n - 1
            elif which == RAISING:
                if n >= cutoffs[mi]:
                    amp = 0.0
                    break
                amp *= math.sqrt(n + 1)
                occ[mi] = n + 1
            else:
                amp *= n
                if n == 0:
                    break
        if amp == 0.0:
            continue
        row = idx.get(tuple(occ))
        if row is None:
            continue
        rows.append(row)
        cols.append(col)
        vals.append(amp)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(system.dim, system.dim), dtype=complex)
    return LinearOperator(system, mat, hermitian=all(w == NUMBER for _, w in resolved))


def build_mode_operator(system: ModeSystem, label: str, which: str) -> LinearOperator:
    """Single-mode lowering, raising or number operator on the constrained basis.

    Elements mapping out of the constrained basis are dropped, so on a
    number-conserving basis a lone ladder operator is identically zero; use
    :func:`build_monomial` for conserving products.
    """
    return build_monomial(system, [(label, which)])


def expm_dense(generator: np.ndarray) -> np.ndarray:
    """Matrix exponential (Pade scaling-and-squaring)."""
    return scipy.linalg.expm(generator)


def _hermitian_propagator(H: np.ndarray, dt: float) -> np.ndarray:
    """``exp(-i H dt)`` for hermitian ``H`` through its eigendecomposition."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * dt * w)) @ V.conj().T


def _check_dense(system: ModeSystem, limit: int) -> None:
    if system.dim > limit:
        raise ResourceError(f"dimension {system.dim} exceeds dense limit {limit}")


def unitary(H: LinearOperator, t: float, dense_limit: int = DENSE_LIMIT) -> LinearOperator:
    """``exp(-i H t)`` as a (dense-backed) operator."""
    if not H.is_hermitian():
        raise ContractViolation("evolution requires a hermitian generator")
    _check_dense(H.system, dense_limit)
    U = expm_dense(-1j * t * H.dense())
    return LinearOperator(H.system, sp.csr_matrix(U))


def evolve_exact(
    H: LinearOperator, psi: StateVector, t: float, dense_limit: int = DENSE_LIMIT
) -> StateVector:
    if psi.system != H.system:
        raise ConfigurationError("state and Hamiltonian live on different mode systems")
    if not H.is_hermitian():
        raise ContractViolation("evolve_exact requires a hermitian Hamiltonian")
    _check_dense(H.system, dense_limit)
    if t == 0:
        return psi
    out = expm_dense(-1j * t * H.dense()) @ psi.amplitudes
    return StateVector(psi.system, out)


# --- pulse schedules --------------------------------------------------------

LINEAR = "linear-ramp"
TANH = "tanh-ramp"
CONSTANT = "constant"
PULSE_SHAPES = (LINEAR, TANH, CONSTANT)


@dataclass(frozen=True)
class PulseSchedule:
    """Time profile of a control Rabi frequency.

    ``tanh-ramp`` is a shifted, rescaled tanh that starts exactly at 0 and
    ends exactly at ``peak``; its rise width is ``width * duration``.
    ``samples`` is the default number of integration steps.
    """

    shape: str = TANH
    peak: float = 0.0
    duration: float = 1.0
    samples: int = 1000
    width: float = 0.1

    def __post_init__(self):
        if self.shape not in PULSE_SHAPES:
            raise ConfigurationError(f"unknown pulse shape {self.shape!r}; use one of {PULSE_SHAPES}")
        if not self.duration > 0:
            raise ConfigurationError("pulse duration must be positive")
        if self.peak < 0:
            raise ConfigurationError("pulse peak must be nonnegative")
        if self.samples < 1:
            raise ConfigurationError("pulse samples must be >= 1")
        if not self.width > 0:
            raise ConfigurationError("tanh width must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.shape == CONSTANT:
            val = np.full_like(t, self.peak)
        elif self.shape == LINEAR:
            val = self.peak * np.clip(t / self.duration, 0.0, 1.0)
        else:
            half = 0.5 / self.width
            s = np.tanh((np.clip(t / self.duration, 0.0, 1.0) - 0.5) / self.width)
            val = self.peak * (s + math.tanh(half)) / (2 * math.tanh(half))
        return float(val) if val.ndim == 0 else val

    def times(self, steps: int | None = None) -> np.ndarray:
        return np.linspace(0.0, self.duration, (steps or self.samples) + 1)


Trajectory = list[tuple[float, StateVector]]


def evolve_timedep(
    H_builder: Callable[[float], LinearOperator],
    schedule: PulseSchedule,
    psi: StateVector,
    steps: int | None = None,
    dense_limit: int = DENSE_LIMIT,
) -> Trajectory:
    """Piecewise-constant midpoint propagation under ``H(Omega(t))``.

    Each step applies ``exp(-i H(Omega(t_mid)) dt)``, which is second order in
    ``dt``.  Returns ``[(t_0, psi_0), ..., (t_steps, psi_final)]``.
    """
    steps = schedule.samples if steps is None else steps
    if steps < 1:
        raise ContractViolation("steps must be >= 1")
    _check_dense(psi.system, dense_limit)
    ts = schedule.times(steps)
    dt = schedule.duration / steps
    norm0 = psi.norm()
    vec = psi.amplitudes.copy()
    traj: Trajectory = [(0.0, psi)]
    cache: dict[float, np.ndarray] = {}
    for k in range(steps):
        omega = float(schedule(0.5 * (ts[k] + ts[k + 1])))
        U = cache.get(omega)
        if U is None:
            H = H_builder(omega)
            if H.system != psi.system:
                raise ConfigurationError("H_builder returned an operator on another system")
            if not (H.hermitian or H.is_hermitian()):
                raise ContractViolation(f"H_builder({omega}) is not hermitian")
            U = _hermitian_propagator(H.dense(), dt)
            if schedule.shape == CONSTANT:
                cache[omega] = U
        vec = U @ vec
        traj.append((float(ts[k + 1]), StateVector(psi.system, vec)))
    drift = abs(np.linalg.norm(vec) - norm0)
    if drift > TIMEDEP_NORM_TOL:
        raise NumericalError(f"norm drift {drift:.3g} exceeds {TIMEDEP_NORM_TOL}; use more steps")
    return traj


# --- measurement ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DetectionOutcome:
    """Detected counts on the measured modes and the resulting signal state.

    ``branches`` lists ``(true_counts, weight, state)``: the post-measurement
    state of the unmeasured modes for every true photon number compatible
    with the detected counts, with weights summing to 1.  When detectors are
    perfect (or no photon can have been lost) there is a single branch and
    :attr:`state` is pure; otherwise the conditional state is the mixture
    returned by :meth:`density_matrix`.
    """

    counts: tuple[int, ...]
    probability: float
    branches: tuple[tuple[tuple[int, ...], float, StateVector], ...]
    heralded: bool = True

    @property
    def is_pure(self) -> bool:
        return len(self.branches) == 1

    @property
    def state(self) -> StateVector | None:
        return self.branches[0][2] if self.is_pure else None

    @property
    def system(self) -> ModeSystem:
        return self.branches[0][2].system

    def density_matrix(self) -> np.ndarray:
        rho = np.zeros((self.system.dim,) * 2, dtype=complex)
        for _, w, st in self.branches:
            rho += w * np.outer(st.amplitudes, st.amplitudes.conj())
        return rho


def reduced_system(system: ModeSystem, measured: dict[str, int]) -> ModeSystem:
    """Mode system left over after fixing the occupations in ``measured``."""
    keep = [i for i, lab in enumerate(system.labels) if lab not in measured]
    fixed = {system.index_of(lab): v for lab, v in measured.items()}
    cons = []
    for c in system.constraints:
        value = c.value - sum(c.coeffs[i] * v for i, v in fixed.items())
        coeffs = tuple(c.coeffs[i] for i in keep)
        if any(coeffs):
            cons.append(Constraint(coeffs, value))
    return ModeSystem(tuple(system.modes[i] for i in keep), tuple(cons))


def _true_count_distribution(psi: StateVector, labels: Sequence[str]):
    """Born-rule distribution over true counts and the conditional states."""
    system = psi.system
    mi = [system.index_of(lab) for lab in labels]
    keep = [i for i in range(len(system.modes)) if i not in mi]
    probs = np.abs(psi.amplitudes) ** 2
    groups: dict[tuple[int, ...], list[int]] = {}
    for k, s in enumerate(system.basis):
        groups.setdefault(tuple(s[i] for i in mi), []).append(k)
    out = {}
    for counts in sorted(groups):
        ks = groups[counts]
        p = float(probs[ks].sum())
        if p <= 0.0:
            continue
        sub = reduced_system(system, dict(zip(labels, counts)))
        idx = sub.lookup()
        amps = np.zeros(sub.dim, dtype=complex)
        for k in ks:
            amps[idx[tuple(system.basis[k][i] for i in keep)]] = psi.amplitudes[k]
        out[counts] = (p, StateVector(sub, amps / math.sqrt(p)))
    return out


def measure_occupations(
    psi: StateVector,
    labels: Sequence[str],
    efficiency: float | Sequence[float] = 1.0,
    seed: int | None = None,
    exact: bool = True,
    min_probability: float = 0.0,
) -> list[DetectionOutcome]:
    """Photon-number-resolving measurement of ``labels``.

    Each photon is detected independently with its mode's efficiency
    (binomial thinning).  With ``exact=True`` the full distribution over
    detected count tuples is returned in lexicographic order; otherwise a
    single outcome is sampled with ``numpy.random.default_rng(seed)``.
    """
    labels = list(labels)
    for lab in labels:
        psi.system.index_of(lab)
    effs = np.broadcast_to(np.asarray(efficiency, dtype=float), (len(labels),))
    if np.any(effs < 0) or np.any(effs > 1):
        raise ContractViolation(f"detector efficiency must lie in [0, 1], got {efficiency}")
    true = _true_count_distribution(psi, labels)

    acc: dict[tuple[int, ...], list] = {}
    for counts, (p, st) in true.items():
        ranges = [range(n + 1) for n in counts]
        for det in np.ndindex(*[len(r) for r in ranges]):
            w = 1.0
            for k, n, e in zip(det, counts, effs):
                w *= float(binom.pmf(k, n, e)) if 0 < e < 1 else float(k == round(e * n))
            if w == 0.0:
                continue
            acc.setdefault(tuple(int(k) for k in det), []).append((counts, p * w, st))

    outcomes = []
    for det in sorted(acc):
        parts = acc[det]
        total = sum(pw for _, pw, _ in parts)
        if total <= min_probability:
            continue
        branches = tuple((c, pw / total, st) for c, pw, st in parts)
        outcomes.append(DetectionOutcome(det, total, branches))

    if exact:
        return outcomes
    rng = np.random.default_rng(seed)
    keys = list(true)
    p = np.array([true[k][0] for k in keys])
    drawn = keys[rng.choice(len(keys), p=p / p.sum())]
    det = tuple(int(rng.binomial(n, e)) for n, e in zip(drawn, effs))
    return [o for o in outcomes if o.counts == det]


# --- fidelity ---------------------------------------------------------------


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.system != b.system:
        raise ConfigurationError("fidelity between states on different mode systems")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def phase_free_two_component_fidelity(
    psi: StateVector | np.ndarray,
    comp_a: Sequence[int],
    comp_b: Sequence[int],
    system: ModeSystem | None = None,
) -> float:
    """Best fidelity with ``(|A> + e^{i phi}|B>)/sqrt(2)`` over the phase ``phi``.

    Accepts a pure state or, with ``system`` given, a density matrix; for the
    latter the optimum is ``(rho_AA + rho_BB)/2 + |rho_AB|``.
    """
    if isinstance(psi, StateVector):
        a = abs(psi.amplitude(comp_a))
        b = abs(psi.amplitude(comp_b))
        return float(min(1.0, (a + b) ** 2 / 2))
    if system is None:
        raise ConfigurationError("a density matrix needs its mode system")
    idx = system.lookup()
    ia, ib = idx.get(tuple(comp_a)), idx.get(tuple(comp_b))
    raa = psi[ia, ia].real if ia is not None else 0.0
    rbb = psi[ib, ib].real if ib is not None else 0.0
    rab = abs(psi[ia, ib]) if ia is not None and ib is not None else 0.0
    return float(min(1.0, 0.5 * (raa + rbb) + rab))


def partial_trace(psi: StateVector, keep: Sequence[str]) -> tuple[ModeSystem, np.ndarray]:
    """Reduced density matrix of the modes in ``keep``.

    The reduced system keeps only constraints that involve kept modes alone.
    """
    system = psi.system
    ki = [system.index_of(lab) for lab in keep]
    ti = [i for i in range(len(system.modes)) if i not in ki]
    cons = tuple(
        Constraint(tuple(c.coeffs[i] for i in ki), c.value)
        for c in system.constraints
        if not any(c.coeffs[i] for i in ti)
    )
    sub = ModeSystem(tuple(system.modes[i] for i in ki), cons)
    idx = sub.lookup()
    groups: dict[tuple[int, ...], list[tuple[int, complex]]] = {}
    for s, amp in zip(system.basis, psi.amplitudes):
        if amp == 0:
            continue
        groups.setdefault(tuple(s[i] for i in ti), []).append((idx[tuple(s[i] for i in ki)], amp))
    rho = np.zeros((sub.dim, sub.dim), dtype=complex)
    for entries in groups.values():
        v = np.zeros(sub.dim, dtype=complex)
        for i, amp in entries:
            v[i] += amp
        rho += np.outer(v, v.conj())
    return sub, rho
