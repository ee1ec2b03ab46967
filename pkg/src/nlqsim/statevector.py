"""Dense statevector simulation for small qubit registers.

Conventions used throughout the package:

* Qubit 0 is the *most significant* bit of the basis index, so for an
  n-qubit register the basis state ``|b0 b1 ... b(n-1)>`` has index
  ``sum(b_q << (n - 1 - q))``.
* A bit pattern over a set of qubits is an integer whose most significant
  bit belongs to the smallest qubit index in the set (qubits are always
  processed in sorted order).
* All public operations either preserve the norm to 1e-10 or renormalize
  (measurement collapse).  Amplitudes are never rounded to zero
  implicitly; exponentially small components are kept exactly as the
  arithmetic produces them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_ATOL = 1e-10
UNITARY_ATOL = 1e-10


def make_rng(seed: int | None = 0) -> np.random.Generator:
    """Deterministic random source: same seed, same sample sequence."""
    return np.random.default_rng(seed)


@dataclass
class StateVector:
    """Normalized array of 2**num_qubits complex amplitudes."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError(f"num_qubits must be >= 1, got {self.num_qubits}")
        if self.num_qubits > 20:
            raise ValueError(f"num_qubits={self.num_qubits} above the ~20 qubit desk-scale cap")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes, got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps.view(np.float64))):
            raise ValueError("amplitudes must be finite")
        norm2 = float(np.sum(np.abs(amps) ** 2))
        if abs(norm2 - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm^2 deviates from 1 by {abs(norm2 - 1.0):.3e}")
        self.amplitudes = amps

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class MeasurementRecord:
    """Outcome of a (partial) projective measurement."""

    measured_qubits: tuple[int, ...]
    outcome_bits: int
    outcome_probability: float


def new_basis_state(num_qubits: int, basis_index: int) -> StateVector:
    """Computational basis state |basis_index> on num_qubits qubits."""
    if not 0 <= basis_index < (1 << num_qubits):
        raise ValueError(
            f"basis_index {basis_index} out of range for {num_qubits} qubits"
        )
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[basis_index] = 1.0
    return StateVector(num_qubits, amps)


def _check_qubit(state: StateVector, q: int):
    if not 0 <= q < state.num_qubits:
        raise ValueError(f"qubit index {q} out of range [0, {state.num_qubits})")


def _check_unitary(u: np.ndarray, dim: int):
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (dim, dim):
        raise ValueError(f"expected {dim}x{dim} matrix, got {u.shape}")
    if not np.allclose(u @ u.conj().T, np.eye(dim), atol=UNITARY_ATOL):
        raise ValueError("matrix is not unitary within 1e-10")
    return u


def apply_1q_unitary(state: StateVector, q: int, u: np.ndarray) -> StateVector:
    """Apply a 2x2 unitary to qubit q (tensor reshape, no full matrix)."""
    _check_qubit(state, q)
    u = _check_unitary(u, 2)
    n = state.num_qubits
    psi = state.amplitudes.reshape([2] * n)
    psi = np.moveaxis(psi, q, 0).reshape(2, -1)
    psi = u @ psi
    psi = np.moveaxis(psi.reshape([2] + [2] * (n - 1)), 0, q)
    return StateVector(n, psi.reshape(state.dim))


def apply_2q_unitary(state: StateVector, q1: int, q2: int, u: np.ndarray) -> StateVector:
    """Apply a 4x4 unitary to the ordered qubit pair (q1, q2).

    The matrix acts on basis |b1 b2> where b1 is the bit of q1.
    """
    _check_qubit(state, q1)
    _check_qubit(state, q2)
    if q1 == q2:
        raise ValueError("q1 and q2 must be distinct")
    u = _check_unitary(u, 4)
    n = state.num_qubits
    psi = state.amplitudes.reshape([2] * n)
    psi = np.moveaxis(psi, (q1, q2), (0, 1)).reshape(4, -1)
    psi = u @ psi
    psi = np.moveaxis(psi.reshape([2, 2] + [2] * (n - 2)), (0, 1), (q1, q2))
    return StateVector(n, psi.reshape(state.dim))


def _sorted_qubits(state: StateVector, qs) -> tuple[int, ...]:
    qs = tuple(sorted(set(int(q) for q in qs)))
    if not qs:
        raise ValueError("empty qubit set")
    for q in qs:
        _check_qubit(state, q)
    return qs


def _pattern_indices(state: StateVector, qs: tuple[int, ...]) -> np.ndarray:
    """Pattern index of every basis state, MSB = smallest measured qubit."""
    n = state.num_qubits
    idx = np.arange(state.dim)
    pattern = np.zeros(state.dim, dtype=np.int64)
    m = len(qs)
    for j, q in enumerate(qs):
        bit = (idx >> (n - 1 - q)) & 1
        pattern |= bit << (m - 1 - j)
    return pattern


def pattern_probabilities(state: StateVector, qs) -> np.ndarray:
    """Marginal Born probabilities for all 2**m patterns of qubits qs."""
    qs = _sorted_qubits(state, qs)
    pattern = _pattern_indices(state, qs)
    return np.bincount(pattern, weights=state.probabilities(), minlength=1 << len(qs))


def probability_of_pattern(state: StateVector, qs, bits: int) -> float:
    """Exact marginal probability that measuring qs yields the given bits."""
    qs = _sorted_qubits(state, qs)
    if not 0 <= bits < (1 << len(qs)):
        raise ValueError(f"bit pattern {bits} out of range for {len(qs)} qubits")
    return float(pattern_probabilities(state, qs)[bits])


def collapse_onto_pattern(state: StateVector, qs, bits: int) -> tuple[float, StateVector]:
    """Deterministically project onto the given outcome and renormalize."""
    qs = _sorted_qubits(state, qs)
    pattern = _pattern_indices(state, qs)
    mask = pattern == bits
    amps = np.where(mask, state.amplitudes, 0.0)
    prob = float(np.sum(np.abs(amps) ** 2))
    if prob <= 0.0:
        raise ValueError("cannot collapse onto a zero-probability outcome")
    return prob, StateVector(state.num_qubits, amps / np.sqrt(prob))


def measure_qubits(
    state: StateVector, qs, rng: np.random.Generator
) -> tuple[MeasurementRecord, StateVector]:
    """Sample a Born-rule outcome for qubits qs and collapse the state."""
    qs = _sorted_qubits(state, qs)
    probs = pattern_probabilities(state, qs)
    outcome = int(rng.choice(len(probs), p=probs / probs.sum()))
    prob, post = collapse_onto_pattern(state, qs, outcome)
    record = MeasurementRecord(qs, outcome, prob)
    return record, post


def sample_measurements(
    state: StateVector, qs, rng: np.random.Generator, n_samples: int
) -> np.ndarray:
    """Draw repeated measurement outcomes without collapsing (fresh copies)."""
    qs = _sorted_qubits(state, qs)
    probs = pattern_probabilities(state, qs)
    return rng.choice(len(probs), p=probs / probs.sum(), size=n_samples)


def conditional_qubit_state(
    state: StateVector, target: int, other_basis: int
) -> tuple[float, complex, complex]:
    """Conditional state of one qubit given a basis pattern on the others.

    Decomposes |Psi> = sum_b alpha_b |b> (x) |psi_b> over basis patterns b
    of the non-target qubits (alpha_b chosen real nonnegative, so the
    conditional pair carries all phase).  Returns (|alpha_b|^2, c0, c1)
    where (c0, c1) is the normalized conditional pair, or zeros when the
    branch is empty.
    """
    _check_qubit(state, target)
    n = state.num_qubits
    others = [q for q in range(n) if q != target]
    if not 0 <= other_basis < (1 << (n - 1)):
        raise ValueError(f"pattern {other_basis} out of range for {n - 1} qubits")
    base = 0
    m = len(others)
    for j, q in enumerate(others):
        bit = (other_basis >> (m - 1 - j)) & 1
        base |= bit << (n - 1 - q)
    i0 = base
    i1 = base | (1 << (n - 1 - target))
    a0 = complex(state.amplitudes[i0])
    a1 = complex(state.amplitudes[i1])
    weight = abs(a0) ** 2 + abs(a1) ** 2
    if weight == 0.0:
        return 0.0, 0j, 0j
    root = np.sqrt(weight)
    return float(weight), a0 / root, a1 / root
