"""Small dense state-vector engine.

Qubits carry string labels. The label at position 0 of ``StateVector.labels``
is the most significant bit of the basis index, so ``|q0 q1 ...>`` prints
left to right. Amplitudes are stored as a read-only complex numpy array;
every operation returns a new ``StateVector``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

NORM_TOL = 1e-10
EXACT_TOL = 1e-12
MAX_QUBITS = 8

SQRT_HALF = 1.0 / math.sqrt(2.0)


class QCoreError(ValueError):
    """Invalid argument passed to a state-vector operation."""


class BellKind(enum.Enum):
    """The four Bell states, valued by the two-bit outcome label ``ij``."""

    PhiPlus = "00"
    PhiMinus = "01"
    PsiPlus = "10"
    PsiMinus = "11"

    @property
    def bits(self) -> str:
        return self.value

    @classmethod
    def from_bits(cls, ij: str) -> BellKind:
        try:
            return cls(ij)
        except ValueError:
            raise QCoreError(f"not a Bell label: {ij!r}") from None

    def vector(self) -> np.ndarray:
        """Amplitudes over |00>, |01>, |10>, |11>."""
        return _BELL_VECTORS[self].copy()


_BELL_VECTORS = {
    BellKind.PhiPlus: np.array([1, 0, 0, 1], dtype=complex) * SQRT_HALF,
    BellKind.PhiMinus: np.array([1, 0, 0, -1], dtype=complex) * SQRT_HALF,
    BellKind.PsiPlus: np.array([0, 1, 1, 0], dtype=complex) * SQRT_HALF,
    BellKind.PsiMinus: np.array([0, 1, -1, 0], dtype=complex) * SQRT_HALF,
}


class PauliCorrection(enum.Enum):
    """Teleportation corrections U_ij indexed by Bell outcome bits."""

    U00 = "00"
    U01 = "01"
    U10 = "10"
    U11 = "11"

    @classmethod
    def for_outcome(cls, ij: Union[str, BellKind]) -> PauliCorrection:
        if isinstance(ij, BellKind):
            ij = ij.bits
        return cls(ij)

    @property
    def matrix(self) -> np.ndarray:
        return _CORRECTIONS[self].copy()

    @property
    def inverse(self) -> np.ndarray:
        # real orthogonal matrices: inverse is the transpose
        return _CORRECTIONS[self].T.conj().copy()


_CORRECTIONS = {
    PauliCorrection.U00: np.array([[1, 0], [0, 1]], dtype=complex),
    PauliCorrection.U01: np.array([[1, 0], [0, -1]], dtype=complex),
    PauliCorrection.U10: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliCorrection.U11: np.array([[0, 1], [-1, 0]], dtype=complex),
}

PAULI_X = _CORRECTIONS[PauliCorrection.U10]
PAULI_Z = _CORRECTIONS[PauliCorrection.U01]
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT_HALF


class MeasBasis(enum.Enum):
    """Z: {|0>, |1>}; X: {|+>, |->}. Outcome 0 is |0> or |+>."""

    Z = "Z"
    X = "X"

    @property
    def angle(self) -> float:
        return 0.0 if self is MeasBasis.Z else math.pi / 2


# a basis given either as Z/X or as an angle theta in the z-x plane,
# i.e. the eigenbasis of cos(theta) sigma_z + sin(theta) sigma_x
Basis = Union[MeasBasis, float]


def basis_vectors(basis: Basis) -> tuple[np.ndarray, np.ndarray]:
    """Return the (+1, -1) eigenvectors of the measured observable."""
    if basis is MeasBasis.Z:
        return np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    if basis is MeasBasis.X:
        return (
            np.array([SQRT_HALF, SQRT_HALF], dtype=complex),
            np.array([SQRT_HALF, -SQRT_HALF], dtype=complex),
        )
    theta = float(basis)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([c, s], dtype=complex), np.array([-s, c], dtype=complex)


def observable(theta: float) -> np.ndarray:
    """cos(theta) sigma_z + sin(theta) sigma_x."""
    return math.cos(theta) * PAULI_Z + math.sin(theta) * PAULI_X


@dataclass(frozen=True)
class StateVector:
    labels: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        n = len(labels)
        if not 1 <= n <= MAX_QUBITS:
            raise QCoreError(f"register size {n} outside 1..{MAX_QUBITS}")
        if len(set(labels)) != n:
            raise QCoreError(f"duplicate qubit labels in {labels}")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (1 << n,):
            raise QCoreError(f"expected {1 << n} amplitudes, got {amps.shape[0]}")
        if not np.all(np.isfinite(amps)):
            raise QCoreError("non-finite amplitude")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise QCoreError(f"state not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def norm(self) -> float:
        return math.sqrt(float(np.vdot(self.amplitudes, self.amplitudes).real))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise QCoreError(f"unknown qubit label {label!r} in {self.labels}") from None

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def reordered(self, labels: Sequence[str]) -> StateVector:
        """Same state with qubits permuted into ``labels`` order."""
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise QCoreError(f"{labels} is not a permutation of {self.labels}")
        axes = [self.index(q) for q in labels]
        return StateVector(labels, np.transpose(self.tensor_view(), axes).reshape(-1))

    def ket(self, tol: float = 1e-9) -> str:
        """Human-readable expansion, e.g. ``0.7071|00> + 0.7071|11>``."""
        n = self.n_qubits
        terms = []
        for k, a in enumerate(self.amplitudes):
            if abs(a) > tol:
                coef = f"{a.real:.4g}" if abs(a.imag) <= tol else f"({a:.4g})"
                terms.append(f"{coef}|{k:0{n}b}>")
        return " + ".join(terms) + " [" + ",".join(self.labels) + "]"


def _state(labels: Sequence[str], amps: np.ndarray) -> StateVector:
    return StateVector(tuple(labels), amps)


def _check_distinct(labels: Sequence[str], expected: int) -> tuple[str, ...]:
    labels = tuple(labels)
    if len(labels) != expected:
        raise QCoreError(f"expected {expected} labels, got {len(labels)}")
    if len(set(labels)) != expected:
        raise QCoreError(f"duplicate qubit labels in {labels}")
    return labels


def make_bell(kind: BellKind, labels: Sequence[str] = ("A", "B")) -> StateVector:
    labels = _check_distinct(labels, 2)
    return _state(labels, _BELL_VECTORS[kind])


def make_ghz3(labels: Sequence[str] = ("A", "B", "F")) -> StateVector:
    labels = _check_distinct(labels, 3)
    amps = np.zeros(8, dtype=complex)
    amps[0] = amps[7] = SQRT_HALF
    return _state(labels, amps)


def basis_state(bits: str, labels: Sequence[str]) -> StateVector:
    """Computational basis state, e.g. ``basis_state("01", "AB")``."""
    labels = _check_distinct(labels, len(bits))
    amps = np.zeros(1 << len(bits), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return _state(labels, amps)


def single_qubit(vec: Sequence[complex], label: str) -> StateVector:
    amps = np.asarray(vec, dtype=complex)
    return _state((label,), amps / np.linalg.norm(amps))


def encode_bit(b: int, label: str = "C") -> StateVector:
    """0 -> |+>, 1 -> |->."""
    if b not in (0, 1):
        raise QCoreError(f"message bit must be 0 or 1, got {b!r}")
    return _state((label,), basis_vectors(MeasBasis.X)[b])


def tensor(a: StateVector, b: StateVector) -> StateVector:
    overlap = set(a.labels) & set(b.labels)
    if overlap:
        raise QCoreError(f"overlapping labels {sorted(overlap)}")
    return _state(a.labels + b.labels, np.kron(a.amplitudes, b.amplitudes))


def is_unitary(u: np.ndarray, tol: float = NORM_TOL) -> bool:
    u = np.asarray(u, dtype=complex)
    return u.shape == (2, 2) and np.allclose(u.conj().T @ u, np.eye(2), atol=tol, rtol=0)


def apply_single(state: StateVector, label: str, u: np.ndarray) -> StateVector:
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u):
        raise QCoreError("matrix is not a 2x2 unitary")
    axis = state.index(label)
    psi = np.tensordot(u, state.tensor_view(), axes=([1], [axis]))
    psi = np.moveaxis(psi, 0, axis)
    return _state(state.labels, psi.reshape(-1))


def _project_out(state: StateVector, axis: int, vec: np.ndarray) -> tuple[float, np.ndarray]:
    """Contract qubit ``axis`` with <vec|; returns (probability, unnormalized rest)."""
    rest = np.tensordot(vec.conj(), state.tensor_view(), axes=([0], [axis]))
    return float(np.vdot(rest, rest).real), rest


def project_single(
    state: StateVector, label: str, basis: Basis, outcome: int
) -> tuple[float, StateVector | None]:
    """Force a single-qubit outcome.

    Returns the Born probability and the renormalized post-measurement state
    with the measured qubit removed (``None`` when that qubit was the whole
    register or the probability is zero).
    """
    axis = state.index(label)
    prob, rest = _project_out(state, axis, basis_vectors(basis)[outcome])
    remaining = state.labels[:axis] + state.labels[axis + 1 :]
    if not remaining or prob < NORM_TOL:
        return prob, None
    return prob, _state(remaining, rest.reshape(-1) / math.sqrt(prob))


def outcome_probabilities(state: StateVector, label: str, basis: Basis) -> tuple[float, float]:
    axis = state.index(label)
    vecs = basis_vectors(basis)
    return tuple(_project_out(state, axis, v)[0] for v in vecs)  # type: ignore[return-value]


def measure_single(
    state: StateVector, label: str, basis: Basis, rng: np.random.Generator
) -> tuple[int, StateVector | None]:
    """Sample a projective measurement of one qubit.

    The measured qubit is removed from the returned register; ``None`` is
    returned when it was the only qubit.
    """
    axis = state.index(label)
    vecs = basis_vectors(basis)
    p0, rest0 = _project_out(state, axis, vecs[0])
    p1, rest1 = _project_out(state, axis, vecs[1])
    if p0 < NORM_TOL and p1 < NORM_TOL:
        raise RuntimeError("measurement found no probability mass; state corrupted")
    outcome = 0 if rng.random() * (p0 + p1) < p0 else 1
    prob, rest = (p0, rest0) if outcome == 0 else (p1, rest1)
    remaining = state.labels[:axis] + state.labels[axis + 1 :]
    if not remaining:
        return outcome, None
    return outcome, _state(remaining, rest.reshape(-1) / math.sqrt(prob))


def _pair_matrix(state: StateVector, labels: Sequence[str]) -> np.ndarray:
    """Amplitudes as a 4 x 2^(n-2) matrix with the named pair as row index."""
    if len(labels) != 2:
        raise QCoreError("expected two qubit labels")
    if labels[0] == labels[1]:
        raise QCoreError(f"identical labels {labels[0]!r}")
    axes = [state.index(q) for q in labels]
    psi = np.moveaxis(state.tensor_view(), axes, [0, 1])
    return psi.reshape(4, -1)


def _unpair(state: StateVector, labels: Sequence[str], mat: np.ndarray) -> StateVector:
    axes = [state.index(q) for q in labels]
    n = state.n_qubits
    psi = mat.reshape((2,) * n)
    return _state(state.labels, np.moveaxis(psi, [0, 1], axes).reshape(-1))


def bell_project(
    state: StateVector, labels: Sequence[str], kind: BellKind
) -> tuple[float, StateVector | None]:
    """Project the named pair onto one Bell state.

    The pair stays in the register, now in ``kind``. Returns (probability,
    collapsed state) with ``None`` for a zero-probability outcome.
    """
    if state.n_qubits < 2:
        raise QCoreError("Bell measurement needs at least two qubits")
    mat = _pair_matrix(state, labels)
    v = _BELL_VECTORS[kind]
    coeffs = v.conj() @ mat
    prob = float(np.vdot(coeffs, coeffs).real)
    if prob < NORM_TOL:
        return prob, None
    collapsed = np.outer(v, coeffs / math.sqrt(prob))
    return prob, _unpair(state, labels, collapsed)


def bell_probabilities(state: StateVector, labels: Sequence[str]) -> dict[BellKind, float]:
    mat = _pair_matrix(state, labels)
    out = {}
    for kind, v in _BELL_VECTORS.items():
        c = v.conj() @ mat
        out[kind] = float(np.vdot(c, c).real)
    return out


def bell_measure(
    state: StateVector, labels: Sequence[str], rng: np.random.Generator
) -> tuple[BellKind, StateVector]:
    if state.n_qubits < 2:
        raise QCoreError("Bell measurement needs at least two qubits")
    mat = _pair_matrix(state, labels)
    kinds = list(_BELL_VECTORS)
    coeffs = [_BELL_VECTORS[k].conj() @ mat for k in kinds]
    probs = np.array([np.vdot(c, c).real for c in coeffs])
    cum = np.cumsum(probs)
    r = rng.random() * cum[-1]
    i = min(int(np.searchsorted(cum, r, side="right")), 3)
    kind = kinds[i]
    collapsed = np.outer(_BELL_VECTORS[kind], coeffs[i] / math.sqrt(probs[i]))
    return kind, _unpair(state, labels, collapsed)


def expectation_correlator(
    state: StateVector, labels: Sequence[str], angle_a: float, angle_b: float
) -> float:
    """<O(angle_a) x O(angle_b)> on the named pair, O(t) = cos t Z + sin t X."""
    mat = _pair_matrix(state, labels)
    op = np.kron(observable(angle_a), observable(angle_b))
    value = np.vdot(mat, op @ mat)
    return float(value.real)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, matching qubits by label."""
    if a.labels != b.labels:
        b = b.reordered(a.labels)
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def in_x_basis(state: StateVector) -> np.ndarray:
    """Amplitudes over |+/->^n, index bit 0 = '+', 1 = '-'."""
    psi = state.tensor_view()
    for axis in range(state.n_qubits):
        psi = np.moveaxis(np.tensordot(HADAMARD, psi, axes=([1], [axis])), 0, axis)
    return psi.reshape(-1)


def split(state: StateVector, labels: Sequence[str], tol: float = 1e-9) -> tuple[StateVector, StateVector | None]:
    """Factor ``state`` as (qubits in ``labels``) x (the rest).

    Raises ``QCoreError`` if the two groups are entangled. The second element
    is ``None`` when ``labels`` covers the whole register.
    """
    labels = tuple(labels)
    rest = tuple(q for q in state.labels if q not in labels)
    for q in labels:
        state.index(q)
    if not rest:
        return state.reordered(labels), None
    psi = state.reordered(labels + rest).amplitudes.reshape(1 << len(labels), 1 << len(rest))
    u, s, vh = np.linalg.svd(psi)
    if s[1:].size and float(np.sum(s[1:] ** 2)) > tol:
        raise QCoreError(f"{labels} entangled with {rest}")
    return _state(labels, u[:, 0] * s[0] / np.linalg.norm(u[:, 0] * s[0])), _state(
        rest, vh[0] / np.linalg.norm(vh[0])
    )
