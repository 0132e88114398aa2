"""Dense statevector / density-matrix simulation on a handful of qubits.

Conventions used throughout the package:

- little-endian qubit indexing: bit i of a basis-state integer is qubit i,
  and bitstrings are printed qubit-0-first ("1100" = qubits 0 and 1 set);
- rotation gates follow R_P(theta) = exp(-i * theta/2 * P);
- CNOT carries its qubits as (control, target).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

_FIXED_GATES = {
    "X": PAULI["X"],
    "Y": PAULI["Y"],
    "Z": PAULI["Z"],
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=complex),
}

ROTATION_KINDS = ("RX", "RY", "RZ", "PAULIROT")
GATE_KINDS = ("X", "Y", "Z", "H", "S", "SDG", "RX", "RY", "RZ", "CNOT", "PAULIROT")


@dataclass(frozen=True)
class GateOp:
    """A single gate: fixed 1q, rotation, CNOT, or a multi-qubit Pauli rotation.

    ``PAULIROT`` means exp(-i * angle/2 * P) where P is ``pauli_axis`` acting on
    ``qubits`` (axis character j belongs to qubits[j]; identities are omitted).
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None
    pauli_axis: str | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubit in {self.qubits}")
        if self.kind in ROTATION_KINDS:
            if self.angle is None:
                raise ValueError(f"{self.kind} requires an angle")
        elif self.angle is not None:
            raise ValueError(f"{self.kind} does not take an angle")
        if self.kind == "PAULIROT":
            if not self.pauli_axis or len(self.pauli_axis) != len(self.qubits):
                raise ValueError("pauli_axis must match the addressed qubits")
            if any(c not in "XYZ" for c in self.pauli_axis):
                raise ValueError(f"bad pauli_axis {self.pauli_axis!r}")
        elif self.pauli_axis is not None:
            raise ValueError("pauli_axis is only valid for PAULIROT")
        if self.kind == "CNOT" and len(self.qubits) != 2:
            raise ValueError("CNOT needs (control, target)")
        if self.kind in _FIXED_GATES or self.kind in ("RX", "RY", "RZ"):
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} is a single-qubit gate")

    @property
    def n_qubits_acted(self) -> int:
        return len(self.qubits)


def gate_matrix(gate: GateOp) -> np.ndarray:
    """Dense unitary of ``gate`` on its own qubits (qubits[0] = most significant)."""
    if gate.kind in _FIXED_GATES:
        return _FIXED_GATES[gate.kind]
    if gate.kind in ("RX", "RY", "RZ"):
        half = gate.angle / 2.0
        c, s = np.cos(half), np.sin(half)
        if gate.kind == "RX":
            return np.array([[c, -1j * s], [-1j * s, c]])
        if gate.kind == "RY":
            return np.array([[c, -s], [s, c]], dtype=complex)
        return np.array([[np.exp(-1j * half), 0], [0, np.exp(1j * half)]])
    if gate.kind == "CNOT":
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
    # PAULIROT: exp(-i angle/2 P) = cos(angle/2) I - i sin(angle/2) P
    p = PAULI[gate.pauli_axis[0]]
    for c in gate.pauli_axis[1:]:
        p = np.kron(p, PAULI[c])
    half = gate.angle / 2.0
    return np.cos(half) * np.eye(p.shape[0]) - 1j * np.sin(half) * p


@dataclass
class Statevector:
    """Pure state on ``n_qubits``; amplitudes indexed little-endian."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError("amplitude vector has wrong length")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state not normalized (norm={norm})")

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_bitstring(cls, bits: str) -> "Statevector":
        n = len(bits)
        amps = np.zeros(2**n, dtype=complex)
        amps[bitstring_to_index(bits)] = 1.0
        return cls(n, amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amplitudes.copy())


@dataclass
class DensityMatrix:
    """Mixed state on ``n_qubits`` as a dense 2^n x 2^n matrix."""

    n_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        dim = 2**self.n_qubits
        if self.entries.shape != (dim, dim):
            raise ValueError("density matrix has wrong shape")
        if np.max(np.abs(self.entries - self.entries.conj().T)) > 1e-10:
            raise ValueError("density matrix not Hermitian")
        tr = np.trace(self.entries).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace {tr} != 1")

    @classmethod
    def zero(cls, n_qubits: int) -> "DensityMatrix":
        return Statevector.zero(n_qubits).to_density_matrix()

    def probabilities(self) -> np.ndarray:
        p = np.real(np.diag(self.entries)).copy()
        p[p < 0] = 0.0  # eigenvalue tolerance -1e-9 allows tiny negative diagonals
        return p / p.sum()

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def min_eigenvalue(self) -> float:
        return float(jacobi_eigh(self.entries)[0][0])

    def validate(self, psd_tol: float = -1e-9) -> None:
        """Raise if the PSD invariant is violated (Hermiticity/trace checked on init)."""
        lo = self.min_eigenvalue()
        if lo < psd_tol:
            raise ValueError(f"density matrix has eigenvalue {lo} < {psd_tol}")

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, self.entries.copy())


State = Union[Statevector, DensityMatrix]


@dataclass(frozen=True)
class KrausChannel:
    """Trace-preserving channel given by its Kraus operators (dimension 2^arity)."""

    arity: int
    operators: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(e, dtype=complex) for e in self.operators)
        object.__setattr__(self, "operators", ops)
        dim = 2**self.arity
        for e in ops:
            if e.shape != (dim, dim):
                raise ValueError(f"Kraus operator shape {e.shape} != ({dim},{dim})")
        total = sum(e.conj().T @ e for e in ops)
        if np.max(np.abs(total - np.eye(dim))) > 1e-10:
            raise ValueError("channel is not trace preserving")


def index_to_bitstring(index: int, n_qubits: int) -> str:
    """Qubit-0-first bitstring of a basis-state index."""
    return "".join("1" if (index >> q) & 1 else "0" for q in range(n_qubits))


def bitstring_to_index(bits: str) -> int:
    return sum(1 << q for q, b in enumerate(bits) if b == "1")


def _check_qubits(qubits: Sequence[int], n_qubits: int) -> None:
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise IndexError(f"qubit {q} out of range for {n_qubits} qubits")


def _apply_matrix(arr: np.ndarray, mat: np.ndarray, tensor_axes: list[int]) -> np.ndarray:
    """Contract ``mat`` (2^k x 2^k) against ``tensor_axes`` of a [2]*rank array.

    The matrix row/column index runs over ``tensor_axes`` with axes[0] as the
    most significant bit.
    """
    k = len(tensor_axes)
    moved = np.moveaxis(arr, tensor_axes, range(k))
    shape = moved.shape
    out = mat @ moved.reshape(2**k, -1)
    return np.moveaxis(out.reshape(shape), range(k), tensor_axes)


def _sv_apply(amplitudes: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    tensor = amplitudes.reshape([2] * n)
    axes = [n - 1 - q for q in qubits]
    return _apply_matrix(tensor, mat, axes).reshape(-1)


def _dm_apply_left(entries: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    tensor = entries.reshape([2] * (2 * n))
    axes = [n - 1 - q for q in qubits]          # row axes
    return _apply_matrix(tensor, mat, axes).reshape(2**n, 2**n)


def _dm_apply_right(entries: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Contract ``mat`` against the column index: returns rho @ mat^T (embedded)."""
    tensor = entries.reshape([2] * (2 * n))
    axes = [2 * n - 1 - q for q in qubits]      # column axes
    return _apply_matrix(tensor, mat, axes).reshape(2**n, 2**n)


def _dm_conjugate(entries: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """rho -> M rho M^dagger on the addressed qubits."""
    out = _dm_apply_left(entries, mat, qubits, n)
    # applying conj(M) on the column index realizes the right factor M^dagger
    return _dm_apply_right(out, mat.conj(), qubits, n)


def apply_gate(state: State, gate: GateOp) -> State:
    """Apply a gate to a statevector (U|psi>) or density matrix (U rho U^dagger)."""
    _check_qubits(gate.qubits, state.n_qubits)
    mat = gate_matrix(gate)
    if isinstance(state, Statevector):
        return Statevector(state.n_qubits, _sv_apply(state.amplitudes, mat, gate.qubits, state.n_qubits))
    return DensityMatrix(
        state.n_qubits, _dm_conjugate(state.entries, mat, gate.qubits, state.n_qubits)
    )


def apply_gates(state: State, gates: Iterable[GateOp]) -> State:
    for g in gates:
        state = apply_gate(state, g)
    return state


def apply_channel(rho: DensityMatrix, channel: KrausChannel, qubits: Sequence[int]) -> DensityMatrix:
    """Apply sum_k E_k rho E_k^dagger on the addressed qubits."""
    if len(qubits) != channel.arity:
        raise ValueError(f"channel arity {channel.arity} != {len(qubits)} addressed qubits")
    _check_qubits(qubits, rho.n_qubits)
    n = rho.n_qubits
    out = np.zeros_like(rho.entries)
    for e in channel.operators:
        out += _dm_conjugate(rho.entries, e, qubits, n)
    return DensityMatrix(n, out)


def born_probabilities(state: State) -> np.ndarray:
    """Computational-basis probabilities read analytically (the shots->exact mode)."""
    return state.probabilities()


def sample_counts(state: State, shots: int, rng_seed: int) -> dict[str, int]:
    """Draw ``shots`` basis-state outcomes; identical seeds give identical counts."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = born_probabilities(state)
    rng = np.random.default_rng(rng_seed)
    draws = rng.multinomial(shots, probs)
    n = state.n_qubits
    return {index_to_bitstring(k, n): int(c) for k, c in enumerate(draws) if c > 0}


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns (eigenvalues ascending, eigenvectors as columns). Convergence is
    declared when the off-diagonal Frobenius norm drops below ``tol``.
    """
    a = np.array(matrix, dtype=complex)
    if np.max(np.abs(a - a.conj().T)) > 1e-9:
        raise ValueError("matrix is not Hermitian")
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    for _ in range(max_sweeps):
        od = np.abs(a) ** 2
        np.fill_diagonal(od, 0.0)
        if np.sqrt(od.sum()) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < tol / (n * n):
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                t = -np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # plane rotation mixed with the phase of a[p,q]
                jp = np.array([c, -s], dtype=complex)
                jq = np.array([s * np.conj(phase), c * np.conj(phase)], dtype=complex)
                cols_p = a[:, p] * jp[0] + a[:, q] * jq[0]
                cols_q = a[:, p] * jp[1] + a[:, q] * jq[1]
                a[:, p], a[:, q] = cols_p, cols_q
                rows_p = a[p, :] * np.conj(jp[0]) + a[q, :] * np.conj(jq[0])
                rows_q = a[p, :] * np.conj(jp[1]) + a[q, :] * np.conj(jq[1])
                a[p, :], a[q, :] = rows_p, rows_q
                vp = v[:, p] * jp[0] + v[:, q] * jq[0]
                vq = v[:, p] * jp[1] + v[:, q] * jq[1]
                v[:, p], v[:, q] = vp, vq
    vals = np.real(np.diag(a))
    order = np.argsort(vals)
    return vals[order], v[:, order]
