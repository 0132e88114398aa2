"""Pauli-string Hamiltonians, the fixed 4-qubit H2 instance, and exact expectations."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Union

import numpy as np

from .core import PAULI, DensityMatrix, State, Statevector, jacobi_eigh


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli string; ``paulis[i]`` acts on qubit i."""

    coefficient: float
    paulis: str

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")
        if any(c not in "IXYZ" for c in self.paulis):
            raise ValueError(f"bad Pauli string {self.paulis!r}")

    @property
    def is_identity(self) -> bool:
        return set(self.paulis) <= {"I"}

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, c in enumerate(self.paulis) if c != "I")


@dataclass
class Hamiltonian:
    n_qubits: int
    terms: list

    def __post_init__(self):
        merged: dict[str, float] = {}
        for t in self.terms:
            if len(t.paulis) != self.n_qubits:
                raise ValueError("term length does not match n_qubits")
            merged[t.paulis] = merged.get(t.paulis, 0.0) + t.coefficient
        self.terms = [PauliTerm(c, p) for p, c in merged.items()]

    @property
    def identity_coefficient(self) -> float:
        return sum(t.coefficient for t in self.terms if t.is_identity)

    def non_identity_terms(self) -> list:
        return [t for t in self.terms if not t.is_identity]

    def coefficient_of(self, paulis: str) -> float:
        for t in self.terms:
            if t.paulis == paulis:
                return t.coefficient
        return 0.0

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            out += term_matrix(t)
        return out

    def to_json_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "terms": [{"coeff": t.coefficient, "paulis": t.paulis} for t in self.terms],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Hamiltonian":
        terms = [PauliTerm(t["coeff"], t["paulis"]) for t in data["terms"]]
        return cls(int(data["n_qubits"]), terms)


# Coefficients of the 4-qubit H2 Hamiltonian at interatomic distance 1.3228 au
# (STO-3G, Jordan-Wigner form), stored expanded to one term per Pauli string.
_H2_C = (
    -0.04207254303152995,   # identity
    0.17771358191549907,    # Z0
    0.17771358191549919,    # Z1
    -0.2427450172749822,    # Z2, Z3
    0.12293330460167415,    # Z0Z2, Z1Z3
    0.16768338881432715,    # Z0Z3, Z1Z2
    0.17059759240560826,    # Z0Z1
    0.17627661476093917,    # Z2Z3
    0.04475008421265302,    # the four 4-qubit exchange strings
)


def h2_hamiltonian() -> Hamiltonian:
    """The fixed 15-term H2 Hamiltonian on 4 qubits."""
    c = _H2_C
    terms = [
        PauliTerm(c[0], "IIII"),
        PauliTerm(c[1], "ZIII"),
        PauliTerm(c[2], "IZII"),
        PauliTerm(c[3], "IIZI"),
        PauliTerm(c[3], "IIIZ"),
        PauliTerm(c[4], "ZIZI"),
        PauliTerm(c[4], "IZIZ"),
        PauliTerm(c[5], "ZIIZ"),
        PauliTerm(c[5], "IZZI"),
        PauliTerm(c[6], "ZZII"),
        PauliTerm(c[7], "IIZZ"),
        PauliTerm(c[8], "YXXY"),
        PauliTerm(c[8], "XYYX"),
        PauliTerm(-c[8], "YYXX"),
        PauliTerm(-c[8], "XXYY"),
    ]
    return Hamiltonian(4, terms)


def term_matrix(term: PauliTerm) -> np.ndarray:
    """Dense matrix of a weighted Pauli string (little-endian Kronecker order)."""
    mats = [PAULI[c] for c in term.paulis]
    # qubit 0 is the fastest index, so it sits rightmost in the Kronecker product
    full = reduce(np.kron, reversed(mats))
    return term.coefficient * full


def _pauli_masks(paulis: str):
    """Bit masks realizing P|k> = phase(k) |k ^ flip>."""
    flip = 0
    z_mask = 0
    for q, c in enumerate(paulis):
        if c in ("X", "Y"):
            flip |= 1 << q
        if c in ("Z", "Y"):
            z_mask |= 1 << q
    return flip, z_mask


def _popcount(values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        out += v & 1
        v >>= 1
    return out


def apply_pauli_string(paulis: str, amplitudes: np.ndarray) -> np.ndarray:
    """P|psi> for a bare Pauli string, via bit arithmetic on basis indices."""
    n = len(paulis)
    flip, z_mask = _pauli_masks(paulis)
    idx = np.arange(2**n)
    # phase from Z/Y on set bits, plus one factor of i per Y
    signs = 1 - 2 * (_popcount(idx & z_mask) & 1)
    n_y = paulis.count("Y")
    phase = (1j**n_y) * signs
    out = np.zeros_like(amplitudes)
    out[idx ^ flip] = phase * amplitudes
    return out


def expectation_exact(state: State, h: Hamiltonian) -> float:
    """<H> = sum_k h_k <P_k>, computed analytically (no sampling)."""
    dim = 2**h.n_qubits
    total = 0.0 + 0.0j
    if isinstance(state, Statevector):
        if state.amplitudes.shape[0] != dim:
            raise ValueError("state dimension does not match Hamiltonian")
        psi = state.amplitudes
        for t in h.terms:
            total += t.coefficient * np.vdot(psi, apply_pauli_string(t.paulis, psi))
    else:
        if state.entries.shape[0] != dim:
            raise ValueError("state dimension does not match Hamiltonian")
        rho = state.entries
        idx = np.arange(dim)
        for t in h.terms:
            flip, z_mask = _pauli_masks(t.paulis)
            signs = 1 - 2 * (_popcount(idx & z_mask) & 1)
            phase = (1j ** t.paulis.count("Y")) * signs
            # P[k, j] = phase(j) delta_{k, j^flip}, so Tr(P rho) = sum_k phase(k) rho[k, k^flip]
            total += t.coefficient * np.sum(phase * rho[idx, idx ^ flip])
    if abs(total.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary residue {total.imag}")
    return float(total.real)


def exact_spectrum(h: Hamiltonian) -> np.ndarray:
    """All 2^n eigenvalues of the dense Hamiltonian, ascending."""
    if h.n_qubits > 6:
        raise ValueError("exact_spectrum supports at most 6 qubits")
    vals, _ = jacobi_eigh(h.to_matrix())
    return vals


def exact_ground_state(h: Hamiltonian):
    """(ground energy, ground eigenvector) of the dense Hamiltonian."""
    if h.n_qubits > 6:
        raise ValueError("exact_ground_state supports at most 6 qubits")
    vals, vecs = jacobi_eigh(h.to_matrix())
    return float(vals[0]), vecs[:, 0]
