"""Energy estimation for a bound ansatz: exact statevector, shot-sampled
statevector, or noisy density-matrix simulation with readout bit flips.

Every Pauli term is measured by its own circuit execution, mirroring per-string
measurement on hardware. Per-term random streams are derived as
hash64(rng_seed, term_index, eval_index) so repeated estimates are reproducible
and independent across terms.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ansatz import ParametrizedCircuit, bind, decompose_pauli_rotation
from .core import (
    DensityMatrix,
    GateOp,
    Statevector,
    apply_channel,
    apply_gate,
    gate_matrix,
    index_to_bitstring,
)
from .hamiltonian import Hamiltonian, PauliTerm, apply_pauli_string, _popcount
from .noise import ChannelOp, NoiseModel, ReadoutMarker, attach_noise, gate_noise_ops
from .util import hash64

BACKEND_MODES = ("EXACT", "SHOTS", "NOISY")


@dataclass(frozen=True)
class BackendConfig:
    mode: str
    shots: int = 1024
    noise: NoiseModel | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in BACKEND_MODES:
            raise ValueError(f"unknown backend mode {self.mode!r}")
        if self.mode in ("SHOTS", "NOISY") and self.shots < 1:
            raise ValueError("shots must be >= 1 when sampling")
        if self.mode == "NOISY" and self.noise is None:
            raise ValueError("NOISY mode requires a NoiseModel")
        if self.mode != "NOISY" and self.noise is not None:
            raise ValueError("noise model only applies to NOISY mode")


@dataclass
class EnergyEstimate:
    value: float
    per_term: list
    shots_used: int


def basis_change(term: PauliTerm) -> list:
    """Gates rotating the term's eigenbasis onto the computational basis."""
    gates = []
    for q, c in enumerate(term.paulis):
        if c == "X":
            gates.append(GateOp("H", (q,)))
        elif c == "Y":
            gates.append(GateOp("SDG", (q,)))
            gates.append(GateOp("H", (q,)))
    return gates


def outcome_eigenvalue(term: PauliTerm, bits: str) -> int:
    """(-1)^(number of set bits on the term's support)."""
    if len(bits) != len(term.paulis):
        raise ValueError("bitstring length does not match term")
    ones = sum(1 for q in term.support if bits[q] == "1")
    return -1 if ones % 2 else 1


def simulate_statevector(gates: Sequence[GateOp], n_qubits: int) -> Statevector:
    state = Statevector.zero(n_qubits)
    for g in gates:
        state = apply_gate(state, g)
    return state


def simulate_ops_density(ops: Sequence, n_qubits: int) -> DensityMatrix:
    """Reference density-matrix walk over gates and channel insertions.

    Readout markers are ignored here; they act on sampled bits, not on rho.
    """
    rho = DensityMatrix.zero(n_qubits)
    for op in ops:
        if isinstance(op, GateOp):
            rho = apply_gate(rho, op)
        elif isinstance(op, ChannelOp):
            rho = apply_channel(rho, op.channel, op.qubits)
        elif not isinstance(op, ReadoutMarker):
            raise TypeError(f"unexpected op {op!r}")
    return rho


# ---------------------------------------------------------------------------
# Fast path: each gate plus its trailing channels is fused into one
# superoperator acting on the (row, column) index pair of the affected qubits;
# consecutive same-qubit superoperators are merged. Equivalence with the
# reference walk is covered by tests.

_PERM_CACHE: dict = {}


def _superop_of_kraus(channel) -> np.ndarray:
    return sum(np.kron(e, e.conj()) for e in channel.operators)


def _compile_superops(ops: Sequence, n_qubits: int) -> list:
    compiled: list = []

    def push(qubits, s):
        if compiled and compiled[-1][0] == qubits:
            compiled[-1][1] = s @ compiled[-1][1]
        else:
            compiled.append([qubits, s])

    for op in ops:
        if isinstance(op, GateOp):
            u = gate_matrix(op)
            push(op.qubits, np.kron(u, u.conj()))
        elif isinstance(op, ChannelOp):
            push(op.qubits, _superop_of_kraus(op.channel))
        elif not isinstance(op, ReadoutMarker):
            raise TypeError(f"unexpected op {op!r}")
    return compiled


def _superop_permutation(n: int, qubits: tuple):
    """Flat-index gather/scatter bringing the (row, col) axes of ``qubits`` front."""
    key = (n, qubits)
    cached = _PERM_CACHE.get(key)
    if cached is not None:
        return cached
    front = [n - 1 - q for q in qubits] + [2 * n - 1 - q for q in qubits]
    rest = [a for a in range(2 * n) if a not in front]
    perm = np.transpose(np.arange(4**n).reshape([2] * (2 * n)), front + rest).reshape(-1)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    _PERM_CACHE[key] = (perm, inv)
    return perm, inv


def _run_superops(compiled: list, n_qubits: int, rho: np.ndarray | None = None) -> np.ndarray:
    """Apply compiled superoperators to a flat 4^n density vector (|0..0> default)."""
    n = n_qubits
    if rho is None:
        rho = np.zeros(4**n, dtype=complex)
        rho[0] = 1.0
    for qubits, s in compiled:
        dim = s.shape[0]
        perm, inv = _superop_permutation(n, tuple(qubits))
        rho = (s @ rho[perm].reshape(dim, -1)).reshape(-1)[inv]
    return rho


def _simulate_density_fast(ops: Sequence, n_qubits: int) -> np.ndarray:
    rho = _run_superops(_compile_superops(ops, n_qubits), n_qubits)
    return rho.reshape(2**n_qubits, 2**n_qubits)


# ---------------------------------------------------------------------------

# ---------------------------------------------------------------------------
# Precompiled estimator: the per-evaluation work is reduced to rebuilding the
# rotation superoperators; everything parameter-independent (fixed gates,
# channel superoperators, per-term measurement tails, outcome eigenvalues) is
# prepared once.

class _Fixed:
    __slots__ = ("qubits", "s")

    def __init__(self, qubits, s):
        self.qubits = qubits
        self.s = s


class _Rot:
    __slots__ = ("kind", "qubits", "pidx", "scale", "post")

    def __init__(self, kind, qubits, pidx, scale, post):
        self.kind = kind
        self.qubits = qubits
        self.pidx = pidx
        self.scale = scale
        self.post = post


def _rotation_matrix(kind: str, angle: float) -> np.ndarray:
    half = angle / 2.0
    c, s = np.cos(half), np.sin(half)
    if kind == "RZ":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]])
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _model_superops(model: NoiseModel):
    """(after-1q, after-2q-pair, per-qubit damping after 2q) fused superoperators."""
    from .noise import amplitude_damping_channel, depolarizing_channel, phase_damping_channel

    damp = []
    if model.p_amp > 0:
        damp.append(_superop_of_kraus(amplitude_damping_channel(model.p_amp, model.epsilon)))
    if model.p_phase > 0:
        damp.append(_superop_of_kraus(phase_damping_channel(model.p_phase)))
    s_damp = None
    for s in damp:
        s_damp = s if s_damp is None else s @ s_damp
    s_1q = _superop_of_kraus(depolarizing_channel(1, model.p_dep1)) if model.p_dep1 > 0 else None
    if s_damp is not None:
        s_1q = s_damp if s_1q is None else s_damp @ s_1q
    s_2q = _superop_of_kraus(depolarizing_channel(2, model.p_dep2)) if model.p_dep2 > 0 else None
    return s_1q, s_2q, s_damp


def _symbolic_elements(circuit: ParametrizedCircuit):
    """Elementary (fixed gate | parametrized rotation) stream of the template."""
    from .ansatz import RotationSlot

    for g in circuit.prep:
        yield g, None
    for slot in circuit.template:
        if not isinstance(slot, RotationSlot):
            yield slot, None
            continue
        if slot.kind != "PAULIROT":
            yield None, (slot.kind, slot.qubits, slot.parameter_index, slot.scale)
            continue
        # expand like decompose_pauli_rotation, keeping the RZ parametrized
        ref = GateOp("PAULIROT", slot.qubits, 0.0, slot.pauli_axis)
        seq = decompose_pauli_rotation(ref)
        for g in seq:
            if g.kind == "RZ":
                yield None, ("RZ", g.qubits, slot.parameter_index, slot.scale)
            else:
                yield g, None


class EnergyEstimator:
    """Reusable per-(circuit, Hamiltonian, backend) estimator.

    ``estimate(params, eval_index)`` matches estimate_energy; constructing one
    of these up front amortizes circuit compilation across an optimization run.
    """

    def __init__(self, circuit: ParametrizedCircuit, h: Hamiltonian, backend: BackendConfig):
        if h.n_qubits != circuit.n_qubits:
            raise ValueError("Hamiltonian and circuit sizes differ")
        self.circuit = circuit
        self.h = h
        self.backend = backend
        self.n = circuit.n_qubits
        self._terms = list(h.terms)
        self._eigs = {
            i: _eigenvalues_by_index(t, self.n)
            for i, t in enumerate(self._terms)
            if not t.is_identity
        }
        if backend.mode == "NOISY":
            self._compile_noisy()

    def _compile_noisy(self) -> None:
        model = self.backend.noise
        s_1q, s_2q, s_damp = _model_superops(model)
        entries: list = []

        def push_fixed(qubits, s):
            if entries and isinstance(entries[-1], _Fixed) and entries[-1].qubits == qubits:
                entries[-1].s = s @ entries[-1].s
            else:
                entries.append(_Fixed(qubits, s))

        def push_noise(qubits):
            if len(qubits) == 1:
                if s_1q is not None:
                    push_fixed(qubits, s_1q)
            else:
                if s_2q is not None:
                    push_fixed(qubits, s_2q)
                if s_damp is not None:
                    for q in qubits:
                        push_fixed((q,), s_damp)

        for fixed, rot in _symbolic_elements(self.circuit):
            if fixed is not None:
                u = gate_matrix(fixed)
                push_fixed(fixed.qubits, np.kron(u, u.conj()))
                push_noise(fixed.qubits)
            else:
                kind, qubits, pidx, scale = rot
                entries.append(_Rot(kind, qubits, pidx, scale, s_1q))
        self._entries = entries
        self._tails = {}
        for i, t in enumerate(self._terms):
            if t.is_identity:
                continue
            tail_ops = gate_noise_ops(basis_change(t), model)
            self._tails[i] = _compile_superops(tail_ops, self.n)

    def _noisy_prefix(self, params: np.ndarray) -> np.ndarray:
        rho = np.zeros(4**self.n, dtype=complex)
        rho[0] = 1.0
        n = self.n
        for e in self._entries:
            if isinstance(e, _Fixed):
                s = e.s
                qubits = e.qubits
            else:
                u = _rotation_matrix(e.kind, e.scale * params[e.pidx])
                s = np.kron(u, u.conj())
                if e.post is not None:
                    s = e.post @ s
                qubits = e.qubits
            perm, inv = _superop_permutation(n, tuple(qubits))
            rho = (s @ rho[perm].reshape(s.shape[0], -1)).reshape(-1)[inv]
        return rho

    def estimate(self, params: Sequence[float], eval_index: int = 0) -> EnergyEstimate:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.circuit.n_params,):
            raise ValueError(f"expected {self.circuit.n_params} parameters")
        backend = self.backend
        if backend.mode != "NOISY":
            return estimate_energy(self.circuit, params, self.h, backend, eval_index)
        n = self.n
        rho_prefix = self._noisy_prefix(params)
        per_term: list = []
        total = 0.0
        shots_used = 0
        for i, t in enumerate(self._terms):
            if t.is_identity:
                per_term.append((t, 1.0))
                total += t.coefficient
                continue
            rng = np.random.default_rng(hash64(backend.rng_seed, i, eval_index))
            rho = _run_superops(self._tails[i], n, rho_prefix.copy()).reshape(2**n, 2**n)
            probs = np.real(np.diag(rho)).copy()
            probs[probs < 0] = 0.0
            probs /= probs.sum()
            counts = rng.multinomial(backend.shots, probs)
            counts = _apply_readout_flips(counts, backend.noise.p_readout, n, rng)
            est = float(counts @ self._eigs[i]) / backend.shots
            per_term.append((t, est))
            total += t.coefficient * est
            shots_used += backend.shots
        return EnergyEstimate(total, per_term, shots_used)


def _support_mask(term: PauliTerm) -> int:
    mask = 0
    for q in term.support:
        mask |= 1 << q
    return mask


def _eigenvalues_by_index(term: PauliTerm, n_qubits: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    return 1 - 2 * (_popcount(idx & _support_mask(term)) & 1)


def _sample_mean_eigenvalue(probs, eigs, shots, rng) -> float:
    draws = rng.multinomial(shots, probs)
    return float(draws @ eigs) / shots


def _apply_readout_flips(counts: np.ndarray, p: float, n_qubits: int, rng) -> np.ndarray:
    """Flip each measured bit independently with probability p, count-wise."""
    if p == 0.0:
        return counts
    dim = counts.shape[0]
    pattern_probs = np.empty(dim)
    for f in range(dim):
        ones = bin(f).count("1")
        pattern_probs[f] = (p**ones) * ((1 - p) ** (n_qubits - ones))
    out = np.zeros_like(counts)
    idx = np.arange(dim)
    for k in range(dim):
        if counts[k] == 0:
            continue
        flips = rng.multinomial(int(counts[k]), pattern_probs)
        out[idx ^ k] += flips
    return out


def estimate_energy(
    circuit: ParametrizedCircuit,
    params: Sequence[float],
    h: Hamiltonian,
    backend: BackendConfig,
    eval_index: int = 0,
) -> EnergyEstimate:
    """Estimate <H> for the circuit bound at ``params`` under the backend mode."""
    if h.n_qubits != circuit.n_qubits:
        raise ValueError("Hamiltonian and circuit sizes differ")
    gates = bind(circuit, params)
    n = circuit.n_qubits
    per_term: list = []
    total = 0.0
    shots_used = 0

    if backend.mode == "EXACT":
        state = simulate_statevector(gates, n)
        for t in h.terms:
            if t.is_identity:
                est = 1.0
            else:
                est = float(np.vdot(state.amplitudes, apply_pauli_string(t.paulis, state.amplitudes)).real)
            per_term.append((t, est))
            total += t.coefficient * est
        return EnergyEstimate(total, per_term, 0)

    if backend.mode == "NOISY":
        return EnergyEstimator(circuit, h, backend).estimate(params, eval_index)

    # the ansatz prefix is shared by every term's measurement circuit, so it is
    # simulated once; only the per-term basis-change tail differs
    sv_prefix = simulate_statevector(gates, n)
    for term_index, t in enumerate(h.terms):
        if t.is_identity:
            per_term.append((t, 1.0))
            total += t.coefficient
            continue
        rng = np.random.default_rng(hash64(backend.rng_seed, term_index, eval_index))
        eigs = _eigenvalues_by_index(t, n)
        sv = sv_prefix
        for g in basis_change(t):
            sv = apply_gate(sv, g)
        est = _sample_mean_eigenvalue(sv.probabilities(), eigs, backend.shots, rng)
        per_term.append((t, est))
        total += t.coefficient * est
        shots_used += backend.shots
    return EnergyEstimate(total, per_term, shots_used)


def run_metadata(circuit: ParametrizedCircuit, params, backend: BackendConfig) -> dict:
    """Gate and channel counts for one bound evaluation, for trace metadata."""
    from .ansatz import gate_counts

    gates = bind(circuit, params)
    counts = gate_counts(gates)
    meta = {
        "mode": backend.mode,
        "gate_counts": counts,
        "rng_seed": backend.rng_seed,
        "noisy_basis_change": backend.mode == "NOISY",
    }
    if backend.mode != "EXACT":
        meta["shots"] = backend.shots
    if backend.mode == "NOISY":
        ops = attach_noise(gates, backend.noise, circuit.n_qubits)
        meta["channel_counts"] = {
            "dep1": sum(1 for o in ops if isinstance(o, ChannelOp) and o.label == "dep1"),
            "dep2": sum(1 for o in ops if isinstance(o, ChannelOp) and o.label == "dep2"),
            "amp": sum(1 for o in ops if isinstance(o, ChannelOp) and o.label == "amp"),
            "phase": sum(1 for o in ops if isinstance(o, ChannelOp) and o.label == "phase"),
        }
        meta["noise"] = backend.noise.to_json_dict()
    return meta
