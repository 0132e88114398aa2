"""Kraus channels for readout, depolarizing, amplitude and phase damping,
decay-time conversions, and the per-gate channel attachment policy."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .core import PAULI, GateOp, KrausChannel
from .ansatz import decompose_pauli_rotation


def _check_prob(name: str, p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name}={p} outside [0, 1]")


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate-class error probabilities; all default to noiseless."""

    p_readout: float = 0.0
    p_dep1: float = 0.0
    p_dep2: float = 0.0
    p_amp: float = 0.0
    p_phase: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("p_readout", "p_dep1", "p_dep2", "p_amp", "p_phase", "epsilon"):
            _check_prob(name, getattr(self, name))

    @property
    def is_noiseless(self) -> bool:
        return all(
            getattr(self, f) == 0.0
            for f in ("p_readout", "p_dep1", "p_dep2", "p_amp", "p_phase")
        )

    def replace_axis(self, axis: str, value: float) -> "NoiseModel":
        d = asdict(self)
        d[axis] = value
        return NoiseModel(**d)

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, data: dict) -> "NoiseModel":
        known = {"p_readout", "p_dep1", "p_dep2", "p_amp", "p_phase", "epsilon"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown noise fields {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def ibm_typical(cls) -> "NoiseModel":
        """Device-style anchor intensities for superconducting hardware."""
        return cls(p_readout=0.03, p_dep1=0.001, p_dep2=0.01)


@dataclass(frozen=True)
class RelaxationTimes:
    """T1, pure-dephasing time, and gate duration, in one shared time unit."""

    t1: float
    t_phi: float
    gate_time: float

    def __post_init__(self):
        if min(self.t1, self.t_phi, self.gate_time) <= 0:
            raise ValueError("relaxation times and gate time must be positive")


def readout_flip_channel(p: float) -> KrausChannel:
    """Classical bit flip with probability p: {sqrt(1-p) I, sqrt(p) X}."""
    _check_prob("p", p)
    return KrausChannel(1, (np.sqrt(1 - p) * PAULI["I"], np.sqrt(p) * PAULI["X"]))


def depolarizing_channel(arity: int, p: float) -> KrausChannel:
    """Uniform Pauli error channel on one or two qubits.

    Arity 1 is {sqrt(1-p) I, sqrt(p/3) X, sqrt(p/3) Y, sqrt(p/3) Z}; arity 2
    spreads p uniformly over the 15 non-identity Pauli pairs.
    """
    _check_prob("p", p)
    if arity == 1:
        ops = [np.sqrt(1 - p) * PAULI["I"]]
        ops += [np.sqrt(p / 3) * PAULI[c] for c in "XYZ"]
        return KrausChannel(1, tuple(ops))
    if arity == 2:
        ops = [np.sqrt(1 - p) * np.eye(4, dtype=complex)]
        for a, b in itertools.product("IXYZ", repeat=2):
            if a == b == "I":
                continue
            ops.append(np.sqrt(p / 15) * np.kron(PAULI[a], PAULI[b]))
        return KrausChannel(2, tuple(ops))
    raise ValueError(f"unsupported depolarizing arity {arity}")


def amplitude_damping_channel(p_a: float, epsilon: float = 0.0) -> KrausChannel:
    """Generalized amplitude damping toward diag(epsilon, 1-epsilon).

    With epsilon=0 (the default) the set reduces to the standard two operators.
    """
    _check_prob("p_a", p_a)
    _check_prob("epsilon", epsilon)
    decay = np.array([[1, 0], [0, np.sqrt(1 - p_a)]], dtype=complex)
    jump_down = np.array([[0, np.sqrt(p_a)], [0, 0]], dtype=complex)
    if epsilon == 0.0:
        return KrausChannel(1, (decay, jump_down))
    raise_diag = np.array([[np.sqrt(1 - p_a), 0], [0, 1]], dtype=complex)
    jump_up = np.array([[0, 0], [np.sqrt(p_a), 0]], dtype=complex)
    return KrausChannel(
        1,
        (
            np.sqrt(1 - epsilon) * decay,
            np.sqrt(1 - epsilon) * jump_down,
            np.sqrt(epsilon) * raise_diag,
            np.sqrt(epsilon) * jump_up,
        ),
    )


def phase_damping_channel(p_phi: float) -> KrausChannel:
    """Pure dephasing: populations unchanged, coherences scaled by sqrt(1-p)."""
    _check_prob("p_phi", p_phi)
    e0 = np.array([[1, 0], [0, np.sqrt(1 - p_phi)]], dtype=complex)
    e1 = np.array([[0, 0], [0, np.sqrt(p_phi)]], dtype=complex)
    return KrausChannel(1, (e0, e1))


def decay_probabilities(times: RelaxationTimes):
    """(p_a, p_phi, T2) from exponential decay over one gate duration."""
    t = times.gate_time
    p_a = 1.0 - np.exp(-t / times.t1)
    p_phi = 1.0 - np.exp(-t / (2.0 * times.t_phi))
    t2 = 1.0 / (1.0 / (2.0 * times.t1) + 1.0 / times.t_phi)
    return float(p_a), float(p_phi), float(t2)


@dataclass(frozen=True)
class ChannelOp:
    """A channel application inserted into a circuit by the noise policy."""

    channel: KrausChannel
    qubits: tuple[int, ...]
    label: str = ""


@dataclass(frozen=True)
class ReadoutMarker:
    """Flip the measured bit of ``qubit`` with probability p at sampling time."""

    qubit: int
    p: float


def _damping_ops(model: NoiseModel, qubit: int) -> list:
    ops = []
    if model.p_amp > 0:
        ops.append(ChannelOp(amplitude_damping_channel(model.p_amp, model.epsilon), (qubit,), "amp"))
    if model.p_phase > 0:
        ops.append(ChannelOp(phase_damping_channel(model.p_phase), (qubit,), "phase"))
    return ops


def gate_noise_ops(gates: Sequence[GateOp], model: NoiseModel) -> list:
    """Gates interleaved with their trailing noise channels (no readout markers).

    After every 1-qubit gate: depolarizing(p_dep1), amplitude damping, phase
    damping on that qubit. After every 2-qubit gate: two-qubit depolarizing
    on the pair, then damping on each involved qubit. Pauli rotations are
    expanded to elementary gates so channels land where hardware would put
    them. Channels with zero probability are omitted.
    """
    ops: list = []
    expanded: list = []
    for g in gates:
        if g.kind == "PAULIROT":
            expanded.extend(decompose_pauli_rotation(g))
        else:
            expanded.append(g)
    dep1 = depolarizing_channel(1, model.p_dep1) if model.p_dep1 > 0 else None
    dep2 = depolarizing_channel(2, model.p_dep2) if model.p_dep2 > 0 else None
    for g in expanded:
        ops.append(g)
        if g.n_qubits_acted == 1:
            if dep1 is not None:
                ops.append(ChannelOp(dep1, g.qubits, "dep1"))
            ops.extend(_damping_ops(model, g.qubits[0]))
        else:
            if dep2 is not None:
                ops.append(ChannelOp(dep2, g.qubits, "dep2"))
            for q in g.qubits:
                ops.extend(_damping_ops(model, q))
    return ops


def attach_noise(gates: Sequence[GateOp], model: NoiseModel, n_qubits: int = 4) -> list:
    """gate_noise_ops plus one readout-flip marker per measured qubit at the end."""
    ops = gate_noise_ops(gates, model)
    ops.extend(ReadoutMarker(q, model.p_readout) for q in range(n_qubits))
    return ops
