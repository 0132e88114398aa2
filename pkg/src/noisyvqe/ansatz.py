"""The three trial circuits (R_XYZ, R_Y, UCCSD) and parameter binding.

UCCSD is a single Trotter step of the Jordan-Wigner-mapped single and double
excitations over the |1100> reference. Each excitation is one user-visible
parameter shared by all of its Pauli-rotation slots; the double excitation is
placed first so that shifting any parameter by 2*pi leaves the energy exactly
unchanged (the leftover Pauli factor commutes through to a global sign).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import GateOp

ANSATZ_KINDS = ("RXYZ", "RY", "UCCSD")


@dataclass(frozen=True)
class RotationSlot:
    """A parametrized rotation; bound angle is ``scale * params[parameter_index]``."""

    kind: str                      # RX | RY | RZ | PAULIROT
    qubits: tuple[int, ...]
    parameter_index: int
    scale: float = 1.0
    pauli_axis: str | None = None


@dataclass
class ParametrizedCircuit:
    n_qubits: int
    prep: list
    template: list                 # GateOp (fixed) or RotationSlot entries
    n_params: int
    kind: str = ""

    def __post_init__(self):
        used = {s.parameter_index for s in self.template if isinstance(s, RotationSlot)}
        if used != set(range(self.n_params)):
            raise ValueError(f"parameter indices {sorted(used)} do not cover 0..{self.n_params - 1}")

    def to_json_dict(self) -> dict:
        entries = []
        for slot in self.prep:
            entries.append({"gate": slot.kind, "qubits": list(slot.qubits)})
        for slot in self.template:
            if isinstance(slot, RotationSlot):
                e = {
                    "gate": slot.kind,
                    "qubits": list(slot.qubits),
                    "parameter_index": slot.parameter_index,
                    "scale": slot.scale,
                }
                if slot.pauli_axis:
                    e["pauli_axis"] = slot.pauli_axis
            else:
                e = {"gate": slot.kind, "qubits": list(slot.qubits)}
                if slot.angle is not None:
                    e["angle"] = slot.angle
            entries.append(e)
        return {"kind": self.kind, "n_qubits": self.n_qubits, "n_params": self.n_params, "gates": entries}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def hartree_fock_prep(n_qubits: int, n_electrons: int) -> list:
    """X gates filling the first ``n_electrons`` qubits (|1...10...0>)."""
    if n_electrons > n_qubits:
        raise ValueError("more electrons than qubits")
    return [GateOp("X", (q,)) for q in range(n_electrons)]


def _cnot_chain(n_qubits: int) -> list:
    return [GateOp("CNOT", (q, q + 1)) for q in range(n_qubits - 1)]


# Jordan-Wigner images of the H2 excitation generators, derived from
# a_p^dag a_q matrices and frozen here; tests rebuild them from fermionic
# operators. Scales are chosen so the bound product equals exp(t/2 * (T - T^dag)).
_UCCSD_SINGLES = (("XZY", 0.5), ("YZX", -0.5))
_UCCSD_DOUBLE = (
    ("XXXY", -0.125), ("XXYX", -0.125), ("XYXX", 0.125), ("XYYY", -0.125),
    ("YXXX", 0.125), ("YXYY", -0.125), ("YYXY", 0.125), ("YYYX", 0.125),
)


def build_ansatz(kind: str, n_qubits: int = 4) -> ParametrizedCircuit:
    """Construct one of the three trial circuits over the Hartree-Fock reference."""
    if kind == "RXYZ":
        if n_qubits < 2:
            raise ValueError("RXYZ needs at least 2 qubits")
        template: list = []
        for q in range(n_qubits):
            for j, rk in enumerate(("RX", "RY", "RZ")):
                template.append(RotationSlot(rk, (q,), 3 * q + j))
        template += _cnot_chain(n_qubits)
        return ParametrizedCircuit(n_qubits, hartree_fock_prep(n_qubits, 2), template, 3 * n_qubits, kind)
    if kind == "RY":
        if n_qubits < 2:
            raise ValueError("RY needs at least 2 qubits")
        template = [RotationSlot("RY", (q,), q) for q in range(n_qubits)]
        template += _cnot_chain(n_qubits)
        return ParametrizedCircuit(n_qubits, hartree_fock_prep(n_qubits, 2), template, n_qubits, kind)
    if kind == "UCCSD":
        if n_qubits != 4:
            raise ValueError("the UCCSD instance is fixed at 4 qubits")
        template = []
        for axis, scale in _UCCSD_DOUBLE:
            template.append(RotationSlot("PAULIROT", (0, 1, 2, 3), 2, scale, axis))
        for p_idx, (i, a) in enumerate([(0, 2), (1, 3)]):
            for axis, scale in _UCCSD_SINGLES:
                template.append(RotationSlot("PAULIROT", (i, i + 1, a), p_idx, scale, axis))
        return ParametrizedCircuit(4, hartree_fock_prep(4, 2), template, 3, kind)
    raise ValueError(f"unknown ansatz kind {kind!r}")


def bind(circuit: ParametrizedCircuit, params: Sequence[float]) -> list:
    """Resolve template slots to concrete gates; prep gates come first."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {params.shape}")
    gates = list(circuit.prep)
    for slot in circuit.template:
        if isinstance(slot, RotationSlot):
            angle = slot.scale * params[slot.parameter_index]
            gates.append(GateOp(slot.kind, slot.qubits, angle, slot.pauli_axis))
        else:
            gates.append(slot)
    return gates


def decompose_pauli_rotation(gate: GateOp) -> list:
    """Elementary-gate form of exp(-i angle/2 P): basis changes, CNOT staircase, RZ.

    Used for gate counting and for interleaving noise channels at the
    elementary level; the dense rotation and this sequence are equal unitaries.
    """
    if gate.kind != "PAULIROT":
        raise ValueError("not a Pauli rotation")
    pre: list = []
    post: list = []
    for q, c in zip(gate.qubits, gate.pauli_axis):
        if c == "X":
            pre.append(GateOp("H", (q,)))
            post.append(GateOp("H", (q,)))
        elif c == "Y":
            pre.append(GateOp("SDG", (q,)))
            pre.append(GateOp("H", (q,)))
            post.append(GateOp("H", (q,)))
            post.append(GateOp("S", (q,)))
    chain = [
        GateOp("CNOT", (gate.qubits[i], gate.qubits[i + 1]))
        for i in range(len(gate.qubits) - 1)
    ]
    target = gate.qubits[-1]
    # per-qubit post gates already carry the right internal order; qubits commute
    return pre + chain + [GateOp("RZ", (target,), gate.angle)] + chain[::-1] + post


def gate_counts(gates: Sequence[GateOp], expand_pauli_rotations: bool = True) -> dict:
    """Counts of 1-qubit and 2-qubit gates, expanding Pauli rotations by default."""
    ops: list = []
    for g in gates:
        if g.kind == "PAULIROT" and expand_pauli_rotations:
            ops.extend(decompose_pauli_rotation(g))
        else:
            ops.append(g)
    one = sum(1 for g in ops if g.n_qubits_acted == 1)
    two = sum(1 for g in ops if g.n_qubits_acted == 2)
    return {"n_1q": one, "n_2q": two, "n_total": one + two}
