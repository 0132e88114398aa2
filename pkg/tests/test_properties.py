"""Property suites over the simulator and optimizer primitives.

These are the standalone invariant checks: Kraus completeness across random
intensities, statevector/density-matrix oracle equivalence on random circuits,
parameter-shift vs finite-difference gradient agreement, exact one-step NFT
minimization of synthetic sinusoids, and sampled-estimate unbiasedness. The
whole module stays well under a minute.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisyvqe.ansatz import bind, build_ansatz
from noisyvqe.core import DensityMatrix, GateOp, Statevector, apply_gate
from noisyvqe.estimator import BackendConfig, estimate_energy
from noisyvqe.hamiltonian import h2_hamiltonian
from noisyvqe.noise import (
    amplitude_damping_channel,
    depolarizing_channel,
    phase_damping_channel,
    readout_flip_channel,
)
from noisyvqe.optimize import NftConfig, gradient_estimate, nft_minimize

H2 = h2_hamiltonian()

probabilities = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@settings(max_examples=20, deadline=None)
@given(p=probabilities)
def test_kraus_completeness_readout(p):
    ch = readout_flip_channel(p)
    total = sum(e.conj().T @ e for e in ch.operators)
    assert np.max(np.abs(total - np.eye(2))) < 1e-12


@settings(max_examples=20, deadline=None)
@given(p=probabilities, arity=st.sampled_from([1, 2]))
def test_kraus_completeness_depolarizing(p, arity):
    ch = depolarizing_channel(arity, p)
    total = sum(e.conj().T @ e for e in ch.operators)
    assert np.max(np.abs(total - np.eye(2**arity))) < 1e-12


@settings(max_examples=20, deadline=None)
@given(p=probabilities, eps=probabilities)
def test_kraus_completeness_damping(p, eps):
    for ch in (amplitude_damping_channel(p, eps), phase_damping_channel(p)):
        total = sum(e.conj().T @ e for e in ch.operators)
        assert np.max(np.abs(total - np.eye(2))) < 1e-12


def _random_circuit(rng, n_gates=12, n_qubits=4):
    gates = []
    for _ in range(n_gates):
        kind = rng.choice(["RX", "RY", "RZ", "H", "S", "SDG", "CNOT", "X"])
        if kind == "CNOT":
            a, b = rng.choice(n_qubits, size=2, replace=False)
            gates.append(GateOp("CNOT", (int(a), int(b))))
        elif kind in ("RX", "RY", "RZ"):
            gates.append(GateOp(kind, (int(rng.integers(n_qubits)),), float(rng.uniform(-np.pi, np.pi))))
        else:
            gates.append(GateOp(kind, (int(rng.integers(n_qubits)),)))
    return gates


@pytest.mark.parametrize("seed", range(8))
def test_statevector_density_oracle_equivalence(seed):
    rng = np.random.default_rng(seed)
    gates = _random_circuit(rng)
    sv = Statevector.zero(4)
    dm = DensityMatrix.zero(4)
    for g in gates:
        sv = apply_gate(sv, g)
        dm = apply_gate(dm, g)
    outer = np.outer(sv.amplitudes, sv.amplitudes.conj())
    assert np.max(np.abs(dm.entries - outer)) < 1e-10


@pytest.mark.parametrize("kind", ["RXYZ", "RY", "UCCSD"])
def test_parameter_shift_matches_finite_difference(kind):
    circ = build_ansatz(kind)
    backend = BackendConfig("EXACT")
    loss = lambda t: estimate_energy(circ, t, H2, backend).value
    rng = np.random.default_rng(13)
    theta = rng.uniform(-np.pi, np.pi, circ.n_params)
    shift = gradient_estimate(loss, theta, "PARAMETER_SHIFT")
    diff = gradient_estimate(loss, theta, "CENTRAL_DIFF", h=1e-5)
    assert np.max(np.abs(shift - diff)) < 1e-6


@settings(max_examples=15, deadline=None)
@given(
    amplitude=st.floats(min_value=0.1, max_value=3.0),
    phase=st.floats(min_value=-3.0, max_value=3.0),
    offset=st.floats(min_value=-2.0, max_value=2.0),
    start=st.floats(min_value=-3.0, max_value=3.0),
)
def test_nft_one_step_exact_on_sinusoid(amplitude, phase, offset, start):
    loss = lambda t: offset + amplitude * np.cos(t[0] - phase)
    trace = nft_minimize(loss, [start], NftConfig(sweeps=1))
    assert trace.records[-1].energy == pytest.approx(offset - amplitude, abs=1e-10)


def test_sampled_estimates_unbiased():
    circ = build_ansatz("RY")
    theta = np.random.default_rng(7).uniform(-np.pi, np.pi, 4)
    exact = estimate_energy(circ, theta, H2, BackendConfig("EXACT")).value
    backend = BackendConfig("SHOTS", shots=256, rng_seed=41)
    m = 1000
    vals = np.fromiter(
        (estimate_energy(circ, theta, H2, backend, i).value for i in range(m)), float, m
    )
    sigma = vals.std(ddof=1)
    assert abs(vals.mean() - exact) < 4 * sigma / np.sqrt(m)
