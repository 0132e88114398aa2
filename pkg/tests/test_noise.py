import numpy as np
import pytest

from noisyvqe.ansatz import bind, build_ansatz
from noisyvqe.core import DensityMatrix, GateOp, Statevector, apply_channel, apply_gate
from noisyvqe.noise import (
    ChannelOp,
    NoiseModel,
    ReadoutMarker,
    RelaxationTimes,
    amplitude_damping_channel,
    attach_noise,
    decay_probabilities,
    depolarizing_channel,
    gate_noise_ops,
    phase_damping_channel,
    readout_flip_channel,
)


def kraus_completeness(channel):
    dim = 2**channel.arity
    total = sum(e.conj().T @ e for e in channel.operators)
    return np.max(np.abs(total - np.eye(dim)))


class TestChannels:
    @pytest.mark.parametrize("p", [0.0, 0.1, 0.3, 0.7, 1.0])
    def test_readout_flip_completeness(self, p):
        assert kraus_completeness(readout_flip_channel(p)) < 1e-12

    def test_readout_half_scrambles_z(self):
        # <Z> of any input goes to zero at p = 0.5
        rho = Statevector.from_bitstring("1").to_density_matrix()
        out = apply_channel(rho, readout_flip_channel(0.5), (0,))
        assert abs(out.entries[0, 0] - out.entries[1, 1]) < 1e-12

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            readout_flip_channel(1.5)

    def test_depolarizing_z_contrast(self):
        # <Z> after the channel on |0><0| equals 1 - 4p/3
        for p in (0.1, 0.4, 0.75):
            out = apply_channel(DensityMatrix.zero(1), depolarizing_channel(1, p), (0,))
            z = out.entries[0, 0].real - out.entries[1, 1].real
            assert z == pytest.approx(1 - 4 * p / 3, abs=1e-12)

    def test_depolarizing_fully_mixing_point(self):
        rng = np.random.default_rng(3)
        amps = rng.normal(size=2) + 1j * rng.normal(size=2)
        sv = Statevector(1, amps / np.linalg.norm(amps))
        out = apply_channel(sv.to_density_matrix(), depolarizing_channel(1, 0.75), (0,))
        assert np.max(np.abs(out.entries - np.eye(2) / 2)) < 1e-12

    def test_two_qubit_identity_at_zero(self):
        rho = DensityMatrix.zero(2)
        out = apply_channel(rho, depolarizing_channel(2, 0.0), (0, 1))
        assert np.allclose(out.entries, rho.entries)

    def test_two_qubit_operator_count(self):
        assert len(depolarizing_channel(2, 0.2).operators) == 16

    def test_bad_arity(self):
        with pytest.raises(ValueError):
            depolarizing_channel(3, 0.1)

    def test_amplitude_damping_full_decay(self):
        rho = Statevector.from_bitstring("1").to_density_matrix()
        out = apply_channel(rho, amplitude_damping_channel(1.0, 0.0), (0,))
        assert np.allclose(out.entries, np.diag([1.0, 0.0]), atol=1e-12)

    def test_amplitude_damping_identity_at_zero(self):
        for eps in (0.0, 0.3):
            ch = amplitude_damping_channel(0.0, eps)
            rho = Statevector.from_bitstring("1").to_density_matrix()
            out = apply_channel(rho, ch, (0,))
            assert np.allclose(out.entries, rho.entries, atol=1e-12)

    def test_excited_population_scaling(self):
        for p in (0.2, 0.6):
            rho = Statevector.from_bitstring("1").to_density_matrix()
            out = apply_channel(rho, amplitude_damping_channel(p), (0,))
            assert out.entries[1, 1].real == pytest.approx(1 - p, abs=1e-12)

    def test_epsilon_equilibrium(self):
        # epsilon is the excited-state equilibrium weight, so repeated
        # application drives any input toward diag(1-eps, eps)
        eps = 0.2
        ch = amplitude_damping_channel(0.05, eps)
        for start in (DensityMatrix.zero(1), Statevector.from_bitstring("1").to_density_matrix()):
            rho = start
            for _ in range(1000):
                rho = apply_channel(rho, ch, (0,))
            assert np.max(np.abs(rho.entries - np.diag([1 - eps, eps]))) < 1e-6

    def test_phase_damping_preserves_populations(self):
        rng = np.random.default_rng(5)
        amps = rng.normal(size=2) + 1j * rng.normal(size=2)
        sv = Statevector(1, amps / np.linalg.norm(amps))
        rho = sv.to_density_matrix()
        out = apply_channel(rho, phase_damping_channel(0.6), (0,))
        assert out.entries[0, 0] == pytest.approx(rho.entries[0, 0], abs=1e-12)
        assert out.entries[1, 1] == pytest.approx(rho.entries[1, 1], abs=1e-12)
        assert abs(out.entries[0, 1]) == pytest.approx(
            np.sqrt(0.4) * abs(rho.entries[0, 1]), abs=1e-12
        )

    def test_phase_damping_full(self):
        plus = apply_gate(Statevector.zero(1), GateOp("H", (0,))).to_density_matrix()
        out = apply_channel(plus, phase_damping_channel(1.0), (0,))
        assert np.allclose(out.entries, np.diag([0.5, 0.5]), atol=1e-12)

    @pytest.mark.parametrize("maker,args", [
        (readout_flip_channel, (0.37,)),
        (depolarizing_channel, (1, 0.37)),
        (depolarizing_channel, (2, 0.37)),
        (amplitude_damping_channel, (0.37, 0.0)),
        (amplitude_damping_channel, (0.37, 0.11)),
        (phase_damping_channel, (0.37,)),
    ])
    def test_completeness_all_channels(self, maker, args):
        assert kraus_completeness(maker(*args)) < 1e-12

    def test_depolarizing_fixed_point(self):
        for arity, p in [(1, 0.3), (2, 0.9)]:
            dim = 2**arity
            mixed = DensityMatrix(arity, np.eye(dim) / dim)
            out = apply_channel(mixed, depolarizing_channel(arity, p), tuple(range(arity)))
            assert np.max(np.abs(out.entries - np.eye(dim) / dim)) < 1e-12


class TestDecayProbabilities:
    def test_zero_time(self):
        p_a, p_phi, _ = decay_probabilities(RelaxationTimes(50.0, 70.0, 1e-9))
        assert p_a == pytest.approx(0.0, abs=1e-9)
        assert p_phi == pytest.approx(0.0, abs=1e-9)

    def test_long_t1_suppresses_damping(self):
        p_a, _, _ = decay_probabilities(RelaxationTimes(1e15, 70.0, 0.1))
        assert p_a < 1e-15

    def test_t2_combination(self):
        _, _, t2 = decay_probabilities(RelaxationTimes(100.0, 100.0, 0.1))
        assert t2 == pytest.approx(200.0 / 3.0, abs=1e-12)

    def test_values(self):
        p_a, p_phi, _ = decay_probabilities(RelaxationTimes(100.0, 50.0, 10.0))
        assert p_a == pytest.approx(1 - np.exp(-0.1), abs=1e-12)
        assert p_phi == pytest.approx(1 - np.exp(-0.1), abs=1e-12)

    def test_nonpositive_times_rejected(self):
        with pytest.raises(ValueError):
            RelaxationTimes(0.0, 1.0, 1.0)


class TestNoiseModel:
    def test_probability_validation(self):
        with pytest.raises(ValueError):
            NoiseModel(p_readout=1.2)

    def test_json_roundtrip(self):
        m = NoiseModel(p_readout=0.03, p_dep1=0.001, p_dep2=0.01, p_amp=0.002, p_phase=0.004)
        assert NoiseModel.from_json_dict(m.to_json_dict()) == m

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError):
            NoiseModel.from_json_dict({"p_read": 0.1})

    def test_axis_replacement(self):
        m = NoiseModel().replace_axis("p_amp", 0.2)
        assert m.p_amp == 0.2 and m.p_readout == 0.0


class TestAttachNoise:
    def gates(self):
        return bind(build_ansatz("RXYZ"), np.linspace(0.1, 1.2, 12))

    def test_all_zero_model_adds_nothing(self):
        gates = self.gates()
        ops = attach_noise(gates, NoiseModel(), 4)
        channel_ops = [o for o in ops if isinstance(o, ChannelOp)]
        assert channel_ops == []
        assert [o for o in ops if isinstance(o, GateOp)] == gates

    def test_depolarizing_insertion_counts(self):
        gates = self.gates()
        n1 = sum(1 for g in gates if g.n_qubits_acted == 1)
        n2 = sum(1 for g in gates if g.n_qubits_acted == 2)
        ops = attach_noise(gates, NoiseModel(p_dep1=0.01, p_dep2=0.02), 4)
        dep1 = [o for o in ops if isinstance(o, ChannelOp) and o.label == "dep1"]
        dep2 = [o for o in ops if isinstance(o, ChannelOp) and o.label == "dep2"]
        assert len(dep1) == n1
        assert len(dep2) == n2

    def test_readout_markers_once_per_qubit_at_end(self):
        ops = attach_noise(self.gates(), NoiseModel(p_readout=0.05), 4)
        markers = [o for o in ops if isinstance(o, ReadoutMarker)]
        assert sorted(m.qubit for m in markers) == [0, 1, 2, 3]
        assert all(isinstance(o, ReadoutMarker) for o in ops[-4:])

    def test_damping_follows_both_qubits_of_cnot(self):
        ops = gate_noise_ops([GateOp("CNOT", (0, 1))], NoiseModel(p_amp=0.1, p_phase=0.2))
        labels = [(o.label, o.qubits) for o in ops if isinstance(o, ChannelOp)]
        assert labels == [
            ("amp", (0,)), ("phase", (0,)), ("amp", (1,)), ("phase", (1,)),
        ]

    def test_channel_order_after_1q_gate(self):
        ops = gate_noise_ops(
            [GateOp("H", (2,))],
            NoiseModel(p_dep1=0.1, p_amp=0.2, p_phase=0.3),
        )
        labels = [o.label for o in ops if isinstance(o, ChannelOp)]
        assert labels == ["dep1", "amp", "phase"]

    def test_pauli_rotations_expand(self):
        gates = bind(build_ansatz("UCCSD"), [0.3, 0.4, 0.5])
        ops = attach_noise(gates, NoiseModel(p_dep2=0.01), 4)
        assert not any(isinstance(o, GateOp) and o.kind == "PAULIROT" for o in ops)
        dep2 = [o for o in ops if isinstance(o, ChannelOp)]
        assert len(dep2) == 8 * 6 + 4 * 4  # one per staircase CNOT

    def test_purity_monotone_in_each_axis(self):
        # over the studied intensity grids purity only degrades; far beyond
        # them amplitude damping turns around (it targets a pure state)
        from noisyvqe.estimator import _simulate_density_fast
        from noisyvqe.experiment import DEFAULT_GRIDS

        gates = self.gates()
        for axis, grid in (
            ("p_dep1", DEFAULT_GRIDS["DEP1"]),
            ("p_dep2", DEFAULT_GRIDS["DEP2"]),
            ("p_amp", DEFAULT_GRIDS["AMP"]),
            ("p_phase", DEFAULT_GRIDS["PHASE"]),
        ):
            purities = []
            for value in grid:
                model = NoiseModel().replace_axis(axis, value)
                rho = _simulate_density_fast(attach_noise(gates, model, 4), 4)
                purities.append(np.real(np.trace(rho @ rho)))
            assert all(b <= a + 1e-12 for a, b in zip(purities, purities[1:])), axis
