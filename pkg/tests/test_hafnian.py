import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import loopgbs as lg

from oracles import FockOracle, apply_loss_kraus

S_LOW = 0.669


def smsv(s=S_LOW, m=1):
    return lg.prepare_input(lg.InputSpec(kind="smsv", squeezing=s, n_modes=m))


def haar_unitary(m, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_symmetric(k, rng):
    z = rng.normal(size=(2 * k, 2 * k)) + 1j * rng.normal(size=(2 * k, 2 * k))
    return z + z.T


class TestHafnian:
    def test_two_by_two_is_offdiagonal(self):
        assert lg.hafnian([[3.0, 2.5], [2.5, -1.0]]) == pytest.approx(2.5)

    def test_all_ones_four(self):
        assert lg.hafnian(np.ones((4, 4))) == pytest.approx(3.0)

    def test_empty_matrix(self):
        assert lg.hafnian(np.zeros((0, 0))) == 1.0

    def test_odd_dimension_rejected(self):
        with pytest.raises(lg.InputError):
            lg.hafnian(np.ones((3, 3)))

    def test_resource_limit(self):
        with pytest.raises(lg.ResourceError):
            lg.hafnian(np.ones((26, 26)), max_pairs=10)

    def test_asymmetric_rejected(self):
        with pytest.raises(lg.InputError):
            lg.hafnian(np.array([[0.0, 1.0], [2.0, 0.0]]))

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6])
    def test_fast_agrees_with_enumeration(self, k):
        rng = np.random.default_rng(42 + k)
        for _ in range(10):
            m = random_symmetric(k, rng)
            fast = lg.hafnian(m)
            slow = lg.hafnian(m, method="enumerate")
            assert abs(fast - slow) <= 1e-9 * max(1.0, abs(slow))

    @given(st.integers(0, 10_000), st.integers(1, 4), st.floats(-2.0, 2.0))
    @settings(max_examples=25, deadline=None)
    def test_row_column_scaling(self, seed, k, scale):
        # scaling one row+column pair scales the hafnian by the same factor
        rng = np.random.default_rng(seed)
        m = random_symmetric(k, rng)
        scaled = m.copy()
        scaled[0, :] *= scale
        scaled[:, 0] *= scale
        scaled[0, 0] = m[0, 0] * scale  # diagonal is ignored anyway
        base = lg.hafnian(m, method="enumerate")
        assert lg.hafnian(scaled, method="enumerate") == pytest.approx(
            scale * base, abs=1e-9 * max(1.0, abs(base))
        )


class TestMatchingCount:
    def test_k4(self):
        assert lg.perfect_matching_count(np.ones((4, 4), int) - np.eye(4, dtype=int)) == 3

    def test_k6(self):
        assert lg.perfect_matching_count(np.ones((6, 6), int) - np.eye(6, dtype=int)) == 15

    def test_c6_cycle(self):
        adj = np.zeros((6, 6), dtype=int)
        for i in range(6):
            adj[i, (i + 1) % 6] = adj[(i + 1) % 6, i] = 1
        assert lg.perfect_matching_count(adj) == 2

    def test_odd_graph_warns_and_returns_zero(self):
        with pytest.warns(UserWarning):
            assert lg.perfect_matching_count(np.zeros((3, 3), int)) == 0


class TestEncoding:
    def test_single_mode_smsv_closed_form(self):
        enc = lg.build_encoding(smsv())
        assert enc.b_block[0, 0] == pytest.approx(math.tanh(S_LOW), abs=1e-12)
        assert abs(enc.c_block[0, 0]) < 1e-12
        assert enc.prefactor == pytest.approx(1 / math.cosh(S_LOW), abs=1e-12)

    def test_lossless_smsv_through_unitary(self):
        u = haar_unitary(4, 3)
        state = lg.evolve(smsv(0.55, m=4), u)
        enc = lg.build_encoding(state)
        expected = u @ np.diag([math.tanh(0.55)] * 4) @ u.T
        assert np.abs(enc.b_block - expected).max() <= 1e-10
        assert np.abs(enc.c_block).max() <= 1e-10

    def test_thermal_encoding_has_no_pair_block(self):
        state = lg.evolve(
            lg.prepare_input(lg.InputSpec(kind="thermal", squeezing=0.8, n_modes=3)),
            haar_unitary(3, 5),
        )
        enc = lg.build_encoding(state)
        assert np.abs(enc.b_block).max() <= 1e-10
        assert np.abs(enc.c_block).max() > 1e-3

    def test_block_structure(self):
        state = lg.apply_loss(lg.evolve(smsv(0.5, m=3), haar_unitary(3, 9)),
                              np.array([0.5, 0.7, 0.9]))
        enc = lg.build_encoding(state)
        m = 3
        a = enc.a_matrix
        assert np.abs(a - a.T).max() <= 1e-12
        assert np.abs(a[:m, :m] - enc.b_block).max() == 0
        assert np.abs(a[m:, m:] - enc.b_block.conj()).max() <= 1e-12
        c = enc.c_block
        assert np.abs(c - c.conj().T).max() <= 1e-12

    def test_displaced_state_rejected(self):
        with pytest.raises(lg.InputError):
            lg.build_encoding(
                lg.prepare_input(lg.InputSpec(kind="coherent", squeezing=0.3, n_modes=1))
            )


class TestReduction:
    def test_vacuum_pattern_gives_prefactor(self):
        state = smsv(0.4, m=3)
        enc = lg.build_encoding(state)
        reduced = lg.reduce_encoding(enc, [0, 0, 0])
        assert reduced.shape == (0, 0)
        assert lg.outcome_probability(state, [0, 0, 0]) == pytest.approx(
            enc.prefactor, abs=1e-12
        )

    def test_single_mode_double_click(self):
        enc = lg.build_encoding(smsv(0.7))
        reduced = lg.reduce_encoding(enc, [2])
        assert reduced.shape == (4, 4)
        t = math.tanh(0.7)
        assert lg.hafnian(reduced) == pytest.approx(t * t, abs=1e-12)

    def test_all_singles_is_submatrix(self):
        state = lg.apply_loss(lg.evolve(smsv(0.5, m=3), haar_unitary(3, 2)),
                              np.array([0.6, 0.8, 0.9]))
        enc = lg.build_encoding(state)
        reduced = lg.reduce_encoding(enc, [1, 1, 1])
        assert np.array_equal(reduced, enc.a_matrix)

    def test_pattern_length_checked(self):
        enc = lg.build_encoding(smsv(0.3, m=2))
        with pytest.raises(lg.InputError):
            lg.reduce_encoding(enc, [1, 1, 1])


class TestOutcomeProbability:
    @pytest.mark.parametrize("s", [0.3, S_LOW, 1.0])
    def test_single_mode_closed_form(self, s):
        state = smsv(s)
        for k in range(5):
            closed = (
                math.factorial(2 * k)
                * math.tanh(s) ** (2 * k)
                / (2**k * math.factorial(k)) ** 2
                / math.cosh(s)
            )
            assert lg.outcome_probability(state, [2 * k]) == pytest.approx(
                closed, rel=1e-9
            )

    def test_vacuum_probability_of_multimode_smsv(self):
        state = smsv(0.6, m=4)
        assert lg.outcome_probability(state, [0, 0, 0, 0]) == pytest.approx(
            1 / math.cosh(0.6) ** 4, rel=1e-12
        )

    def test_odd_total_vanishes(self):
        state = lg.evolve(smsv(0.5, m=2), haar_unitary(2, 8))
        assert lg.outcome_probability(state, [1, 0]) == pytest.approx(0.0, abs=1e-12)
        assert lg.outcome_probability(state, [2, 1]) == pytest.approx(0.0, abs=1e-12)

    def test_resource_guard(self):
        with pytest.raises(lg.ResourceError):
            lg.outcome_probability(smsv(0.5), [22])

    def test_matches_fock_oracle_lossy_two_mode(self):
        s, trans, etas = 0.35, 0.55, (0.75, 0.9)
        oracle = FockOracle(2, cutoff=12)
        oracle.squeeze(0, s)
        oracle.squeeze(1, s)
        oracle.beamsplitter(0, 1, trans)
        for mode, eta in enumerate(etas):
            apply_loss_kraus(oracle, mode, eta)
        reference = oracle.number_probabilities()

        bs = np.array(
            [[math.sqrt(trans), 1j * math.sqrt(1 - trans)],
             [1j * math.sqrt(1 - trans), math.sqrt(trans)]]
        )
        state = lg.apply_loss(lg.evolve(smsv(s, m=2), bs), np.array(etas))
        for pattern in [(0, 0), (1, 1), (2, 0), (0, 2), (2, 2), (1, 3), (3, 1), (4, 0)]:
            ours = lg.outcome_probability(state, pattern)
            assert ours == pytest.approx(reference[pattern], abs=1e-8), pattern


class TestEnumerateDistribution:
    @pytest.fixture(scope="class")
    def toy_program(self):
        return lg.random_program(77, n_physical_modes=3, fill_modes=0,
                                 loop_spec=lg.LoopSpec(delays=(1,), static_phases=(0.3,)))

    @pytest.fixture(scope="class")
    def jan_loss(self):
        return lg.load_fixture("borealis-2023-01-12").to_loss_model()

    def test_vacuum_distribution(self):
        dist = lg.enumerate_distribution(lg.vacuum_state(2), cutoff=3)
        assert dist.captured_mass == pytest.approx(1.0, abs=1e-12)
        assert dist.patterns[int(np.argmax(dist.probabilities))] == (0, 0)
        assert dist.probabilities.max() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("kind", ["smsv", "thermal", "squashed", "coherent"])
    def test_lossy_families_capture_mass(self, toy_program, jan_loss, kind):
        state = lg.output_state(kind, S_LOW, toy_program, jan_loss)
        dist = lg.enumerate_distribution(state, cutoff=8)
        assert dist.captured_mass >= 0.999
        assert np.all(dist.probabilities >= 0)

    def test_resource_guards(self):
        with pytest.raises(lg.ResourceError):
            lg.enumerate_distribution(lg.vacuum_state(7), cutoff=3)
        with pytest.raises(lg.ResourceError):
            lg.enumerate_distribution(lg.vacuum_state(2), cutoff=9)

    def test_csv_export(self, toy_program, jan_loss):
        state = lg.output_state("thermal", 0.3, toy_program, jan_loss)
        text = lg.enumerate_distribution(state, cutoff=3).to_csv()
        assert text.splitlines()[0] == "pattern,probability"
        assert "\"0 0 0\"" in text
