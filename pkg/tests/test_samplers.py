import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

import loopgbs as lg

from oracles import total_variation_distance

S_LOW = 0.669
NO_LOSS = lg.LossModel.lossless()


def passthrough_program(n_modes=1):
    return lg.uniform_program(transmissivity=1.0, n_physical_modes=n_modes, fill_modes=0)


def toy_program(seed=21, n_modes=4):
    return lg.random_program(
        seed, n_physical_modes=n_modes, fill_modes=0,
        loop_spec=lg.LoopSpec(delays=(1, 2), static_phases=(0.3, -0.8)),
    )


def empirical(samples: lg.SampleSet) -> dict:
    tally = Counter(tuple(int(c) for c in row) for row in samples.counts)
    return {k: v / samples.shots for k, v in tally.items()}


@pytest.fixture(scope="module")
def jan12():
    return lg.load_fixture("borealis-2023-01-12")


class TestClassicalSamplers:
    def test_coherent_single_mode_poisson(self):
        samples = lg.sample_classical(
            "coherent", passthrough_program(), NO_LOSS, S_LOW, 100_000, seed=5
        )
        lam = math.sinh(S_LOW) ** 2
        counts = samples.counts[:, 0]
        emp = {(k,): v / samples.shots for k, v in Counter(counts.tolist()).items()}
        ref = {(k,): math.exp(-lam) * lam**k / math.factorial(k) for k in range(10)}
        assert total_variation_distance(emp, ref) < 0.01

    @pytest.mark.parametrize("kind", ["thermal", "squashed", "coherent"])
    def test_m4_matches_bruteforce(self, kind, jan12):
        program = toy_program()
        loss = jan12.to_loss_model()
        samples = lg.sample_hypothesis(kind, program, loss, S_LOW, 100_000, seed=11)
        dist = lg.enumerate_distribution(
            lg.output_state(kind, S_LOW, program, loss), cutoff=7
        )
        assert total_variation_distance(empirical(samples), dist.as_dict()) < 0.02

    def test_lossless_means_agree_across_kinds(self):
        # norm-preserving circuit: every family delivers sinh(s)^2 per mode
        program = passthrough_program(4)
        results = {}
        for kind in ("thermal", "coherent", "squashed"):
            s = lg.sample_classical(kind, program, NO_LOSS, 0.5, 60_000, seed=13)
            totals = s.totals()
            results[kind] = (totals.mean(), totals.std(ddof=1) / math.sqrt(s.shots))
            assert abs(results[kind][0] - 4 * math.sinh(0.5) ** 2) < 3 * results[kind][1] + 1e-3
        kinds = list(results)
        for i, a in enumerate(kinds):
            for b in kinds[i + 1:]:
                gap = abs(results[a][0] - results[b][0])
                se = math.hypot(results[a][1], results[b][1])
                assert gap < 3 * se + 1e-3, (a, b)

    def test_each_sampler_matches_its_analytic_state(self):
        # a sub-unitary circuit is a loss channel; every family still agrees
        # with its own propagated Gaussian state
        program = toy_program(n_modes=4)
        for kind in ("thermal", "coherent", "squashed"):
            s = lg.sample_classical(kind, program, NO_LOSS, 0.5, 60_000, seed=3)
            totals = s.totals()
            se = totals.std(ddof=1) / math.sqrt(s.shots)
            analytic = lg.mean_photons(lg.output_state(kind, 0.5, program, NO_LOSS)).sum()
            assert abs(totals.mean() - analytic) < 3 * se + 1e-3, kind

    def test_loss_separates_coherent_from_thermal_means(self, jan12):
        # through a lossy circuit the retained field interferes, so coherent
        # light loses a different fraction than thermal light does
        program = lg.random_program(41, loop_spec=jan12.loop_spec())
        loss = jan12.to_loss_model()
        coh = lg.mean_photons(lg.output_state("coherent", S_LOW, program, loss)).sum()
        th = lg.mean_photons(lg.output_state("thermal", S_LOW, program, loss)).sum()
        assert abs(coh - th) > 0.1

    def test_smsv_rejected_by_classical_sampler(self):
        with pytest.raises(lg.UnsupportedStateError):
            lg.sample_classical("smsv", passthrough_program(), NO_LOSS, 0.5, 10, seed=0)

    def test_sample_mean_matches_state_mean_at_device_scale(self, jan12):
        program = lg.random_program(9, loop_spec=jan12.loop_spec())
        loss = jan12.to_loss_model()
        samples = lg.sample_classical("thermal", program, loss, S_LOW, 60_000, seed=8)
        expected = lg.mean_photons(
            lg.output_state("thermal", S_LOW, program, loss)
        ).sum()
        totals = samples.totals()
        se = totals.std(ddof=1) / math.sqrt(samples.shots)
        assert abs(totals.mean() - expected) < 5 * se


class TestBruteForceSampler:
    def test_zero_squeezing_all_vacuum(self):
        samples = lg.sample_smsv_bruteforce(
            toy_program(), NO_LOSS, 0.0, 1000, seed=1, cutoff=4
        )
        assert samples.counts.max() == 0

    def test_single_mode_matches_closed_form(self):
        samples = lg.sample_smsv_bruteforce(
            passthrough_program(), NO_LOSS, S_LOW, 100_000, seed=2, cutoff=8
        )
        emp = {(k,): v / samples.shots
               for k, v in Counter(samples.counts[:, 0].tolist()).items()}
        ref = {}
        for k in range(5):
            ref[(2 * k,)] = (
                math.factorial(2 * k) * math.tanh(S_LOW) ** (2 * k)
                / (2**k * math.factorial(k)) ** 2 / math.cosh(S_LOW)
            )
        assert total_variation_distance(emp, ref) < 0.01

    def test_m4_lossy_matches_oracle(self, jan12):
        program = toy_program()
        loss = jan12.to_loss_model()
        samples = lg.sample_smsv_bruteforce(program, loss, S_LOW, 100_000, seed=4, cutoff=6)
        dist = lg.enumerate_distribution(
            lg.output_state("smsv", S_LOW, program, loss), cutoff=6
        )
        assert total_variation_distance(empirical(samples), dist.as_dict()) < 0.02

    def test_resource_limits(self, jan12):
        big = lg.random_program(1, n_physical_modes=8, fill_modes=0,
                                loop_spec=lg.LoopSpec(delays=(1,), static_phases=(0.0,)))
        with pytest.raises(lg.ResourceError):
            lg.sample_smsv_bruteforce(big, NO_LOSS, 0.3, 10, seed=0)


class TestDistinguishableSampler:
    def test_single_mode_marginal_is_smsv_law(self):
        samples = lg.sample_distinguishable(
            passthrough_program(), NO_LOSS, S_LOW, 100_000, seed=6
        )
        emp = {(k,): v / samples.shots
               for k, v in Counter(samples.counts[:, 0].tolist()).items()}
        ref = {}
        for k in range(5):
            ref[(2 * k,)] = (
                math.factorial(2 * k) * math.tanh(S_LOW) ** (2 * k)
                / (2**k * math.factorial(k)) ** 2 / math.cosh(S_LOW)
            )
        assert total_variation_distance(emp, ref) < 0.01

    def test_two_mode_interference_missing(self):
        # swap bin 0 into the loop, then interfere it 50/50 with bin 1: the
        # balanced combination of equal squeezers keeps even photon parity,
        # while distinguishable routing thins photons one by one
        program = lg.CircuitProgram(
            loop_spec=lg.LoopSpec(delays=(1,), static_phases=(0.0,)),
            n_physical_modes=2,
            fill_modes=0,
            bs_transmissivity=(np.array([0.0, 0.5]),),
            phase=(np.zeros(2),),
        )
        s = 0.4
        shots = 100_000
        dist = lg.enumerate_distribution(
            lg.output_state("smsv", s, program, NO_LOSS), cutoff=6
        )
        ref = dist.as_dict()
        samples = lg.sample_distinguishable(program, NO_LOSS, s, shots, seed=7)
        tvd_obs = total_variation_distance(empirical(samples), ref)

        # null distribution of the TVD when sampling the Gaussian law itself
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(99)))
        null = []
        for _ in range(20):
            draw = dist.sample(shots, rng)
            emp = {tuple(int(x) for x in row): 0 for row in np.unique(draw, axis=0)}
            tally = Counter(tuple(int(x) for x in row) for row in draw)
            emp = {k: v / shots for k, v in tally.items()}
            null.append(total_variation_distance(emp, ref))
        null_mean, null_std = np.mean(null), np.std(null, ddof=1)
        assert tvd_obs > null_mean + 5 * null_std

    def test_mean_photons_match_gaussian_analytics(self, jan12):
        program = lg.random_program(31, loop_spec=jan12.loop_spec())
        loss = jan12.to_loss_model()
        samples = lg.sample_distinguishable(program, loss, S_LOW, 50_000, seed=12)
        expected = lg.mean_photons(lg.output_state("smsv", S_LOW, program, loss)).sum()
        totals = samples.totals()
        se = totals.std(ddof=1) / math.sqrt(samples.shots)
        assert abs(totals.mean() - expected) < 5 * se


class TestReproducibility:
    def test_same_seed_identical(self):
        program = toy_program()
        a = lg.sample_classical("thermal", program, NO_LOSS, 0.5, 20_000, seed=77)
        b = lg.sample_classical("thermal", program, NO_LOSS, 0.5, 20_000, seed=77)
        assert np.array_equal(a.counts, b.counts)

    def test_different_seeds_differ(self):
        program = toy_program()
        a = lg.sample_classical("thermal", program, NO_LOSS, 0.5, 20_000, seed=77)
        b = lg.sample_classical("thermal", program, NO_LOSS, 0.5, 20_000, seed=78)
        assert not np.array_equal(a.counts, b.counts)

    def test_shard_invariance(self, jan12):
        program = toy_program()
        loss = jan12.to_loss_model()
        children = np.random.SeedSequence(123).spawn(2)
        parts = [
            lg.sample_classical("thermal", program, loss, S_LOW, 50_000,
                                seed=int(c.generate_state(1)[0]))
            for c in children
        ]
        merged = np.concatenate([p.totals() for p in parts])
        single = lg.sample_classical("thermal", program, loss, S_LOW, 100_000, seed=123)
        result = stats.ks_2samp(merged, single.totals())
        assert result.pvalue > 0.01

    def test_pnr_cutoff_respected(self):
        program = passthrough_program(2)
        samples = lg.sample_classical("thermal", program, NO_LOSS, 1.4, 5_000,
                                      seed=3, pnr_cutoff=3)
        assert samples.counts.max() <= 3


class TestSampleSetIO:
    def test_roundtrip_bitexact(self, tmp_path, jan12):
        program = toy_program()
        samples = lg.sample_classical(
            "squashed", program, jan12.to_loss_model(), S_LOW, 500, seed=9,
            certificate_label=jan12.label,
        )
        path = tmp_path / "run.samples"
        samples.save(path)
        clone = lg.SampleSet.load(path)
        assert np.array_equal(clone.counts, samples.counts)
        assert clone.header() == samples.header()
        path2 = tmp_path / "again.samples"
        clone.save(path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_load_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.samples"
        path.write_text("1,2,3\n")
        with pytest.raises(lg.InputError):
            lg.SampleSet.load(path)

    def test_counts_cutoff_invariant(self):
        with pytest.raises(lg.InputError):
            lg.SampleSet(
                counts=np.array([[9]]), hypothesis="thermal", seed=0,
                program_hash="x", certificate="c", pnr_cutoff=7,
            )
