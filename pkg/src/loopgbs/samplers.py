"""Photon-count samplers for the classically simulable hypotheses.

Classical Gaussian mixtures (thermal, coherent, squashed) are sampled via
their P-functions: draw a coherent amplitude per input pulse, push the
amplitude vector through the effective lossy transfer matrix, then draw
detector counts from Poisson laws on the output intensities.  Squeezed
vacuum has no such representation; at desk scale it is sampled exactly from
the brute-force distribution.  A distinguishable-particle sampler routes
photon pairs through the same intensity pattern without interference,
which is this toolkit's operational definition of that hypothesis.

Randomness uses the counter-based Philox generator, keyed per (seed, shot
chunk) through SeedSequence spawning, so shot chunks are independent and a
run is reproducible from its seed alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .compiler import CircuitProgram
from .errors import InputError, ResourceError, UnsupportedStateError
from .gaussian import LossModel
from .hafnian import enumerate_distribution
from .pipeline import logical_lossy_matrix, output_state

DEFAULT_PNR_CUTOFF = 7
_CHUNK = 16384  # fixed so results do not depend on worker count

CLASSICAL_KINDS = ("thermal", "coherent", "squashed")


@dataclass
class SampleSet:
    """Photon counts (shots x modes) plus the provenance needed to redo the run."""

    counts: np.ndarray
    hypothesis: str
    seed: int
    program_hash: str
    certificate: str
    pnr_cutoff: int
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if self.counts.ndim != 2:
            raise InputError("counts must be a shots x modes matrix")
        if self.counts.size and int(self.counts.max()) > self.pnr_cutoff:
            raise InputError("counts exceed the declared pnr_cutoff")

    @property
    def shots(self) -> int:
        return self.counts.shape[0]

    @property
    def n_modes(self) -> int:
        return self.counts.shape[1]

    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1, dtype=np.int64)

    def header(self) -> dict:
        from . import __version__

        head = {
            "version": __version__,
            "hypothesis": self.hypothesis,
            "seed": self.seed,
            "program_hash": self.program_hash,
            "certificate": self.certificate,
            "pnr_cutoff": self.pnr_cutoff,
            "shots": self.shots,
            "modes": self.n_modes,
        }
        head.update(self.extra)
        return head

    def save(self, path) -> None:
        import json

        with open(path, "w") as fh:
            fh.write("#loopgbs-samples " + json.dumps(self.header(), sort_keys=True) + "\n")
            np.savetxt(fh, self.counts, fmt="%d", delimiter=",")

    @classmethod
    def load(cls, path) -> "SampleSet":
        import json

        with open(path) as fh:
            first = fh.readline()
            if not first.startswith("#loopgbs-samples "):
                raise InputError("not a sample-set file (missing header line)")
            head = json.loads(first[len("#loopgbs-samples ") :])
            counts = np.loadtxt(fh, dtype=np.int64, delimiter=",", ndmin=2)
        known = {"version", "hypothesis", "seed", "program_hash", "certificate",
                 "pnr_cutoff", "shots", "modes"}
        extra = {k: v for k, v in head.items() if k not in known}
        out = cls(
            counts=counts.astype(np.uint8),
            hypothesis=head["hypothesis"],
            seed=int(head["seed"]),
            program_hash=head["program_hash"],
            certificate=head["certificate"],
            pnr_cutoff=int(head["pnr_cutoff"]),
            extra=extra,
        )
        if out.shots != int(head["shots"]) or out.n_modes != int(head["modes"]):
            raise InputError("sample-set body does not match its header")
        return out


def _chunk_rngs(seed: int, shots: int):
    n_chunks = (shots + _CHUNK - 1) // _CHUNK
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    for k, child in enumerate(children):
        lo = k * _CHUNK
        yield slice(lo, min(lo + _CHUNK, shots)), np.random.Generator(np.random.Philox(child))


def sample_classical(
    kind: str,
    program: CircuitProgram,
    loss: LossModel,
    squeezing: float,
    shots: int,
    seed: int,
    pnr_cutoff: int = DEFAULT_PNR_CUTOFF,
    certificate_label: str = "",
) -> SampleSet:
    """Sample a thermal, coherent, or squashed hypothesis.

    Per shot and input pulse the coherent amplitude is drawn from the
    hypothesis P-function (thermal: circular complex normal with mean
    intensity sinh^2 s; coherent: the fixed amplitude sinh s; squashed: a
    real normal of variance sinh^2 s displacing the noisy quadrature), then
    counts follow Poisson laws on the propagated intensities, capped at the
    detector resolution.
    """
    if kind == "smsv":
        raise UnsupportedStateError(
            "squeezed vacuum has no P-function sampler; use sample_smsv_bruteforce"
        )
    if kind not in CLASSICAL_KINDS:
        raise InputError(f"unknown classical hypothesis {kind!r}")
    if shots < 1:
        raise InputError("shots must be >= 1")

    t_log = logical_lossy_matrix(program, loss)
    n_log, n_phys = t_log.shape
    sinh_s = math.sinh(squeezing)
    counts = np.zeros((shots, n_log), dtype=np.uint8)
    coherent_intensity = None
    output_chol = None
    if kind == "coherent":
        beta = t_log @ np.full(n_phys, sinh_s, dtype=complex)
        coherent_intensity = np.abs(beta) ** 2
    elif kind == "thermal":
        # circular input amplitudes make the output amplitudes circular too,
        # so they can be drawn straight from the output covariance
        sigma_beta = (sinh_s**2) * (t_log @ t_log.conj().T)
        jitter = 1e-14 * max(1.0, float(np.abs(sigma_beta).max()))
        output_chol = np.linalg.cholesky(sigma_beta + jitter * np.eye(n_log)).T.copy()

    t_log_t = t_log.T.copy()
    for rows, rng in _chunk_rngs(seed, shots):
        size = rows.stop - rows.start
        if kind == "coherent":
            lam = np.broadcast_to(coherent_intensity, (size, n_log))
        elif kind == "thermal":
            z = rng.standard_normal((size, n_log)) + 1j * rng.standard_normal(
                (size, n_log)
            )
            lam = np.abs((z / math.sqrt(2.0)) @ output_chol) ** 2
        else:  # squashed: displacement along the above-vacuum quadrature
            alpha = 1j * (sinh_s * rng.standard_normal((size, n_phys)))
            lam = np.abs(alpha @ t_log_t) ** 2
        drawn = rng.poisson(lam)
        counts[rows] = np.minimum(drawn, pnr_cutoff).astype(np.uint8)

    return SampleSet(
        counts=counts,
        hypothesis=kind,
        seed=seed,
        program_hash=program.content_hash(),
        certificate=certificate_label,
        pnr_cutoff=pnr_cutoff,
        extra={"squeezing": squeezing},
    )


def sample_smsv_bruteforce(
    program: CircuitProgram,
    loss: LossModel,
    squeezing: float,
    shots: int,
    seed: int,
    cutoff: int = 8,
    pnr_cutoff: int | None = None,
    certificate_label: str = "",
    tail_tol: float = 1e-6,
) -> SampleSet:
    """Exact squeezed-vacuum sampling from the enumerated distribution.

    Limited to 6 modes and per-mode counts <= 8; the distribution is
    renormalised over its captured mass and sampled by inverse CDF.
    """
    if program.n_logical_modes > 6:
        raise ResourceError("exact squeezed-vacuum sampling is limited to 6 logical modes")
    if cutoff > 8:
        raise ResourceError("brute-force cutoff is limited to 8")
    if shots < 1:
        raise InputError("shots must be >= 1")
    pnr = cutoff if pnr_cutoff is None else min(pnr_cutoff, cutoff)
    state = output_state("smsv", squeezing, program, loss)
    dist = enumerate_distribution(state, cutoff=min(cutoff, pnr), tail_tol=tail_tol)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    counts = dist.sample(shots, rng).astype(np.uint8)
    return SampleSet(
        counts=counts,
        hypothesis="smsv",
        seed=seed,
        program_hash=program.content_hash(),
        certificate=certificate_label,
        pnr_cutoff=pnr,
        extra={"squeezing": squeezing, "captured_mass": dist.captured_mass},
    )


def _pair_number_cdf(squeezing: float, tol: float = 1e-12) -> np.ndarray:
    """CDF of the photon-pair number of one squeezed-vacuum mode."""
    t2 = math.tanh(squeezing) ** 2
    probs = [1.0 / math.cosh(squeezing)]
    k = 0
    while probs[-1] > tol or k < 4:
        ratio = t2 * (2 * k + 1) / (2 * k + 2)
        probs.append(probs[-1] * ratio)
        k += 1
        if k > 500:
            break
    return np.cumsum(probs)


def sample_distinguishable(
    program: CircuitProgram,
    loss: LossModel,
    squeezing: float,
    shots: int,
    seed: int,
    pnr_cutoff: int = DEFAULT_PNR_CUTOFF,
    certificate_label: str = "",
) -> SampleSet:
    """Distinguishable-particle sampler at full device scale.

    Each input pulse emits photon pairs with the single-mode squeezed-vacuum
    statistics; every photon is then routed independently to output j with
    probability |T_ji|^2 (or lost), with no interference between photons.
    This intensity-routing model conserves the mean photon flux of the
    Gaussian hypothesis while breaking its pair correlations.
    """
    if shots < 1:
        raise InputError("shots must be >= 1")
    t_log = logical_lossy_matrix(program, loss)
    n_log, n_phys = t_log.shape
    intensity = np.abs(t_log) ** 2  # n_log x n_phys routing weights, col sums <= 1
    # routing CDF per input mode; last bucket is loss
    col_cdfs = np.cumsum(intensity, axis=0).T.copy()  # n_phys x n_log
    pair_cdf = _pair_number_cdf(squeezing)

    counts = np.zeros((shots, n_log), dtype=np.int64)
    for rows, rng in _chunk_rngs(seed, shots):
        size = rows.stop - rows.start
        pairs = np.searchsorted(pair_cdf, rng.random((size, n_phys)), side="right")
        photons = 2 * pairs
        sub = np.zeros((size, n_log), dtype=np.int64)
        for i in range(n_phys):
            per_shot = photons[:, i]
            total = int(per_shot.sum())
            if total == 0:
                continue
            dest = np.searchsorted(col_cdfs[i], rng.random(total), side="right")
            shot_ids = np.repeat(np.arange(size), per_shot)
            keep = dest < n_log
            np.add.at(sub, (shot_ids[keep], dest[keep]), 1)
        counts[rows] = sub
    counts = np.minimum(counts, pnr_cutoff).astype(np.uint8)
    return SampleSet(
        counts=counts,
        hypothesis="distinguishable",
        seed=seed,
        program_hash=program.content_hash(),
        certificate=certificate_label,
        pnr_cutoff=pnr_cutoff,
        extra={"squeezing": squeezing},
    )


def sample_hypothesis(
    kind: str,
    program: CircuitProgram,
    loss: LossModel,
    squeezing: float,
    shots: int,
    seed: int,
    pnr_cutoff: int = DEFAULT_PNR_CUTOFF,
    certificate_label: str = "",
) -> SampleSet:
    """Dispatch to the sampler implementing the named hypothesis."""
    if kind in CLASSICAL_KINDS:
        return sample_classical(
            kind, program, loss, squeezing, shots, seed, pnr_cutoff, certificate_label
        )
    if kind == "distinguishable":
        return sample_distinguishable(
            program, loss, squeezing, shots, seed, pnr_cutoff, certificate_label
        )
    if kind == "smsv":
        return sample_smsv_bruteforce(
            program, loss, squeezing, shots, seed,
            pnr_cutoff=pnr_cutoff, certificate_label=certificate_label,
        )
    raise InputError(f"unknown hypothesis {kind!r}")


def empirical_photon_covariance(samples: SampleSet) -> np.ndarray:
    """Sample covariance matrix Cov(n_i, n_j) of the recorded counts."""
    x = samples.counts.astype(np.float64)
    return np.cov(x, rowvar=False, bias=False)
