"""Exact photon-counting probabilities for Gaussian states.

The outcome probability of a photon-count pattern is
``prefactor * Haf(A_reduced) / prod(n_i!)`` where ``A`` is the pair
correlation matrix of the state, ``A_reduced`` repeats its rows/columns
according to the pattern, and the hafnian sums products of matrix entries
over all perfect matchings.  Two hafnian evaluators are provided: a direct
matching enumeration kept as an independent oracle, and a faster
inclusion-exclusion algorithm used by default.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError, ResourceError
from .gaussian import GaussianState, complex_moments

DEFAULT_MAX_PAIRS = 10

BLOCK_TOL = 1e-12


def _hafnian_enumerate(matrix: np.ndarray) -> complex:
    """Sum over perfect matchings, enumerated explicitly.

    Exponential-factorial cost ((n-1)!! terms); usable up to ~12x12.  Kept
    deliberately simple: this is the oracle the fast path is tested against.
    """
    n = matrix.shape[0]
    if n == 0:
        return 1.0 + 0.0j

    def rec(indices: tuple[int, ...]) -> complex:
        if not indices:
            return 1.0 + 0.0j
        first, rest = indices[0], indices[1:]
        total = 0.0 + 0.0j
        for pos, j in enumerate(rest):
            total += matrix[first, j] * rec(rest[:pos] + rest[pos + 1 :])
        return total

    return rec(tuple(range(n)))


_BATCH = 2048


def _subset_terms(matrix: np.ndarray, idx: np.ndarray, k: int) -> complex:
    """Summed x^k coefficients for a batch of pair subsets.

    ``idx`` holds the row indices of each subset, shape (batch, 2s); the
    coefficient of x^k in exp(sum_j tr((X A_S)^j) x^j / (2j)) is computed
    for every subset at once.
    """
    subs = matrix[idx[:, :, None], idx[:, None, :]]
    swapped = np.empty_like(subs)
    swapped[:, 0::2, :] = subs[:, 1::2, :]
    swapped[:, 1::2, :] = subs[:, 0::2, :]
    eigs = np.linalg.eigvals(swapped)  # (batch, 2s)

    batch = idx.shape[0]
    rates = np.empty((batch, k + 1), dtype=complex)
    acc = eigs.copy()
    for j in range(1, k + 1):
        rates[:, j] = acc.sum(axis=1) / (2 * j)
        acc *= eigs

    coeffs = np.zeros((batch, k + 1), dtype=complex)
    coeffs[:, 0] = 1.0
    for j in range(1, k + 1):
        contribution = coeffs.copy()
        t = 1
        while j * t <= k:
            shifted = np.zeros_like(contribution)
            shifted[:, j:] = contribution[:, :-j] * (rates[:, j] / t)[:, None]
            coeffs += shifted
            contribution = shifted
            t += 1
    return complex(coeffs[:, k].sum())


def _hafnian_fast(matrix: np.ndarray) -> complex:
    """Inclusion-exclusion hafnian over subsets of row/column pairs.

    For each subset of the k = n/2 pairs, the coefficient of x^k in
    exp(sum_j tr((X A_S)^j) x^j / (2j)) is accumulated with alternating
    sign; X swaps the two members of every pair.  Cost O(2^k poly(k));
    subsets of equal size are processed in batches.
    """
    import itertools

    n = matrix.shape[0]
    k = n // 2
    if k == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for size in range(1, k + 1):
        sign = (-1) ** (k - size)
        combos = itertools.combinations(range(k), size)
        while True:
            block = list(itertools.islice(combos, _BATCH))
            if not block:
                break
            pairs = np.asarray(block)  # (batch, size)
            idx = np.empty((len(block), 2 * size), dtype=np.intp)
            idx[:, 0::2] = 2 * pairs
            idx[:, 1::2] = 2 * pairs + 1
            total += sign * _subset_terms(matrix, idx, k)
    return complex(total)


def hafnian(matrix, method: str = "fast", max_pairs: int = DEFAULT_MAX_PAIRS) -> complex:
    """Hafnian of a complex symmetric matrix of even dimension.

    Args:
        matrix: 2k x 2k array-like; the diagonal is ignored.
        method: "fast" (default) or "enumerate" (the independent oracle).
        max_pairs: resource guard; dimensions above 2*max_pairs are refused.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError("hafnian requires a square matrix")
    n = m.shape[0]
    if n % 2:
        raise InputError("hafnian requires even dimension")
    if n // 2 > max_pairs:
        raise ResourceError(f"hafnian limited to {max_pairs} pairs, got {n // 2}")
    if n and np.abs(m - m.T).max() > 1e-8 * max(1.0, np.abs(m).max()):
        raise InputError("hafnian requires a symmetric matrix")
    if method == "fast":
        return _hafnian_fast(m)
    if method == "enumerate":
        return _hafnian_enumerate(m)
    raise InputError(f"unknown hafnian method {method!r}")


def perfect_matching_count(adjacency) -> int:
    """Number of perfect matchings of a graph given by a 0/1 adjacency matrix."""
    adj = np.asarray(adjacency)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise InputError("adjacency matrix must be square")
    if not np.array_equal(adj, adj.T):
        raise InputError("adjacency matrix must be symmetric")
    if not np.all((adj == 0) | (adj == 1)):
        raise InputError("adjacency entries must be 0 or 1")
    n = adj.shape[0]
    if n % 2:
        warnings.warn("odd number of vertices has no perfect matching; returning 0")
        return 0
    if n > 20:
        raise ResourceError("perfect matching count limited to 20 vertices")
    value = _hafnian_fast(adj.astype(complex))
    count = round(value.real)
    if abs(value - count) > 1e-3:
        raise ResourceError(f"matching count did not resolve to an integer ({value})")
    return int(count)


@dataclass(frozen=True)
class AdjacencyEncoding:
    """Pair-correlation encoding of a zero-mean Gaussian state.

    ``A`` has the block form [[B, C], [C^T, B*]]; ``B`` (symmetric) carries
    pair creation, ``C`` (hermitian) thermal occupation.  ``log_prefactor``
    holds log det(sigma_Q)^(-1/2) so the prefactor survives hundreds of
    modes without overflow.
    """

    a_matrix: np.ndarray
    b_block: np.ndarray
    c_block: np.ndarray
    log_prefactor: float

    @property
    def n_modes(self) -> int:
        return self.b_block.shape[0]

    @property
    def prefactor(self) -> float:
        return math.exp(self.log_prefactor)


def build_encoding(state: GaussianState) -> AdjacencyEncoding:
    """Build the pair-correlation matrix whose reduced hafnians give outcome
    probabilities.

    Sign gauge: the two-photon amplitudes enter through -M (a global pi/2
    phase-space rotation), which makes positive squeezing produce positive
    B entries.  Hafnian terms carry equal powers of B and B*, so outcome
    probabilities are independent of this gauge.
    """
    if not state.is_zero_mean(tol=1e-10):
        raise InputError("encoding requires a zero-mean state (no displacement)")
    state.check_valid()
    m = state.n_modes
    n_mat, m_mat = complex_moments(state)
    eye = np.eye(m)
    q = np.block([[n_mat.T + eye, -m_mat], [-m_mat.conj(), n_mat + eye]])

    chol = np.linalg.cholesky(q)  # q is hermitian positive definite for physical states
    log_det = 2.0 * float(np.sum(np.log(np.real(np.diagonal(chol)))))
    q_inv = np.linalg.inv(q)
    x_swap = np.block([[np.zeros((m, m)), eye], [eye, np.zeros((m, m))]])
    a = x_swap @ (np.eye(2 * m) - q_inv)
    a = 0.5 * (a + a.T)  # symmetric up to rounding by construction
    # half-ordering gauge: report the layout in which squeezed light carries
    # the pair block U diag(tanh s) U^T rather than its conjugate; reduced
    # hafnians are real, so probabilities do not depend on this choice
    a = a.conj()

    b = a[:m, :m]
    c = a[:m, m:]
    return AdjacencyEncoding(a_matrix=a, b_block=b, c_block=c, log_prefactor=-0.5 * log_det)


def reduce_encoding(encoding: AdjacencyEncoding, pattern) -> np.ndarray:
    """Repeat rows/columns of A according to a photon-count pattern.

    Row/column i of the B-indexed half and row/column i+m of the conjugate
    half are each repeated n_i times; the result is a symmetric 2n x 2n
    matrix for n total photons (0x0 for the vacuum pattern).
    """
    counts = np.asarray(pattern, dtype=int)
    m = encoding.n_modes
    if counts.shape != (m,):
        raise InputError("pattern length must equal the number of modes")
    if np.any(counts < 0):
        raise InputError("pattern entries must be nonnegative")
    idx = np.repeat(np.arange(m), counts)
    full = np.concatenate([idx, idx + m])
    return encoding.a_matrix[np.ix_(full, full)]


def _pattern_log_weight(counts: np.ndarray) -> float:
    return float(sum(math.lgamma(int(c) + 1) for c in counts))


def _pattern_probability(
    encoding: AdjacencyEncoding, counts: np.ndarray, max_pairs: int
) -> float:
    total = int(counts.sum())
    if total == 0:
        return encoding.prefactor
    if total > 2 * max_pairs:
        raise ResourceError(
            f"pattern with {total} photons exceeds the hafnian limit of {2 * max_pairs}"
        )
    reduced = reduce_encoding(encoding, counts)
    haf = _hafnian_fast(reduced)
    scale = max(1.0, abs(haf))
    if abs(haf.imag) > 1e-10 * scale:
        raise InputError(f"hafnian of a reduced encoding came out non-real ({haf})")
    prob = encoding.prefactor * haf.real * math.exp(-_pattern_log_weight(counts))
    return prob


def outcome_probability(
    state: GaussianState, pattern, max_pairs: int = DEFAULT_MAX_PAIRS
) -> float:
    """Probability of detecting the given photon-count pattern.

    The pattern total must not exceed ``2 * max_pairs``.  The returned value
    is clipped of its (verified tiny) imaginary and negative rounding
    residue.
    """
    counts = np.asarray(pattern, dtype=int)
    encoding = build_encoding(state)
    prob = _pattern_probability(encoding, counts, max_pairs)
    if prob < -1e-10:
        raise InputError(f"probability came out negative ({prob})")
    return float(max(prob, 0.0))


def _compositions(total: int, length: int, cap: int):
    """All nonnegative integer vectors of the given length summing to total,
    entries <= cap, in lexicographic order."""
    if length == 1:
        if total <= cap:
            yield (total,)
        return
    for head in range(min(total, cap), -1, -1):
        for tail in _compositions(total - head, length - 1, cap):
            yield (head,) + tail


@dataclass
class PatternDistribution:
    """Explicit outcome distribution over bounded photon-count patterns."""

    patterns: list[tuple[int, ...]]
    probabilities: np.ndarray
    captured_mass: float
    cutoff: int

    def sample(self, shots: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF sampling, renormalised over the captured mass."""
        probs = np.clip(self.probabilities, 0.0, None)
        cdf = np.cumsum(probs / probs.sum())
        draws = np.searchsorted(cdf, rng.random(shots), side="right")
        draws = np.minimum(draws, len(self.patterns) - 1)
        table = np.asarray(self.patterns, dtype=np.int64)
        return table[draws]

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return dict(zip(self.patterns, self.probabilities.tolist()))

    def to_csv(self) -> str:
        lines = ["pattern,probability"]
        for pat, prob in zip(self.patterns, self.probabilities):
            lines.append("\"%s\",%r" % (" ".join(str(c) for c in pat), float(prob)))
        return "\n".join(lines) + "\n"


def _poissonian_intensities(state: GaussianState) -> np.ndarray:
    """Per-mode intensities of a displaced state with vacuum covariance.

    Coherent light through any passive lossy circuit keeps the identity
    covariance, so its counting statistics are independent Poisson laws;
    this is the only displaced family the enumeration supports.
    """
    m = state.n_modes
    if np.abs(state.cov - np.eye(2 * m)).max() > 1e-8:
        raise InputError(
            "displaced states are only enumerable with vacuum covariance (coherent light)"
        )
    return (state.mean[:m] ** 2 + state.mean[m:] ** 2) / 4.0


def enumerate_distribution(
    state: GaussianState,
    cutoff: int,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    tail_tol: float = 1e-6,
) -> PatternDistribution:
    """Brute-force outcome distribution with per-mode counts <= cutoff.

    Patterns are evaluated level by level in total photon number.  Once the
    unaccounted mass (1 - accumulated) drops below ``tail_tol`` the
    remaining levels are skipped: they can only carry less than that, and
    the reported captured mass stays honest.  Pass ``tail_tol=0`` to force
    every pattern up to the hafnian limit.
    """
    m = state.n_modes
    if m > 6:
        raise ResourceError("enumerate_distribution is limited to 6 modes")
    if cutoff > 8:
        raise ResourceError("enumerate_distribution is limited to per-mode counts <= 8")
    intensities = None
    if state.is_zero_mean(tol=1e-10):
        encoding = build_encoding(state)
        n_max = min(m * cutoff, 2 * max_pairs)
    else:
        intensities = _poissonian_intensities(state)
        log_vacuum = -float(intensities.sum())
        log_lam = np.log(np.clip(intensities, 1e-300, None))
        n_max = m * cutoff

    patterns: list[tuple[int, ...]] = []
    probs: list[float] = []
    mass = 0.0
    for total in range(n_max + 1):
        for pattern in _compositions(total, m, cutoff):
            counts = np.asarray(pattern, dtype=int)
            if intensities is None:
                p = max(_pattern_probability(encoding, counts, max_pairs), 0.0)
            else:
                logp = log_vacuum + float(counts @ log_lam) - _pattern_log_weight(counts)
                p = math.exp(logp)
            patterns.append(pattern)
            probs.append(p)
            mass += p
        if 1.0 - mass < tail_tol:
            break
    return PatternDistribution(
        patterns=patterns,
        probabilities=np.asarray(probs),
        captured_mass=mass,
        cutoff=cutoff,
    )
