"""Orbit coarse-graining of photon-count samples and feature-vector extraction.

An orbit is the multiset of nonzero counts in a pattern, written as a
weakly decreasing partition of the detected photon number.  The canonical
display order sorts the partitions of n by decreasing length with
lexicographic ascent inside each length, so [1,1,...,1] comes first,
then [2,1,...], then [2,2,1,...].
"""

from __future__ import annotations

import warnings
from collections import Counter, OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .samplers import SampleSet

MIN_SUPPORT = 100

_O1, _O2, _O3, _OTHER = 0, 1, 2, 3


def orbit_of(pattern) -> tuple[int, ...]:
    """Orbit of a pattern: its nonzero counts, sorted descending."""
    counts = np.asarray(pattern, dtype=int)
    nz = counts[counts > 0]
    return tuple(sorted(nz.tolist(), reverse=True))


def orbit_sort_key(orbit: tuple[int, ...]):
    return (-len(orbit), orbit)


def partitions(n: int):
    """Weakly decreasing partitions of n (largest part first)."""

    def rec(remaining: int, cap: int, prefix: tuple[int, ...]):
        if remaining == 0:
            yield prefix
            return
        for part in range(min(cap, remaining), 0, -1):
            yield from rec(remaining - part, part, prefix + (part,))

    if n == 0:
        yield ()
        return
    yield from rec(n, n, ())


def canonical_orbits(n: int) -> list[tuple[int, ...]]:
    """All orbits of n photons in canonical display order."""
    return sorted(partitions(n), key=orbit_sort_key)


def _classify(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised (total, orbit-class) labels; classes: O1, O2, O3, other."""
    totals = counts.sum(axis=1, dtype=np.int64)
    twos = (counts == 2).sum(axis=1)
    high = (counts > 2).any(axis=1)
    classes = np.full(counts.shape[0], _OTHER, dtype=np.int8)
    classes[(~high) & (twos == 0)] = _O1
    classes[(~high) & (twos == 1)] = _O2
    classes[(~high) & (twos == 2)] = _O3
    return totals, classes


@dataclass
class OrbitTable:
    """Per-photon-number tallies of the three leading orbits.

    ``table[n]`` holds [count_O1, count_O2, count_O3, count_other] over the
    shots whose total is n.  The table is the sufficient statistic for
    feature vectors and their bootstrap.
    """

    table: dict[int, np.ndarray]
    shots: int

    @classmethod
    def from_samples(cls, samples: SampleSet) -> "OrbitTable":
        totals, classes = _classify(samples.counts)
        table: dict[int, np.ndarray] = {}
        for n in np.unique(totals):
            mask = totals == n
            row = np.bincount(classes[mask], minlength=4).astype(np.int64)
            table[int(n)] = row
        return cls(table=table, shots=samples.shots)

    def support(self, n: int) -> int:
        row = self.table.get(n)
        return int(row.sum()) if row is not None else 0


def orbit_histogram(samples: SampleSet, n: int) -> "OrderedDict[tuple[int, ...], float]":
    """Conditional orbit frequencies among shots with total n, canonically ordered."""
    if n < 0:
        raise InputError("photon number must be nonnegative")
    totals = samples.totals()
    rows = samples.counts[totals == n]
    if rows.shape[0] == 0:
        warnings.warn(f"no shots with {n} detected photons; empty histogram")
        return OrderedDict()
    tally = Counter(orbit_of(row) for row in rows)
    out: "OrderedDict[tuple[int, ...], float]" = OrderedDict()
    for orbit in sorted(tally, key=orbit_sort_key):
        out[orbit] = tally[orbit] / rows.shape[0]
    return out


@dataclass(frozen=True)
class FeatureVector:
    """Conditional probabilities of the three leading orbits at fixed n."""

    n: int
    o1: float
    o2: float
    o3: float
    std_errors: tuple[float, float, float]
    support: int

    def point(self) -> np.ndarray:
        return np.array([self.o1, self.o2, self.o3])


def _fv_from_row(n: int, row: np.ndarray) -> FeatureVector:
    support = int(row.sum())
    probs = row[:3] / support
    errs = tuple(float(np.sqrt(p * (1.0 - p) / support)) for p in probs)
    return FeatureVector(
        n=n, o1=float(probs[0]), o2=float(probs[1]), o3=float(probs[2]),
        std_errors=errs, support=support,
    )


def feature_vectors(
    source: SampleSet | OrbitTable,
    n_min: int,
    n_max: int,
    min_support: int = MIN_SUPPORT,
) -> list[FeatureVector]:
    """One feature vector per photon number in [n_min, n_max] with enough shots."""
    if n_min > n_max:
        raise InputError("n_min must not exceed n_max")
    table = source if isinstance(source, OrbitTable) else OrbitTable.from_samples(source)
    out = []
    for n in range(n_min, n_max + 1):
        row = table.table.get(n)
        if row is None or row.sum() < max(min_support, 1):
            continue
        out.append(_fv_from_row(n, row))
    return out


def bootstrap_feature_points(
    table: OrbitTable,
    n_values: list[int],
    resamples: int,
    seed: int,
    min_support: int = 1,
) -> np.ndarray:
    """Bootstrap replicates of the (o1, o2, o3) points at the given photon numbers.

    Shots are resampled with replacement by drawing the whole (n, orbit
    class) contingency table from a multinomial, which is equivalent to
    resampling individual shots.  Returns an array of shape
    (resamples, len(n_values), 3); entries for resamples where a photon
    number loses all support are NaN.
    """
    cells = []
    weights = []
    for n, row in sorted(table.table.items()):
        for cls in range(4):
            cells.append((n, cls))
            weights.append(row[cls])
    weights = np.asarray(weights, dtype=np.float64)
    remainder = table.shots - weights.sum()
    if remainder > 0:  # shots outside any tracked n (cannot happen today, kept safe)
        cells.append((-1, -1))
        weights = np.append(weights, remainder)
    probs = weights / weights.sum()

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    draws = rng.multinomial(table.shots, probs, size=resamples)
    lookup = {cell: i for i, cell in enumerate(cells)}
    out = np.full((resamples, len(n_values), 3), np.nan)
    for j, n in enumerate(n_values):
        idx = [lookup.get((n, cls)) for cls in range(4)]
        if any(i is None for i in idx):
            continue
        block = draws[:, idx]  # resamples x 4
        support = block.sum(axis=1)
        ok = support >= max(min_support, 1)
        out[ok, j, :] = block[ok, :3] / support[ok, None]
    return out


def feature_vectors_to_csv(vectors: list[FeatureVector]) -> str:
    lines = ["n,o1,o2,o3,e1,e2,e3,support"]
    for fv in vectors:
        e1, e2, e3 = fv.std_errors
        lines.append(
            f"{fv.n},{fv.o1!r},{fv.o2!r},{fv.o3!r},{e1!r},{e2!r},{e3!r},{fv.support}"
        )
    return "\n".join(lines) + "\n"


def orbit_histogram_to_csv(hist: "OrderedDict[tuple[int, ...], float]") -> str:
    lines = ["orbit,frequency"]
    for orbit, freq in hist.items():
        lines.append("\"%s\",%r" % (" ".join(map(str, orbit)), float(freq)))
    return "\n".join(lines) + "\n"
