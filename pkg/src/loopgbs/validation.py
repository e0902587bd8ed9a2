"""Geometric and statistical tests in orbit space, combined into a verdict.

The classifier follows an elimination order.  Photon distinguishability
moves feature vectors off the classical-Gaussian hyperplane, so the plane
test runs first.  Coherent light is screened next: its orbit geometry is a
deterministic function of the interferometer speckle, so across programs
its feature vectors scatter far more than any shot-noise-limited sampler,
and against a single dataset its constellation sits many error bars from
the data.  The surviving zero-mean hypotheses (squeezed-with-loss, thermal,
squashed) are ranked by the distance between the sample's two-point photon
correlators and each hypothesis's covariance matrix.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .cert import DeviceCertificate
from .compiler import CircuitProgram, random_program
from .errors import InputError
from .gaussian import photon_covariance
from .orbits import (
    FeatureVector,
    OrbitTable,
    bootstrap_feature_points,
    feature_vectors,
)
from .pipeline import output_state
from .samplers import SampleSet, empirical_photon_covariance, sample_hypothesis

HYPOTHESES = ("smsv", "thermal", "squashed", "coherent", "distinguishable")

# does the hypothesis keep feature vectors on the classical-Gaussian plane?
_ON_PLANE = {
    "smsv": True,
    "thermal": True,
    "squashed": True,
    "coherent": True,
    "distinguishable": False,
}


@dataclass
class PlaneFit:
    """Total-least-squares plane through a 3D point cloud."""

    normal: np.ndarray
    offset: float
    rms_residual: float
    residuals: np.ndarray

    def distances(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.normal - self.offset


@dataclass
class LineFit:
    """Total-least-squares line through a 3D point group."""

    direction: np.ndarray
    centroid: np.ndarray
    residuals: np.ndarray
    rms_residual: float

    def distances(self, points: np.ndarray) -> np.ndarray:
        rel = np.atleast_2d(points) - self.centroid
        along = rel @ self.direction
        perp = rel - np.outer(along, self.direction)
        return np.linalg.norm(perp, axis=1)


def fit_hyperplane(points) -> PlaneFit:
    """Fit a plane by total least squares (smallest principal component).

    Needs at least four points that are not collinear.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InputError("plane fitting expects an (N, 3) point array")
    if pts.shape[0] < 4:
        raise InputError("plane fitting needs at least 4 points")
    centroid = pts.mean(axis=0)
    _, svals, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    scale = max(svals[0], 1e-30)
    if svals[1] / scale < 1e-10:
        raise InputError("points are collinear; the plane is degenerate")
    normal = vt[-1]
    normal = normal / np.linalg.norm(normal)
    offset = float(normal @ centroid)
    residuals = pts @ normal - offset
    return PlaneFit(
        normal=normal,
        offset=offset,
        rms_residual=float(np.sqrt(np.mean(residuals**2))),
        residuals=residuals,
    )


def fit_iso_n_lines(points_by_n: dict[int, np.ndarray]) -> dict[int, LineFit]:
    """Per-photon-number total-least-squares lines; singleton groups are skipped."""
    fits: dict[int, LineFit] = {}
    for n, pts in sorted(points_by_n.items()):
        pts = np.asarray(pts, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InputError("line fitting expects (N, 3) point groups")
        if pts.shape[0] < 2:
            warnings.warn(f"iso-n group n={n} has a single point; skipped")
            continue
        centroid = pts.mean(axis=0)
        _, _, vt = np.linalg.svd(pts - centroid, full_matrices=False)
        direction = vt[0] / np.linalg.norm(vt[0])
        fit = LineFit(direction=direction, centroid=centroid,
                      residuals=np.zeros(0), rms_residual=0.0)
        res = fit.distances(pts)
        fit.residuals = res
        fit.rms_residual = float(np.sqrt(np.mean(res**2)))
        fits[n] = fit
    return fits


def spread_metric(boot_points: np.ndarray) -> float:
    """Mean over photon numbers of the trace of the replicate covariance.

    ``boot_points`` has shape (resamples, n_points, 3); replicates where a
    point lost its support are NaN and are ignored per point.
    """
    boot = np.asarray(boot_points, dtype=float)
    if boot.ndim != 3 or boot.shape[2] != 3:
        raise InputError("spread metric expects (resamples, points, 3)")
    if boot.shape[0] < 30:
        raise InputError("spread metric needs at least 30 bootstrap resamples")
    traces = []
    for j in range(boot.shape[1]):
        block = boot[:, j, :]
        block = block[~np.isnan(block).any(axis=1)]
        if block.shape[0] < 30:
            continue
        traces.append(float(np.trace(np.cov(block, rowvar=False))))
    if not traces:
        raise InputError("no photon number retained enough replicate support")
    return float(np.mean(traces))


def program_ensemble_feature_points(
    kind: str,
    certificate: DeviceCertificate,
    squeezing: float,
    n_values: list[int],
    replicates: int,
    shots: int,
    seed: int,
    pnr_cutoff: int = 7,
) -> np.ndarray:
    """Feature-vector replicates across freshly drawn random programs.

    Each replicate redraws the beamsplitter/phase schedules, resimulates the
    hypothesis, and records its (o1, o2, o3) points; this is the
    different-transformation protocol, and it exposes geometry that is
    locked to the realised interferometer speckle (coherent light) rather
    than averaged over it per shot (thermal and squashed mixtures).
    """
    loss = certificate.to_loss_model()
    spec = certificate.loop_spec()
    seeds = np.random.SeedSequence(seed).generate_state(2 * replicates)
    out = np.full((replicates, len(n_values), 3), np.nan)
    for r in range(replicates):
        program = random_program(int(seeds[2 * r]), loop_spec=spec)
        run = sample_hypothesis(
            kind, program, loss, squeezing, shots, int(seeds[2 * r + 1]),
            pnr_cutoff=pnr_cutoff, certificate_label=certificate.label,
        )
        table = OrbitTable.from_samples(run)
        for j, n in enumerate(n_values):
            row = table.table.get(n)
            if row is None or row.sum() < 1:
                continue
            out[r, j, :] = row[:3] / row.sum()
    return out


def covariance_distance(cov_a, cov_b) -> tuple[float, float]:
    """Normalised Frobenius distance and off-diagonal Pearson correlation."""
    a = np.asarray(cov_a, dtype=float)
    b = np.asarray(cov_b, dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise InputError("covariance matrices must share one square shape")
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        raise InputError("reference covariance has zero norm")
    frob = float(np.linalg.norm(a - b)) / norm_b
    mask = ~np.eye(a.shape[0], dtype=bool)
    pearson = float(np.corrcoef(a[mask], b[mask])[0, 1])
    return frob, pearson


@dataclass
class ValidationConfig:
    """Knobs of the validation run; thresholds are configuration, not physics."""

    seed: int = 2024
    shots: int = 250_000
    n_min: int = 18
    n_max: int = 32
    pnr_cutoff: int = 7
    squeezing_label: str = "low"
    bootstrap_resamples: int = 200
    sigma_threshold: float = 3.0
    spread_ratio_limit: float = 3.0
    efficiency_sweep: tuple[float, ...] = (0.35, 0.40, 0.45)
    min_support: int = 100
    threads: int = 1


@dataclass
class ValidationReport:
    """Everything the verdict rests on, reproducible from the stored seeds."""

    config: ValidationConfig
    program_hash: str
    certificate_label: str
    sample_hash: str
    sample_mean_photons: float
    plane_normal: list[float]
    plane_offset: float
    plane_rms: float
    plane_tests: dict
    line_tests: dict
    spreads: dict
    constellation_tests: dict
    covariance_tests: dict
    hypotheses: dict
    verdict: list[dict]
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        from . import __version__

        doc = asdict(self)
        doc["version"] = __version__
        return json.dumps(doc, sort_keys=True, indent=1, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and (np.isnan(obj) or np.isinf(obj)):
        return None
    raise TypeError(f"not JSON serialisable: {type(obj)}")


def _sample_hash(samples: SampleSet) -> str:
    digest = hashlib.sha256(np.ascontiguousarray(samples.counts).tobytes())
    return digest.hexdigest()[:16]


def validate(
    samples: SampleSet,
    program: CircuitProgram,
    certificate: DeviceCertificate,
    config: ValidationConfig | None = None,
) -> ValidationReport:
    """Classify a sample set against the classically simulable hypotheses.

    Simulates each hypothesis under the certificate with the same program,
    fits the classical-Gaussian plane and iso-n lines from a thermal
    common-efficiency sweep, tests the sample's feature vectors against
    them, measures how far each hypothesis's constellation sits from the
    sample's (in units of their combined bootstrap error), and ranks the
    zero-mean hypotheses by two-point correlator distance.  Deterministic
    given ``config.seed``.
    """
    cfg = config or ValidationConfig()
    if samples.n_modes != program.n_logical_modes:
        raise InputError("sample set and program disagree on the logical mode count")
    squeezing = certificate.squeezing_for(cfg.squeezing_label)
    loss = certificate.to_loss_model()
    report_warnings: list[str] = []

    seeds = np.random.SeedSequence(cfg.seed).generate_state(16 + len(cfg.efficiency_sweep))
    n_values = list(range(cfg.n_min, cfg.n_max + 1))

    # --- simulate hypotheses ------------------------------------------------
    def run(kind: str, seed) -> SampleSet:
        return sample_hypothesis(
            kind, program, loss, squeezing, cfg.shots, int(seed),
            pnr_cutoff=cfg.pnr_cutoff, certificate_label=certificate.label,
        )

    kinds = ["thermal", "squashed", "coherent", "distinguishable"]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            sims = dict(zip(kinds, pool.map(run, kinds, seeds[:4])))
    else:
        sims = {kind: run(kind, seed) for kind, seed in zip(kinds, seeds[:4])}

    # thermal sweep over common efficiency anchors the plane and lines
    sweep_tables: list[OrbitTable] = []
    for j, eta in enumerate(cfg.efficiency_sweep):
        swept = DeviceCertificate(
            loop_phases=certificate.loop_phases,
            common_efficiency=eta,
            loop_efficiencies=certificate.loop_efficiencies,
            squeezing_parameters_mean=certificate.squeezing_parameters_mean,
            relative_channel_efficiencies=certificate.relative_channel_efficiencies,
            finished_at=certificate.finished_at,
            target=certificate.target,
        )
        run_set = sample_hypothesis(
            "thermal", program, swept.to_loss_model(), squeezing, cfg.shots,
            int(seeds[16 + j]), pnr_cutoff=cfg.pnr_cutoff, certificate_label=swept.label,
        )
        sweep_tables.append(OrbitTable.from_samples(run_set))

    # --- feature vectors ------------------------------------------------------
    sample_table = OrbitTable.from_samples(samples)
    tables = {label: OrbitTable.from_samples(sim) for label, sim in sims.items()}
    fvs: dict[str, list[FeatureVector]] = {
        "sample": feature_vectors(sample_table, cfg.n_min, cfg.n_max, cfg.min_support)
    }
    for label, tab in tables.items():
        fvs[label] = feature_vectors(tab, cfg.n_min, cfg.n_max, cfg.min_support)
    if not fvs["sample"]:
        report_warnings.append("sample has no photon number with enough support in range")

    # --- plane and lines from the sweep ---------------------------------------
    sweep_points = []
    points_by_n: dict[int, list[np.ndarray]] = {}
    for tab in sweep_tables:
        for fv in feature_vectors(tab, cfg.n_min, cfg.n_max, cfg.min_support):
            sweep_points.append(fv.point())
            points_by_n.setdefault(fv.n, []).append(fv.point())
    plane = fit_hyperplane(np.asarray(sweep_points))
    lines = fit_iso_n_lines({n: np.asarray(p) for n, p in points_by_n.items()})

    boots: dict[str, np.ndarray] = {}
    plane_tests: dict[str, dict] = {}
    line_tests: dict[str, dict] = {}
    spreads: dict[str, float] = {}

    def analyse(label: str, table: OrbitTable, seed):
        vecs = feature_vectors(table, cfg.n_min, cfg.n_max, cfg.min_support)
        ns = [fv.n for fv in vecs]
        pts = np.asarray([fv.point() for fv in vecs])
        boot = bootstrap_feature_points(table, ns, cfg.bootstrap_resamples, int(seed))
        boots[label] = boot
        if pts.size == 0:
            plane_tests[label] = {"mean_abs_residual": None}
            line_tests[label] = {"mean_line_distance": None}
            spreads[label] = float("nan")
            return
        res_vals, line_vals = [], []
        for r in range(boot.shape[0]):
            bpts = boot[r]
            ok = ~np.isnan(bpts).any(axis=1)
            if not ok.any():
                continue
            res_vals.append(float(np.mean(np.abs(plane.distances(bpts[ok])))))
            dists = [
                lines[n].distances(p[None, :])[0]
                for n, p, keep in zip(ns, bpts, ok)
                if keep and n in lines
            ]
            if dists:
                line_vals.append(float(np.mean(dists)))
        observed_res = float(np.mean(np.abs(plane.distances(pts))))
        obs_line = [lines[n].distances(p[None, :])[0] for n, p in zip(ns, pts) if n in lines]
        observed_line = float(np.mean(obs_line)) if obs_line else float("nan")
        res_sigma = float(np.std(res_vals, ddof=1)) if len(res_vals) > 1 else float("nan")
        line_sigma = float(np.std(line_vals, ddof=1)) if len(line_vals) > 1 else float("nan")
        plane_tests[label] = {
            "mean_abs_residual": observed_res,
            "bootstrap_sigma": res_sigma,
            "sigma_ratio": observed_res / res_sigma if res_sigma else float("inf"),
        }
        line_tests[label] = {
            "mean_line_distance": observed_line,
            "bootstrap_sigma": line_sigma,
            "sigma_ratio": observed_line / line_sigma if line_sigma else float("inf"),
        }
        spreads[label] = spread_metric(boot)

    analyse("sample", sample_table, seeds[4])
    for j, (label, table) in enumerate(tables.items()):
        analyse(label, table, int(seeds[5]) + j)

    # --- constellation distances: sample vs each simulated hypothesis ----------
    # Under the null that the sample follows the hypothesis, the expected
    # squared distance between the two constellations at one n equals the
    # sum of both bootstrap variances, so the per-n normalised ratio is O(1).
    constellation_tests: dict[str, dict] = {}
    sample_by_n = {fv.n: fv.point() for fv in fvs["sample"]}
    sample_ns = [fv.n for fv in fvs["sample"]]

    def _boot_var(boot: np.ndarray, j: int) -> float:
        block = boot[:, j, :]
        block = block[~np.isnan(block).any(axis=1)]
        if block.shape[0] < 2:
            return float("nan")
        return float(np.trace(np.cov(block, rowvar=False)))

    for label in tables:
        hyp_ns = [fv.n for fv in fvs[label]]
        ratios, dists = [], []
        for fv in fvs[label]:
            if fv.n not in sample_by_n:
                continue
            delta = sample_by_n[fv.n] - fv.point()
            var = _boot_var(boots["sample"], sample_ns.index(fv.n)) + _boot_var(
                boots[label], hyp_ns.index(fv.n)
            )
            dists.append(float(np.linalg.norm(delta)))
            if np.isfinite(var) and var > 0:
                ratios.append(float(np.linalg.norm(delta) / np.sqrt(var)))
        constellation_tests[label] = {
            "mean_distance": float(np.mean(dists)) if dists else None,
            "sigma_ratio": float(np.mean(ratios)) if ratios else float("inf"),
        }

    # --- covariance comparisons -------------------------------------------------
    sample_cov = empirical_photon_covariance(samples)
    analytic = {
        kind: photon_covariance(output_state(kind, squeezing, program, loss))
        for kind in ("smsv", "thermal", "squashed")
    }
    covariance_tests: dict[str, dict] = {}
    for kind in HYPOTHESES:
        ref = analytic[kind] if kind in analytic else empirical_photon_covariance(sims[kind])
        frob, pearson = covariance_distance(sample_cov, ref)
        covariance_tests[kind] = {"frobenius": frob, "pearson": pearson}

    # --- verdict ------------------------------------------------------------------
    sample_ratio = plane_tests["sample"].get("sigma_ratio", float("inf"))
    sample_on_plane = bool(sample_ratio <= cfg.sigma_threshold)
    verdict = []
    for kind in HYPOTHESES:
        plane_mismatch = int(sample_on_plane != _ON_PLANE[kind])
        if kind == "smsv":
            geometry_flag = 0  # no device-scale sampler; geometry not informative
        else:
            cons = constellation_tests.get(kind, {})
            sigma_ratio = cons.get("sigma_ratio")
            geometry_off = sigma_ratio is not None and np.isfinite(sigma_ratio) and (
                sigma_ratio > cfg.sigma_threshold
            )
            spread_ratio = (
                spreads["sample"] / spreads[kind]
                if spreads.get(kind) and np.isfinite(spreads.get(kind, np.nan))
                else None
            )
            spread_off = spread_ratio is not None and not (
                1.0 / cfg.spread_ratio_limit <= spread_ratio <= cfg.spread_ratio_limit
            )
            geometry_flag = int(bool(geometry_off or spread_off))
        verdict.append(
            {
                "hypothesis": kind,
                "plane_mismatch": plane_mismatch,
                "geometry_mismatch": geometry_flag,
                "covariance_frobenius": covariance_tests[kind]["frobenius"],
            }
        )
    verdict.sort(
        key=lambda row: (
            row["plane_mismatch"],
            row["geometry_mismatch"],
            row["covariance_frobenius"],
        )
    )

    hypotheses_meta = {
        label: {
            "mean_photons": float(sim.totals().mean()),
            "seed": int(sim.seed),
            "feature_vectors": [asdict(fv) for fv in fvs[label]],
        }
        for label, sim in sims.items()
    }

    return ValidationReport(
        config=cfg,
        program_hash=program.content_hash(),
        certificate_label=certificate.label,
        sample_hash=_sample_hash(samples),
        sample_mean_photons=float(samples.totals().mean()),
        plane_normal=[float(x) for x in plane.normal],
        plane_offset=plane.offset,
        plane_rms=plane.rms_residual,
        plane_tests=plane_tests,
        line_tests=line_tests,
        spreads=spreads,
        constellation_tests=constellation_tests,
        covariance_tests=covariance_tests,
        hypotheses=hypotheses_meta,
        verdict=verdict,
        warnings=report_warnings,
    )
