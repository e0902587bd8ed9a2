"""Batch command-line front door.

Commands: compile, sample, orbits, correlators, validate, report.
Exit codes: 0 success, 2 input error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cert import load_fixture, parse_certificate
from .compiler import (
    CircuitProgram,
    compile_unitary,
    connectivity_profile,
    matrix_to_csv,
    random_program,
    truncate_to_logical,
    uniform_program,
)
from .errors import InputError, ResourceError
from .gaussian import photon_covariance
from .orbits import (
    OrbitTable,
    feature_vectors,
    feature_vectors_to_csv,
    orbit_histogram,
    orbit_histogram_to_csv,
)
from .pipeline import output_state
from .samplers import SampleSet, empirical_photon_covariance, sample_hypothesis
from .validation import ValidationConfig, covariance_distance, validate


def _load_program(args) -> CircuitProgram:
    if getattr(args, "random_program", False) or getattr(args, "program", None) is None:
        cert = _load_certificate(args)
        spec = cert.loop_spec()
        if getattr(args, "random_program", False):
            return random_program(args.seed, loop_spec=spec)
        return uniform_program(loop_spec=spec)
    return CircuitProgram.from_json(Path(args.program).read_text())


def _load_certificate(args):
    ref = getattr(args, "certificate", None)
    if ref is None:
        raise InputError("a certificate is required (path or fixture name)")
    path = Path(ref)
    if path.exists():
        return parse_certificate(path)
    return load_fixture(ref)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    print(f"wrote {path}")


def cmd_compile(args) -> int:
    program = CircuitProgram.from_json(Path(args.program).read_text())
    out = _outdir(args)
    matrix = compile_unitary(program)
    logical = truncate_to_logical(matrix, program)
    profile = connectivity_profile(matrix)
    _write(out / "transfer_physical.csv", matrix_to_csv(matrix))
    _write(out / "transfer_logical.csv", matrix_to_csv(logical))
    profile_csv = "offset,mean_modulus\n" + "\n".join(
        f"{k},{v!r}" for k, v in enumerate(profile)
    )
    _write(out / "connectivity_profile.csv", profile_csv + "\n")
    from .plots import connectivity_figure

    connectivity_figure(profile, out / "connectivity_profile.png",
                        delays=program.loop_spec.delays)
    print(f"wrote {out / 'connectivity_profile.png'}")
    meta = {
        "version": __version__,
        "program_hash": program.content_hash(),
        "lossless": matrix.lossless,
        "max_singular_value": matrix.max_singular_value(),
    }
    _write(out / "compile_meta.json", json.dumps(meta, sort_keys=True, indent=1))
    return 0


def cmd_sample(args) -> int:
    cert = _load_certificate(args)
    program = _load_program(args)
    squeezing = cert.squeezing_for(args.squeezing)
    loss = cert.to_loss_model()
    samples = sample_hypothesis(
        args.hypothesis, program, loss, squeezing, args.shots, args.seed,
        pnr_cutoff=args.pnr_cutoff, certificate_label=cert.label,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    samples.save(out)
    print(f"wrote {out}")
    print(f"mean detected photons: {samples.totals().mean():.3f}")
    return 0


def cmd_orbits(args) -> int:
    samples = SampleSet.load(args.samples)
    out = _outdir(args)
    table = OrbitTable.from_samples(samples)
    vecs = feature_vectors(table, args.n_min, args.n_max, args.min_support)
    _write(out / "feature_vectors.csv", feature_vectors_to_csv(vecs))
    totals = samples.totals()
    modal_n = args.n if args.n is not None else int(np.bincount(totals).argmax())
    hist = orbit_histogram(samples, modal_n)
    _write(out / f"orbit_histogram_n{modal_n}.csv", orbit_histogram_to_csv(hist))
    from .plots import orbit_histogram_figure, photon_number_figure

    orbit_histogram_figure(hist, modal_n, out / f"orbit_histogram_n{modal_n}.png")
    photon_number_figure({samples.hypothesis or "sample": totals}, out / "photon_numbers.png")
    print(f"wrote figures under {out}")
    return 0


def cmd_correlators(args) -> int:
    samples = SampleSet.load(args.samples)
    out = _outdir(args)
    cov = empirical_photon_covariance(samples)
    np.savetxt(out / "sample_covariance.csv", cov, delimiter=",")
    print(f"wrote {out / 'sample_covariance.csv'}")
    grids = {"sample": np.abs(cov)}
    stats = {}
    if args.certificate and args.program is not None or args.certificate:
        cert = _load_certificate(args)
        program = _load_program(args)
        squeezing = cert.squeezing_for(args.squeezing)
        loss = cert.to_loss_model()
        for kind in ("smsv", "thermal", "squashed"):
            ana = photon_covariance(output_state(kind, squeezing, program, loss))
            np.savetxt(out / f"analytic_covariance_{kind}.csv", ana, delimiter=",")
            grids[kind] = np.abs(ana)
            frob, pearson = covariance_distance(cov, ana)
            stats[kind] = {"frobenius": frob, "pearson": pearson}
        _write(out / "covariance_distances.json", json.dumps(stats, sort_keys=True, indent=1))
    from .plots import covariance_grid_figure

    covariance_grid_figure(grids, out / "covariance_grid.png")
    print(f"wrote {out / 'covariance_grid.png'}")
    return 0


def cmd_validate(args) -> int:
    samples = SampleSet.load(args.samples)
    cert = _load_certificate(args)
    program = _load_program(args)
    cfg = ValidationConfig(
        seed=args.seed,
        shots=args.shots,
        n_min=args.n_min,
        n_max=args.n_max,
        pnr_cutoff=args.pnr_cutoff,
        squeezing_label=args.squeezing,
        threads=args.threads,
    )
    report = validate(samples, program, cert, cfg)
    out = _outdir(args)
    _write(out / "report.json", report.to_json())
    _render_report_files(report, samples, out)
    top = report.verdict[0]["hypothesis"]
    print(f"verdict: {top}  (ranking: {[v['hypothesis'] for v in report.verdict]})")
    return 0


def _render_report_files(report, samples, out: Path) -> None:
    from .plots import orbit_scatter_figure

    scatter = {}
    rows = ["label,n,o1,o2,o3,support"]
    sample_pts = []
    table = OrbitTable.from_samples(samples)
    for fv in feature_vectors(table, report.config.n_min, report.config.n_max,
                              report.config.min_support):
        sample_pts.append(fv.point())
        rows.append(f"sample,{fv.n},{fv.o1!r},{fv.o2!r},{fv.o3!r},{fv.support}")
    scatter["sample"] = np.asarray(sample_pts)
    for label, meta in report.hypotheses.items():
        pts = []
        for fv in meta["feature_vectors"]:
            pts.append([fv["o1"], fv["o2"], fv["o3"]])
            rows.append(
                f"{label},{fv['n']},{fv['o1']!r},{fv['o2']!r},{fv['o3']!r},{fv['support']}"
            )
        scatter[label] = np.asarray(pts)
    _write(out / "orbit_scatter.csv", "\n".join(rows) + "\n")
    orbit_scatter_figure(scatter, out / "orbit_scatter.png")
    print(f"wrote {out / 'orbit_scatter.png'}")


def cmd_report(args) -> int:
    report_path = Path(args.report)
    doc = json.loads(report_path.read_text())
    out = _outdir(args)
    from .plots import orbit_scatter_figure

    scatter = {}
    for label, meta in doc["hypotheses"].items():
        pts = [[fv["o1"], fv["o2"], fv["o3"]] for fv in meta["feature_vectors"]]
        scatter[label] = np.asarray(pts)
    orbit_scatter_figure(scatter, out / "orbit_scatter.png")
    print(f"wrote {out / 'orbit_scatter.png'}")
    print(f"verdict: {doc['verdict'][0]['hypothesis']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopgbs",
        description="simulate and validate loop-based time-bin Gaussian boson samplers",
    )
    parser.add_argument("--version", action="version", version=f"loopgbs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--seed", type=int, default=7)
        p.add_argument("--shots", type=int, default=250_000)
        p.add_argument("--squeezing", default="low",
                       choices=["low", "medium", "high", "off"])
        p.add_argument("--pnr-cutoff", type=int, default=7, dest="pnr_cutoff")
        p.add_argument("--threads", type=int, default=1)
        if needs_out:
            p.add_argument("--out", required=True)

    p = sub.add_parser("compile", help="compile a program to its transfer matrix")
    p.add_argument("--program", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("sample", help="draw photon-count samples under a hypothesis")
    p.add_argument("--hypothesis", required=True,
                   choices=["thermal", "coherent", "squashed", "distinguishable", "smsv"])
    p.add_argument("--program")
    p.add_argument("--random-program", action="store_true", dest="random_program")
    p.add_argument("--certificate", required=True)
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("orbits", help="orbit histograms and feature vectors of a sample file")
    p.add_argument("--samples", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--n-min", type=int, default=18, dest="n_min")
    p.add_argument("--n-max", type=int, default=32, dest="n_max")
    p.add_argument("--min-support", type=int, default=100, dest="min_support")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_orbits)

    p = sub.add_parser("correlators", help="two-point correlator matrices and comparisons")
    p.add_argument("--samples", required=True)
    p.add_argument("--program")
    p.add_argument("--certificate")
    p.add_argument("--squeezing", default="low",
                   choices=["low", "medium", "high", "off"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_correlators)

    p = sub.add_parser("validate", help="run the full validation battery on a sample file")
    p.add_argument("--samples", required=True)
    p.add_argument("--program")
    p.add_argument("--random-program", action="store_true", dest="random_program")
    p.add_argument("--certificate", required=True)
    p.add_argument("--n-min", type=int, default=18, dest="n_min")
    p.add_argument("--n-max", type=int, default=32, dest="n_max")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="re-render figures from a validation report")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
