"""Device certificates: parsing, validation, loss-model construction, fixtures.

Certificates are JSON documents using the key names emitted by the
hardware's daily calibration, so recorded certificates can be dropped in
verbatim.  Unknown keys are preserved across a parse/serialize round trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .compiler import CircuitProgram, LoopSpec, wrap_angle
from .errors import IngestionError
from .gaussian import LossModel

N_LOOPS = 3
N_DETECTORS = 16

_KNOWN_KEYS = (
    "finished_at",
    "target",
    "loop_phases",
    "schmidt_number",
    "common_efficiency",
    "loop_efficiencies",
    "squeezing_parameters_mean",
    "relative_channel_efficiencies",
)


@dataclass
class DeviceCertificate:
    """Daily calibration record of the device.

    ``schmidt_number`` quantifies source multimodedness; it is parsed and
    surfaced but feeds no computation here.
    """

    loop_phases: tuple[float, ...]
    common_efficiency: float
    loop_efficiencies: tuple[float, ...]
    squeezing_parameters_mean: dict[str, float]
    relative_channel_efficiencies: tuple[float, ...]
    finished_at: str | None = None
    target: str | None = None
    schmidt_number: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        if self.finished_at:
            return f"{self.target or 'device'}@{self.finished_at}"
        return self.target or "device"

    def squeezing_for(self, preset: str) -> float:
        """Squeezing parameter for a preset label; "off" maps to 0."""
        if preset == "off":
            return 0.0
        try:
            return float(self.squeezing_parameters_mean[preset])
        except KeyError:
            raise IngestionError(
                f"certificate has no squeezing preset {preset!r} "
                f"(has {sorted(self.squeezing_parameters_mean)})"
            ) from None

    def to_loss_model(self, detectors_off: tuple[int, ...] = ()) -> LossModel:
        return LossModel(
            common_efficiency=self.common_efficiency,
            loop_efficiencies=self.loop_efficiencies,
            channel_efficiencies=self.relative_channel_efficiencies,
            detectors_off=tuple(detectors_off),
        )

    def loop_spec(self, delays: tuple[int, ...] = (1, 6, 36)) -> LoopSpec:
        """Loop geometry with this certificate's static phases, wrapped into
        (-pi, pi]."""
        return LoopSpec(
            delays=delays,
            static_phases=tuple(wrap_angle(p) for p in self.loop_phases),
        )

    def to_dict(self) -> dict:
        doc = {
            "loop_phases": list(self.loop_phases),
            "common_efficiency": self.common_efficiency,
            "loop_efficiencies": list(self.loop_efficiencies),
            "squeezing_parameters_mean": dict(self.squeezing_parameters_mean),
            "relative_channel_efficiencies": list(self.relative_channel_efficiencies),
        }
        if self.finished_at is not None:
            doc["finished_at"] = self.finished_at
        if self.target is not None:
            doc["target"] = self.target
        if self.schmidt_number is not None:
            doc["schmidt_number"] = self.schmidt_number
        doc.update(self.extra)
        return doc


def _require(doc: dict, key: str):
    if key not in doc:
        raise IngestionError(f"certificate is missing key {key!r}")
    return doc[key]


def _float_list(doc: dict, key: str, arity: int) -> tuple[float, ...]:
    raw = _require(doc, key)
    try:
        values = tuple(float(v) for v in raw)
    except (TypeError, ValueError):
        raise IngestionError(f"certificate key {key!r} must be a list of reals") from None
    if len(values) != arity:
        raise IngestionError(f"certificate key {key!r} needs {arity} values, got {len(values)}")
    return values


def parse_certificate(document) -> DeviceCertificate:
    """Parse and range-validate a certificate from JSON text, a dict, or a path."""
    if isinstance(document, Path):
        document = document.read_text()
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise IngestionError(f"certificate is not valid JSON: {exc}") from exc
    elif isinstance(document, dict):
        doc = dict(document)
    else:
        raise IngestionError("certificate must be JSON text, a dict, or a path")

    loop_phases = _float_list(doc, "loop_phases", N_LOOPS)
    common = float(_require(doc, "common_efficiency"))
    if not (0.0 < common <= 1.0):
        raise IngestionError(f"key 'common_efficiency' out of range (0, 1]: {common}")
    loops = _float_list(doc, "loop_efficiencies", N_LOOPS)
    if any(not (0.0 < e <= 1.0) for e in loops):
        raise IngestionError("key 'loop_efficiencies' has values outside (0, 1]")
    channels = _float_list(doc, "relative_channel_efficiencies", N_DETECTORS)
    if any(not (0.0 < e <= 1.0) for e in channels):
        raise IngestionError("key 'relative_channel_efficiencies' has values outside (0, 1]")
    squeezing_raw = _require(doc, "squeezing_parameters_mean")
    if not isinstance(squeezing_raw, dict) or "low" not in squeezing_raw:
        raise IngestionError("key 'squeezing_parameters_mean' must map labels and include 'low'")
    squeezing = {str(k): float(v) for k, v in squeezing_raw.items()}
    if any(v < 0 for v in squeezing.values()):
        raise IngestionError("key 'squeezing_parameters_mean' has negative values")

    schmidt = doc.get("schmidt_number")
    extra = {k: v for k, v in doc.items() if k not in _KNOWN_KEYS}
    return DeviceCertificate(
        loop_phases=loop_phases,
        common_efficiency=common,
        loop_efficiencies=loops,
        squeezing_parameters_mean=squeezing,
        relative_channel_efficiencies=channels,
        finished_at=doc.get("finished_at"),
        target=doc.get("target"),
        schmidt_number=None if schmidt is None else float(schmidt),
        extra=extra,
    )


def serialize_certificate(cert: DeviceCertificate) -> str:
    return json.dumps(cert.to_dict(), sort_keys=True, indent=1)


def effective_efficiencies(cert: DeviceCertificate, program: CircuitProgram) -> np.ndarray:
    """Raw per-logical-mode efficiency product from the certificate.

    eta_i = common * prod(loop_efficiencies) * channel[i mod 16], taking the
    certificate's channel values at face value.  This is the certificate
    bookkeeping quantity; simulations compose losses through LossModel,
    which treats the channel values as a relative detector response.
    """
    channels = np.asarray(cert.relative_channel_efficiencies)
    base = cert.common_efficiency * float(np.prod(cert.loop_efficiencies))
    idx = np.arange(program.n_logical_modes) % len(channels)
    return base * channels[idx]


FIXTURE_NAMES = (
    "borealis-2023-01-12",
    "borealis-2023-04-04",
    "borealis-advantage-lowsq",
)


def load_fixture(name: str) -> DeviceCertificate:
    """Load one of the bundled calibration fixtures by name."""
    if name not in FIXTURE_NAMES:
        raise IngestionError(f"unknown fixture {name!r}; have {FIXTURE_NAMES}")
    text = resources.files("loopgbs.fixtures").joinpath(f"{name}.json").read_text()
    return parse_certificate(text)
