import json

import numpy as np
import pytest

import loopgbs as lg
from loopgbs.cert import serialize_certificate


@pytest.fixture(scope="module")
def jan12():
    return lg.load_fixture("borealis-2023-01-12")


@pytest.fixture(scope="module")
def apr04():
    return lg.load_fixture("borealis-2023-04-04")


def test_jan12_values(jan12):
    assert jan12.common_efficiency == 0.392
    assert jan12.loop_efficiencies == (0.88, 0.836, 0.734)
    assert jan12.squeezing_for("low") == 0.669
    assert jan12.schmidt_number == 1.144
    assert len(jan12.relative_channel_efficiencies) == 16


def test_apr04_values(apr04):
    assert apr04.common_efficiency == 0.361
    assert apr04.loop_phases == (1.281, 0.671, 0.472)
    assert apr04.squeezing_for("medium") == 0.998


def test_advantage_fixture_parses_without_metadata():
    cert = lg.load_fixture("borealis-advantage-lowsq")
    assert cert.common_efficiency == 0.475
    assert cert.squeezing_for("low") == 0.533
    assert cert.finished_at is None
    # loop phases beyond pi are wrapped when used as static phases
    spec = cert.loop_spec()
    assert all(-np.pi < p <= np.pi for p in spec.static_phases)


def test_wrong_channel_arity_names_key(jan12):
    doc = jan12.to_dict()
    doc["relative_channel_efficiencies"] = doc["relative_channel_efficiencies"][:15]
    with pytest.raises(lg.IngestionError, match="relative_channel_efficiencies"):
        lg.parse_certificate(doc)


def test_missing_key_named(jan12):
    doc = jan12.to_dict()
    del doc["common_efficiency"]
    with pytest.raises(lg.IngestionError, match="common_efficiency"):
        lg.parse_certificate(doc)


def test_out_of_range_efficiency(jan12):
    doc = jan12.to_dict()
    doc["common_efficiency"] = 1.4
    with pytest.raises(lg.IngestionError, match="common_efficiency"):
        lg.parse_certificate(doc)


def test_squeezing_map_requires_low(jan12):
    doc = jan12.to_dict()
    doc["squeezing_parameters_mean"] = {"high": 1.0}
    with pytest.raises(lg.IngestionError, match="squeezing"):
        lg.parse_certificate(doc)


def test_parse_serialize_fixed_point(jan12):
    text = serialize_certificate(jan12)
    again = lg.parse_certificate(text)
    assert serialize_certificate(again) == text
    assert again.to_dict() == jan12.to_dict()


def test_unknown_keys_survive_roundtrip(jan12):
    doc = jan12.to_dict()
    doc["operator_note"] = "warm afternoon"
    cert = lg.parse_certificate(json.dumps(doc))
    assert cert.extra["operator_note"] == "warm afternoon"
    assert json.loads(serialize_certificate(cert))["operator_note"] == "warm afternoon"


def test_effective_efficiencies_all_unit():
    doc = {
        "loop_phases": [0.0, 0.0, 0.0],
        "common_efficiency": 1.0,
        "loop_efficiencies": [1.0, 1.0, 1.0],
        "squeezing_parameters_mean": {"low": 0.5},
        "relative_channel_efficiencies": [1.0] * 16,
    }
    cert = lg.parse_certificate(doc)
    prog = lg.uniform_program()
    assert np.allclose(lg.effective_efficiencies(cert, prog), 1.0)


def test_effective_efficiencies_jan12_product(jan12):
    prog = lg.uniform_program()
    eta = lg.effective_efficiencies(jan12, prog)
    base = 0.392 * 0.88 * 0.836 * 0.734
    assert eta[0] == pytest.approx(base * 0.925, rel=1e-12)
    assert eta[16] == pytest.approx(base * 0.925, rel=1e-12)
    assert eta[11] == pytest.approx(base * 1.0, rel=1e-12)
    assert eta.shape == (216,)
    assert np.all((eta > 0) & (eta <= 1))


def test_effective_efficiencies_monotone_in_common(jan12):
    prog = lg.uniform_program()
    doc = jan12.to_dict()
    doc["common_efficiency"] = 0.2
    lower = lg.parse_certificate(doc)
    assert np.all(
        lg.effective_efficiencies(lower, prog) < lg.effective_efficiencies(jan12, prog)
    )


def test_squeezing_off_and_missing(jan12):
    assert jan12.squeezing_for("off") == 0.0
    with pytest.raises(lg.IngestionError):
        jan12.squeezing_for("ultra")


def test_unknown_fixture_rejected():
    with pytest.raises(lg.IngestionError):
        lg.load_fixture("borealis-2024-01-01")


def test_loss_model_from_certificate(jan12):
    loss = jan12.to_loss_model(detectors_off=(3,))
    assert loss.common_efficiency == 0.392
    assert loss.detectors_off == (3,)
    eta = loss.per_mode_efficiencies(32)
    assert np.all(eta[np.arange(32) % 16 == 3] == 0)
