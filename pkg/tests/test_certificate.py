import copy
import json

import pytest

from hrlab.construction import (
    ConstructionInputs,
    EpsilonSchedule,
    dumps,
    load_certificate,
    run_construction,
    seal,
    verify_certificate,
    write_certificate,
)
from hrlab.construction.certificate import check_format, content_digest
from hrlab.errors import CertificateFormatError
from hrlab.forms import parse_form


@pytest.fixture(scope="module")
def toy_cert():
    inp = ConstructionInputs(
        (parse_form("t1-t2"),), (parse_form("t1+t2"),), EpsilonSchedule.uniform("9/10", 2),
        mode="toy", seed=11, sample_size=40, square_samples=100,
    )
    return seal(run_construction(inp))


@pytest.fixture(scope="module")
def linear_cert():
    inp = ConstructionInputs(
        (parse_form("t1-t2"),), (parse_form("3t1"),), EpsilonSchedule.uniform("1/2", 1),
        c=20, mode="exhaustive",
    )
    return seal(run_construction(inp))


def tampered(doc, edit):
    doc = copy.deepcopy(doc)
    doc.pop("digest")
    edit(doc)
    return seal(doc)


def failed(report):
    return {prop for prop, _ in report.failures}


def test_round_trip(tmp_path, toy_cert):
    path = tmp_path / "cert.json"
    write_certificate(toy_cert, path)
    again = load_certificate(path)
    assert again == toy_cert
    assert dumps(again) == path.read_text()
    report = verify_certificate(again)
    assert report.ok, report.failures
    assert report.stages[-1] == "rederivation"


def test_linear_certificate(linear_cert):
    assert verify_certificate(linear_cert).ok
    assert linear_cert["final"]["bound_holds"]


def test_serialization_is_stable(toy_cert):
    text = dumps(toy_cert)
    assert text.endswith("\n")
    assert json.loads(text) == toy_cert
    assert content_digest(toy_cert) == toy_cert["digest"]


def test_digest_detects_edits(toy_cert):
    doc = copy.deepcopy(toy_cert)
    doc["levels"][0]["cardinality"] = "36"
    assert failed(verify_certificate(doc)) == {"digest"}


@pytest.mark.parametrize("edit, prop", [
    (lambda d: d["levels"][0]["multipliers"].__setitem__(1, "4"), "multipliers"),
    (lambda d: d["levels"][0].__setitem__("cardinality", "36"), "cardinality"),
    (lambda d: d["levels"][1].__setitem__("pair_count", "2381"), "pair_count"),
    (lambda d: d["levels"][1]["covering"]["samples"][0].__setitem__(
        "wi", str(int(d["levels"][1]["covering"]["samples"][0]["wi"]) + 1)), "covering"),
    (lambda d: d["final"].__setitem__("c", "2"), "c"),
])
def test_tampered_field_is_named(toy_cert, edit, prop):
    report = verify_certificate(tampered(toy_cert, edit), rederive=False)
    assert not report.ok
    assert any(p.startswith(prop) for p in failed(report)), report.failures


def test_residue_flip_in_final_set(linear_cert):
    doc = tampered(linear_cert, lambda d: d["final"].__setitem__("a_size", str(int(d["final"]["a_size"]) - 1)))
    report = verify_certificate(doc)
    assert "a_size" in failed(report)


def test_rederivation_catches_seed(toy_cert):
    doc = tampered(toy_cert, lambda d: d["parameters"].__setitem__("seed", 12))
    assert verify_certificate(doc, rederive=False).ok
    assert failed(verify_certificate(doc)) == {"rederivation"}


def test_unknown_schema(toy_cert):
    doc = tampered(toy_cert, lambda d: d.__setitem__("schema", "hrlab-cert/99"))
    with pytest.raises(CertificateFormatError):
        verify_certificate(doc)


@pytest.mark.parametrize("doc", [[], {"schema": "hrlab-cert/1"}, "text"])
def test_structural_errors(doc):
    with pytest.raises(CertificateFormatError):
        check_format(doc)


def test_missing_record_key(toy_cert):
    doc = tampered(toy_cert, lambda d: d["levels"][1].pop("covering"))
    with pytest.raises(CertificateFormatError):
        verify_certificate(doc)


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(CertificateFormatError):
        load_certificate(path)
