"""Building modules ``M`` and sets ``A(M, f)`` with a surjective ``upsilon`` image and a small ``phi`` image."""

from hrlab.construction.certificate import (
    VerificationReport,
    dumps,
    load_certificate,
    seal,
    verify_certificate,
    write_certificate,
)
from hrlab.construction.extras import CertifiedSet, Composition, ManyForms, certify, compose, many_forms
from hrlab.construction.maps import (
    DiagonalMap,
    FlattenedMap,
    InductiveMap,
    StructuredMap,
    TableMap,
    ZeroMap,
)
from hrlab.construction.schedule import EpsilonSchedule, parse_rational
from hrlab.construction.steps import (
    SCHEMA,
    ConstructionInputs,
    LevelState,
    build_A,
    inductive_step,
    initial_step,
    run_construction,
    run_levels,
    sample_A,
    surjectivity_witness,
)

__all__ = [
    "SCHEMA",
    "CertifiedSet",
    "Composition",
    "ConstructionInputs",
    "DiagonalMap",
    "EpsilonSchedule",
    "FlattenedMap",
    "InductiveMap",
    "LevelState",
    "ManyForms",
    "StructuredMap",
    "TableMap",
    "VerificationReport",
    "ZeroMap",
    "build_A",
    "certify",
    "compose",
    "dumps",
    "inductive_step",
    "initial_step",
    "load_certificate",
    "many_forms",
    "parse_rational",
    "run_construction",
    "run_levels",
    "sample_A",
    "seal",
    "surjectivity_witness",
    "verify_certificate",
    "write_certificate",
]
