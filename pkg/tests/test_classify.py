import numpy as np
import pytest

from app.core.exceptions import InvalidInputError, SelfMapScreenError
from app.schemas.symbol_schema import ExampleSpec
from app.services.carleson import MonteCarloConfig
from app.services.classify import (
    analyze_pair,
    classify_boundedness,
    classify_compactness,
    compactness_from_run,
    jacobian_check,
    oracle_evidence,
    run_boundedness,
)
from app.services.contact import ContactRecord, find_contacts
from app.services.example_library import build_example
from app.services.polysym import symbol_from_expressions


def _pairs(report):
    return [pair for evidence in report.contacts for pair in evidence.pairs]


# ---------------------------------------------------------------------------
# analyze_pair
# ---------------------------------------------------------------------------
def test_average_pair_is_dependent_with_full_sum(averaging3):
    record = find_contacts(averaging3, grid_n=32)[0]
    pa = analyze_pair(averaging3, record, (1, 2))
    assert not pa.independent
    assert pa.kappa == pytest.approx((1.0, 1.0))
    assert pa.s == 3
    assert pa.case == "b"
    assert np.allclose(pa.s_form, np.eye(3) / 3)


def test_monomial_pair_has_rank_one_sum(triple_monomial):
    record = find_contacts(triple_monomial, grid_n=16)[0]
    pa = analyze_pair(triple_monomial, record, (1, 2))
    assert pa.s == 1
    assert pa.r == (0, 0)
    assert pa.case == "violation"
    assert "s=1" in pa.violation


def test_independent_pair_is_case_a():
    s = build_example("compact3-avg")
    record = find_contacts(s, grid_n=32)[0]
    pa = analyze_pair(s, record, (1, 2))
    assert pa.independent
    assert pa.independence_margin > 1e-3
    assert pa.case == "a"
    assert pa.r is None


def test_degenerate_gradient_is_invalid():
    s = symbol_from_expressions(["2z1 - z1^2", "z2", "0"], 3)
    record = ContactRecord(
        xi=(0.0, 0.0, 0.0),
        index_set=(1, 2),
        eta=(1.0 + 0j, 1.0 + 0j),
        residuals=(0.0, 0.0),
        component_dim=0,
        cluster=0,
    )
    with pytest.raises(InvalidInputError) as info:
        analyze_pair(s, record, (1, 2))
    assert info.value.diagnostics["pair"] == [1, 2]


def test_pair_must_lie_in_index_set(averaging3):
    record = find_contacts(averaging3, grid_n=32)[0]
    with pytest.raises(ValueError):
        analyze_pair(averaging3, record, (1, 3))
    with pytest.raises(ValueError):
        analyze_pair(averaging3, record, (1, 2), kappa_scale=0.0)


def test_jacobian_of_identity_and_repeated_monomial(identity3):
    record = find_contacts(identity3, grid_n=16)[0]
    check = jacobian_check(identity3, record)
    assert check.ratio == pytest.approx(1.0)
    assert not check.violation

    repeated = symbol_from_expressions(["z1*z2", "z1*z2"], 2)
    check = jacobian_check(repeated, find_contacts(repeated, grid_n=16)[0])
    assert check.ratio == pytest.approx(0.0, abs=1e-12)
    assert check.violation


# ---------------------------------------------------------------------------
# Limitação
# ---------------------------------------------------------------------------
@pytest.mark.parametrize(
    "name, params, expected",
    [
        ("averaging3", (), "Bounded"),
        ("identity", (), "Bounded"),
        ("triple-monomial", (), "Unbounded"),
        ("compact3-pair", (), "Bounded"),
        ("compact3-avg", (), "Bounded"),
        ("ex73", (0.01, 0.01, 0.01), "Bounded"),
        ("ex73", (0.01, -0.01, 0.0), "Unbounded"),
        ("ex73", (0.01, 0.0, 0.0), "Unbounded"),
    ],
)
def test_library_boundedness(name, params, expected, settings):
    s = build_example(ExampleSpec(name=name, params=params))
    report = classify_boundedness(s, settings)
    assert report.verdict == expected
    assert report.dimension == 3
    assert report.contacts
    if expected == "Unbounded":
        assert report.violations


def test_average_evidence(averaging3, settings):
    report = classify_boundedness(averaging3, settings)
    pairs = _pairs(report)
    assert pairs
    assert {p.case for p in pairs} == {"b"}
    assert {p.s for p in pairs} == {3}
    assert report.tolerances.tol_sig == settings.TOL_SIG
    assert any("amostras" in c for c in report.caveats)


def test_identity_jacobian_evidence(identity3, settings):
    report = classify_boundedness(identity3, settings)
    for evidence in report.contacts:
        assert evidence.jacobian is not None
        assert evidence.jacobian.ratio == pytest.approx(1.0)
        assert {p.case for p in evidence.pairs} == {"a"}


def test_triple_monomial_violation_detail(triple_monomial, settings):
    report = classify_boundedness(triple_monomial, settings)
    pair = _pairs(report)[0]
    assert pair.s == 1
    assert pair.r == [0, 0]
    assert pair.case == "violation"


@pytest.mark.parametrize("eps", [0.0, 0.01, -0.01])
def test_curve_family_is_unbounded_for_every_parameter(eps, settings):
    s = build_example(ExampleSpec(name="ex71", params=(eps,)))
    report = classify_boundedness(s, settings)
    assert report.verdict == "Unbounded"
    assert any(p.s == 2 and p.r == [0, 0] for p in _pairs(report))
    assert any("s = 2" in note for note in report.divergences)


def test_bidisc_repeated_monomial_is_unbounded(settings):
    s = symbol_from_expressions(["z1*z2", "z1*z2"], 2)
    report = classify_boundedness(s, settings)
    assert report.verdict == "Unbounded"
    assert all(e.jacobian is not None and e.jacobian.violation for e in report.contacts)


def test_bidisc_checks_skip_pairs(bidisc_monomial, settings):
    report = classify_boundedness(bidisc_monomial, settings)
    assert report.verdict == "Bounded"
    assert all(not e.pairs for e in report.contacts)


def test_interior_symbol_has_no_contacts(interior_symbol, settings):
    report = classify_boundedness(interior_symbol, settings)
    assert report.verdict == "Bounded"
    assert report.contacts == []


def test_screen_failure_raises(settings):
    s = symbol_from_expressions(["z1 + z2", "0"], 2)
    with pytest.raises(SelfMapScreenError) as info:
        classify_boundedness(s, settings)
    assert not info.value.report.passed


def test_report_is_deterministic(averaging3, settings):
    first = classify_boundedness(averaging3, settings).model_dump_json()
    second = classify_boundedness(averaging3, settings).model_dump_json()
    assert first == second


# ---------------------------------------------------------------------------
# Compacidade
# ---------------------------------------------------------------------------
@pytest.mark.parametrize(
    "name, expected",
    [
        ("compact2-avg", "Compact"),
        ("compact2-monomial", "NotCompact"),
        ("compact3-pair", "NotCompact"),
        ("compact3-avg", "Compact"),
        ("averaging3", "NotCompact"),
        ("triple-monomial", "NotCompact"),
        ("identity", "NotCompact"),
    ],
)
def test_library_compactness(name, expected, settings):
    report = classify_compactness(build_example(name), settings=settings)
    assert report.verdict == expected


def test_compactness_triggers(settings):
    report = classify_compactness(build_example("compact2-monomial"), settings=settings)
    assert report.boundedness_verdict == "Bounded"
    assert "monomial-component" in {t.kind for t in report.triggers}

    report = classify_compactness(build_example("compact3-pair"), settings=settings)
    assert report.boundedness_verdict == "Bounded"
    assert "variable-drop" in {t.kind for t in report.triggers}

    report = classify_compactness(build_example("averaging3"), settings=settings)
    assert "dependent-pair" in {t.kind for t in report.triggers}

    report = classify_compactness(build_example("identity"), settings=settings)
    assert "full-contact" in {t.kind for t in report.triggers}


def test_unbounded_is_not_compact(triple_monomial, settings):
    report = classify_compactness(triple_monomial, settings=settings)
    assert report.boundedness_verdict == "Unbounded"
    assert report.triggers == []
    assert report.notes


def test_sufficient_checks_recorded_when_compact(settings):
    report = classify_compactness(build_example("compact3-avg"), settings=settings)
    assert report.checks
    assert all(c.passed for c in report.checks)
    assert report.oracle is None


def test_compactness_reuses_boundedness_run(interior_symbol, settings):
    run = run_boundedness(interior_symbol, settings)
    report = compactness_from_run(run, "advisory", settings)
    assert report.verdict == "Compact"
    assert report.oracle is None


def test_oracle_evidence_uses_configured_sampler(settings):
    run = run_boundedness(build_example("compact3-avg"), settings)
    analysis = run.analyses[0]
    mc = MonteCarloConfig(samples=20_000, seed=3, chunk=10_000, workers=2, importance=False)
    evidence = oracle_evidence(run.symbol, analysis, mc)
    assert evidence.sampler == "plain"
    assert evidence.budget == len(analysis.record.index_set)
    assert evidence.constrained == list(analysis.record.index_set)
