import io
import math
from dataclasses import replace

import numpy as np
import pytest

from app.schemas.symbol_schema import ExampleSpec
from app.services.carleson import (
    BoxSpec,
    ImportanceRegion,
    MonteCarloConfig,
    annulus_area,
    calibrate_set,
    designate_witness,
    free_directions,
    geometric_deltas,
    hyperbolic_area,
    importance_region,
    integer_direction,
    ratio_trend,
    scaling_fit,
    scaling_report,
    torus_measure,
    weighted_volume,
    write_scaling_csv,
)
from app.services.classify import classify_boundedness
from app.services.example_library import build_example


def _arc_fraction(delta: float) -> float:
    """sigma_1({theta : |e^{i theta} - 1| <= delta})."""
    return 2.0 * math.asin(delta / 2.0) / math.pi


# ---------------------------------------------------------------------------
# Caixas e configuração
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("radius", [0.0, 2.5, -0.1])
def test_box_rejects_radius_outside_range(radius):
    with pytest.raises(ValueError):
        BoxSpec(eta=(0.0, 0.0), radii=(radius, 2.0))


def test_box_uniform_marks_free_components():
    box = BoxSpec.uniform((0.0, 0.0, 0.0), (1, 3), 0.05)
    assert box.radii == (0.05, 2.0, 0.05)
    assert box.constrained == (1, 3)


def test_window_levels_combine_angle_and_radius():
    box = BoxSpec(eta=(0.0,), radii=(0.2,), kind="window", radial_radii=(0.2,))
    w = {1: np.array([0.9, 0.9 * np.exp(0.3j), 0.7])}
    assert box.levels(w) == pytest.approx([0.5, 1.5, 1.5])
    with pytest.raises(ValueError):
        BoxSpec(eta=(0.0,), radii=(0.2,), radial_radii=(0.2,))


def test_monte_carlo_config_validation(settings):
    with pytest.raises(ValueError):
        MonteCarloConfig(seed=-1)
    cfg = MonteCarloConfig.from_settings(settings, samples=20_000)
    assert cfg.samples == 20_000
    assert cfg.seed == settings.MC_SEED


# ---------------------------------------------------------------------------
# Regiões de importância
# ---------------------------------------------------------------------------
def test_free_directions_of_monomial(triple_monomial):
    free = free_directions(triple_monomial, (1, 2))
    assert free.shape == (3, 2)
    assert np.allclose(np.ones(3) @ free, 0.0)


def test_integer_direction():
    assert integer_direction(np.array([1.0, -1.0]) / math.sqrt(2)) == pytest.approx([1.0, -1.0])
    assert integer_direction(np.array([1.0, 0.5, 0.0])) == pytest.approx([2.0, 1.0, 0.0])
    assert integer_direction(np.array([1.0, math.sqrt(2)])) is None


def test_importance_region_shapes(identity3, bidisc_monomial, triple_monomial):
    box = BoxSpec.uniform((0.0, 0.0, 0.0), (1, 2, 3), 1e-3)
    region = importance_region(identity3, box, np.zeros(3))
    assert region.periodic_axes == 0
    assert region.half_widths == pytest.approx([1.0, 1.0, 1.0])

    box = BoxSpec.uniform((0.0, 0.0), (1,), 1e-3)
    region = importance_region(bidisc_monomial, box, np.zeros(2))
    assert region.periodic_axes == 1
    assert region.half_widths[0] == pytest.approx(math.pi * math.sqrt(2))

    box = BoxSpec.uniform((0.0, 0.0, 0.0), (1, 2), 1e-3)
    assert importance_region(triple_monomial, box, np.zeros(3)) is None


# ---------------------------------------------------------------------------
# Medidas no toro
# ---------------------------------------------------------------------------
def test_unconstrained_box_has_full_measure(identity3, small_mc):
    est = torus_measure(identity3, BoxSpec(eta=(0.0,) * 3, radii=(2.0,) * 3), small_mc)
    assert est.mean == 1.0
    assert est.stderr == 0.0


def test_too_few_samples(identity3):
    box = BoxSpec.uniform((0.0,) * 3, (1,), 0.1)
    with pytest.raises(ValueError):
        torus_measure(identity3, box, MonteCarloConfig(samples=5_000))


def test_identity_box_with_explicit_region(identity3, small_mc):
    delta = 0.1
    box = BoxSpec.uniform((0.0,) * 3, (1, 2, 3), delta)
    region = ImportanceRegion(anchor=np.zeros(3), frame=np.eye(3), half_widths=np.full(3, 0.2))
    est = torus_measure(identity3, box, small_mc, region=region)
    assert est.sampler == "importance"
    exact = _arc_fraction(delta) ** 3
    assert abs(est.mean - exact) <= 4 * est.stderr


def test_monomial_preimage_plain_sampler(bidisc_monomial, small_mc):
    delta = 0.01
    box = BoxSpec.uniform((0.0, 0.0), (1,), delta)
    est = torus_measure(bidisc_monomial, box, replace(small_mc, importance=False))
    assert est.sampler == "plain"
    assert est.mean == pytest.approx(3.18e-3, rel=0.15)
    assert abs(est.mean - _arc_fraction(delta)) <= 4 * est.stderr


def test_result_independent_of_worker_count(averaging3, small_mc):
    box = BoxSpec.uniform((0.0,) * 3, (1, 2), 0.1)
    one = torus_measure(averaging3, box, replace(small_mc, workers=1), anchor=np.zeros(3))
    four = torus_measure(averaging3, box, replace(small_mc, workers=4), anchor=np.zeros(3))
    assert one.hits == four.hits
    assert one.mean == four.mean


def test_same_seed_reproduces(bidisc_monomial, small_mc):
    box = BoxSpec.uniform((0.0, 0.0), (1,), 0.05)
    cfg = replace(small_mc, importance=False)
    assert torus_measure(bidisc_monomial, box, cfg).hits == torus_measure(bidisc_monomial, box, cfg).hits
    other = torus_measure(bidisc_monomial, box, replace(cfg, seed=8))
    assert other.seed == 8


def test_stderr_scales_with_inverse_root_n(bidisc_monomial, small_mc):
    box = BoxSpec.uniform((0.0, 0.0), (1,), 0.05)
    cfg = replace(small_mc, importance=False)
    small = torus_measure(bidisc_monomial, box, replace(cfg, samples=50_000))
    large = torus_measure(bidisc_monomial, box, replace(cfg, samples=200_000))
    assert small.stderr / large.stderr == pytest.approx(2.0, rel=0.15)


def test_measure_monotone_in_radius(averaging3, small_mc):
    cfg = replace(small_mc, importance=False)
    inner = torus_measure(averaging3, BoxSpec.uniform((0.0,) * 3, (1, 2), 0.05), cfg)
    outer = torus_measure(averaging3, BoxSpec.uniform((0.0,) * 3, (1, 2), 0.1), cfg)
    assert inner.hits <= outer.hits


@pytest.mark.parametrize("beta, radial_mass", [(0.0, 0.36), (-0.5, 0.6)])
def test_weighted_volume_of_window(identity3, small_mc, beta, radial_mass):
    box = BoxSpec(
        eta=(0.0, 0.0, 0.0),
        radii=(0.2, 2.0, 2.0),
        kind="window",
        radial_radii=(0.2, 2.0, 2.0),
    )
    est = weighted_volume(identity3, beta, box, small_mc)
    exact = radial_mass * 0.2 / math.pi
    assert abs(est.mean - exact) <= 4 * est.stderr


def test_weighted_volume_beta_range(identity3, small_mc):
    box = BoxSpec.uniform((0.0,) * 3, (1,), 0.1)
    with pytest.raises(ValueError):
        weighted_volume(identity3, -1.0, box, small_mc)
    with pytest.raises(ValueError):
        weighted_volume(identity3, 0.5, box, small_mc)


# ---------------------------------------------------------------------------
# Ajuste de escala
# ---------------------------------------------------------------------------
def test_delta_grid_validation(bidisc_monomial, small_mc):
    with pytest.raises(ValueError):
        scaling_fit(bidisc_monomial, (0.0, 0.0), (1,), geometric_deltas(1e-3, 1e-1, 4), small_mc)
    with pytest.raises(ValueError):
        scaling_fit(bidisc_monomial, (0.0, 0.0), (1,), [1e-3, 2e-3, 5e-3, 1e-2, 5e-2], small_mc)
    with pytest.raises(ValueError):
        scaling_fit(bidisc_monomial, (0.0, 0.0), (1,), geometric_deltas(1e-6, 1e-2, 5), small_mc)
    with pytest.raises(ValueError):
        scaling_fit(bidisc_monomial, (0.0, 0.0), (3,), geometric_deltas(1e-3, 1e-1, 5), small_mc)


def test_monomial_fit_on_bidisc(bidisc_monomial, small_mc):
    fit = scaling_fit(
        bidisc_monomial, (0.0, 0.0), (1,), geometric_deltas(1e-3, 1e-1, 5), small_mc
    )
    assert fit.budget == 1
    assert fit.slope == pytest.approx(1.0, abs=0.05)
    assert ratio_trend(fit) == pytest.approx(fit.slope - 1.0)
    for delta, est in zip(fit.deltas, fit.estimates):
        assert est.sampler == "importance"
        assert abs(est.mean - _arc_fraction(delta)) <= 4 * est.stderr

    report = scaling_report(fit, bidisc_monomial)
    assert report.budget == 1
    assert [e.delta for e in report.estimates] == list(fit.deltas)

    handle = io.StringIO()
    write_scaling_csv(fit, handle)
    lines = handle.getvalue().splitlines()
    assert lines[0] == "delta,measure,stderr,samples,budget,ratio"
    assert len(lines) == 6


def test_witness_designation(triple_monomial, interior_symbol, settings):
    report = classify_boundedness(triple_monomial, settings)
    anchor, constrained = designate_witness(report)
    assert constrained == [1, 2]
    assert len(anchor) == 3
    assert designate_witness(classify_boundedness(interior_symbol, settings)) is None


@pytest.mark.slow
@pytest.mark.parametrize(
    "name, params, constrained, slope, tolerance",
    [
        ("triple-monomial", (), (1, 2), 1.0, 0.1),
        ("identity", (), (1, 2, 3), 3.0, 0.1),
        ("averaging3", (), (1, 2), 2.0, 0.15),
        ("ex71", (0.01,), (1, 2), 1.5, 0.15),
    ],
)
def test_library_scaling_exponents(name, params, constrained, slope, tolerance):
    s = build_example(ExampleSpec(name=name, params=params))
    cfg = MonteCarloConfig(samples=1_000_000, seed=0, workers=4)
    fit = scaling_fit(
        s, (0.0, 0.0, 0.0), constrained, geometric_deltas(1e-4, 1e-2, 9), cfg, check_coverage=True
    )
    assert fit.slope == pytest.approx(slope, abs=tolerance)
    if slope < len(constrained):
        assert fit.verdict_hint == "blow-up"
    assert "coverage-mismatch" not in fit.flags


# ---------------------------------------------------------------------------
# Calibração
# ---------------------------------------------------------------------------
def test_annulus_reference():
    assert annulus_area(-0.5, 0.01) == 0.0
    assert annulus_area(0.005, 0.01) == pytest.approx(math.pi * 0.015)
    assert annulus_area(0.5, 0.01) == pytest.approx(2 * math.pi * 0.01)


def test_hyperbolic_reference_above_lower_bound():
    for delta in (1e-2, 1e-3, 1e-4):
        assert hyperbolic_area(delta) >= delta * math.log(1 / delta) / 6


@pytest.mark.parametrize(
    "set_id, params",
    [("L33", None), ("L34", {"a": 1.0, "b": 2.0}), ("L35", {"a": 0.5})],
)
def test_calibration_sets(set_id, params, small_mc):
    entry = calibrate_set(set_id, params, 0.01, small_mc)
    assert entry.within_4_stderr
    assert entry.bound_satisfied in (None, True)
    assert entry.samples == small_mc.samples


def test_hyperbolic_calibration_at_small_delta(small_mc):
    entry = calibrate_set("L33", None, 1e-3, small_mc)
    assert entry.bound_satisfied
    assert entry.within_4_stderr


@pytest.mark.parametrize("a", [-0.02, -1.0])
def test_calibration_empty_annulus(a, small_mc):
    entry = calibrate_set("L35", {"a": a}, 0.01, small_mc)
    assert entry.reference == 0.0
    assert entry.mean == 0.0
    assert entry.within_4_stderr


def test_calibration_defaults_and_ranges(small_mc):
    entry = calibrate_set("L34", None, 0.01, small_mc)
    assert entry.params == {"a": 1.0, "b": 1.0}
    with pytest.raises(ValueError):
        calibrate_set("L33", None, 0.2, small_mc)
    with pytest.raises(ValueError):
        calibrate_set("L34", {"a": -1.0}, 0.01, small_mc)
    with pytest.raises(ValueError):
        calibrate_set("L99", None, 0.01, small_mc)
