import json

import numpy as np
import pytest

from app.core.exceptions import ParseError, SymbolError, UnimodularConstantError
from app.services.polysym import (
    ComplexPolynomial,
    Symbol,
    dependent_variables,
    depends_on,
    evaluate,
    evaluate_on_grid,
    evaluate_on_torus,
    format_polynomial,
    is_unimodular_monomial,
    load_symbol,
    parse_expression,
    partial_derivative,
    permute_variables,
    rotate_symbol,
    self_map_report,
    symbol_from_expressions,
    symbol_to_file_model,
    torus_grid,
)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
def test_parse_single_monomial():
    p = parse_expression("z1*z2", 3)
    assert dict(p.terms) == {(1, 1, 0): 1 + 0j}


def test_parse_average_divides_by_constant():
    p = parse_expression("(z1+z2+z3)/3", 3)
    assert set(p.terms) == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}
    for c in p.terms.values():
        assert c == pytest.approx(1 / 3)


def test_parse_implicit_multiplication_and_powers():
    p = parse_expression("2z1 - 3(z2 - 1)^2", 2)
    assert dict(p.terms) == {(1, 0): 2, (0, 2): -3, (0, 1): 6, (0, 0): -3}


@pytest.mark.parametrize(
    "text, expected",
    [
        ("0.5+0.5i", 0.5 + 0.5j),
        ("i", 1j),
        ("-2.5j", -2.5j),
        ("1e-3", 0.001),
    ],
)
def test_parse_complex_literals(text, expected):
    p = parse_expression(text, 2)
    assert p.terms[(0, 0)] == pytest.approx(expected)


def test_parse_power_with_double_star():
    assert parse_expression("z1**3", 2) == parse_expression("z1^3", 2)


@pytest.mark.parametrize(
    "text, position",
    [
        ("z4", 0),
        ("z1 + z4", 5),
        ("z1^1.5", 3),
        ("z1/z2", 2),
        ("foo*z1", 0),
        ("(z1+z2", 6),
    ],
)
def test_parse_errors_carry_position(text, position):
    with pytest.raises(ParseError) as info:
        parse_expression(text, 3)
    assert info.value.position == position


def test_parse_empty_expression():
    with pytest.raises(ParseError):
        parse_expression("   ", 2)


@pytest.mark.parametrize(
    "text",
    ["(z1+z2+z3)/3", "0.5*z1*z2 + 0.25i*(z3-1)^2", "-z1^2*z2 + (1-2i)*z3", "0"],
)
def test_format_is_reparseable(text):
    p = parse_expression(text, 3)
    q = parse_expression(format_polynomial(p), 3)
    assert q == p


# ---------------------------------------------------------------------------
# Polinômios e símbolos
# ---------------------------------------------------------------------------
def test_arithmetic_with_scalars():
    z1 = ComplexPolynomial.variable(2, 1)
    p = 1 + 2 * z1 - z1 * 2
    assert p == ComplexPolynomial.constant(2, 1.0)
    assert (z1 - z1).is_zero


def test_variable_index_is_one_based():
    with pytest.raises(SymbolError):
        ComplexPolynomial.variable(2, 0)


def test_symbol_rejects_unimodular_constant():
    one = ComplexPolynomial.constant(2, 1j)
    with pytest.raises(UnimodularConstantError) as info:
        Symbol(2, (one, ComplexPolynomial.zero(2)))
    assert info.value.index == 0


def test_symbol_dimension_and_count():
    z1 = ComplexPolynomial.variable(3, 1)
    with pytest.raises(SymbolError):
        Symbol(3, (z1, z1))
    with pytest.raises(SymbolError):
        Symbol(4, tuple(ComplexPolynomial.zero(4) for _ in range(4)))


def test_partial_derivative_and_dependence():
    p = parse_expression("z1^2*z2 + 3z3", 3)
    assert partial_derivative(p, 1) == parse_expression("2z1*z2", 3)
    assert partial_derivative(p, 3) == ComplexPolynomial.constant(3, 3.0)
    assert depends_on(p, 2)
    assert dependent_variables(parse_expression("z1*z2", 3)) == (1, 2)


def test_unimodular_monomial_detection():
    assert is_unimodular_monomial(parse_expression("1i*z1*z2", 2))
    assert not is_unimodular_monomial(parse_expression("0.5*z1*z2", 2))
    assert not is_unimodular_monomial(parse_expression("z1 + z2", 2))


def test_grid_evaluation_matches_pointwise():
    p = parse_expression("(z1 + 2i*z2^2 - z1*z2*z3)/4", 3)
    n = 16
    values = evaluate_on_grid(p, n, chunk=5)
    theta = torus_grid(n)
    for idx in [(0, 0, 0), (3, 7, 11), (15, 0, 8)]:
        z = np.exp(1j * theta[list(idx)])
        assert values[idx] == pytest.approx(evaluate(p, z), abs=1e-14)


def test_torus_evaluation_matches_pointwise(rng):
    p = parse_expression("z1*z2 + 0.5*z2^3", 2)
    angles = rng.uniform(-np.pi, np.pi, size=(20, 2))
    batch = evaluate_on_torus(p, angles)
    for a, v in zip(angles, batch):
        assert v == pytest.approx(evaluate(p, np.exp(1j * a)), abs=1e-14)


def test_torus_grid_contains_origin():
    grid = torus_grid(64)
    assert grid[0] == pytest.approx(-np.pi)
    assert 0.0 in grid


# ---------------------------------------------------------------------------
# Triagem e arquivos
# ---------------------------------------------------------------------------
def test_self_map_screen_passes_for_average(averaging3):
    report = self_map_report(averaging3)
    assert report.passed
    assert report.components[0].max_modulus == pytest.approx(1.0)
    assert report.components[2].max_modulus == 0.0


def test_self_map_screen_fails_and_locates_maximum():
    s = symbol_from_expressions(["(1 + z1)*(1 + z2)", "0"], 2)
    report = self_map_report(s, grid_n=32)
    assert not report.passed
    assert report.components[0].max_modulus == pytest.approx(4.0)
    assert report.components[0].argmax == pytest.approx([0.0, 0.0], abs=1e-12)


def test_self_map_screen_maximum_on_diagonal_ridge():
    s = symbol_from_expressions(["z1 + z2", "0"], 2)
    report = self_map_report(s, grid_n=32)
    theta = report.components[0].argmax
    assert report.components[0].max_modulus == pytest.approx(2.0)
    assert theta[0] == pytest.approx(theta[1])
    assert abs(np.exp(1j * theta[0]) + np.exp(1j * theta[1])) == pytest.approx(2.0)


def test_self_map_grid_minimum():
    s = symbol_from_expressions(["z1", "z2"], 2)
    with pytest.raises(ValueError):
        self_map_report(s, grid_n=8)


def test_load_symbol_terms_form(tmp_path):
    payload = {
        "dimension": 2,
        "components": [
            {"terms": [{"exponents": [1, 1], "coeff": [1.0, 0.0]}]},
            {"expr": "(z1+z2)/2"},
        ],
    }
    path = tmp_path / "phi.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    s = load_symbol(path)
    assert s.components[0] == parse_expression("z1*z2", 2)
    assert s.components[1] == parse_expression("(z1+z2)/2", 2)


def test_load_symbol_rejects_wrong_count(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dimension": 3, "components": [{"expr": "z1"}]}))
    with pytest.raises(ValueError):
        load_symbol(path)


def test_file_model_export(averaging3):
    model = symbol_to_file_model(averaging3, as_terms=True)
    assert model.dimension == 3
    assert len(model.components[0].terms) == 3
    assert model.components[2].terms == []


def test_rotation_moves_values(rng, averaging3):
    rho = rng.uniform(-np.pi, np.pi, 3)
    tau = rng.uniform(-np.pi, np.pi, 3)
    rotated = rotate_symbol(averaging3, rho, tau)
    theta = rng.uniform(-np.pi, np.pi, 3)
    for j in range(3):
        original = evaluate(averaging3.components[j], np.exp(1j * (theta + rho)))
        moved = evaluate(rotated.components[j], np.exp(1j * theta))
        assert moved == pytest.approx(np.exp(1j * tau[j]) * original, abs=1e-13)


def test_permute_variables():
    s = symbol_from_expressions(["z1*z2^2", "z3", "0"], 3)
    p = permute_variables(s, [2, 0, 1])
    assert p.components[0] == parse_expression("z2*z3^2", 3)
    assert p.components[1] == parse_expression("z1", 3)
    with pytest.raises(SymbolError):
        permute_variables(s, [0, 0, 1])
