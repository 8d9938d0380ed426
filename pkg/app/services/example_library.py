"""
Biblioteca de símbolos de referência e busca numérica de admissibilidade.

As famílias de uma variável

    g_eps(z) = (1 + z)/2 + i eps (z - 1)^2
    F_eps(z) = (3 + 6z - z^2)/8 + 2 i eps (z - 1)^2 - i eps (z - 1)^3

só são auto-mapas do disco para eps pequeno; a faixa é verificada numa grade
do círculo (grid_n >= 4096), não demonstrada.
"""

from __future__ import annotations

import logging
from typing import Iterable, Literal, Sequence

import numpy as np

from app.core.exceptions import InadmissibleParameterError
from app.schemas.symbol_schema import ExampleSpec
from app.services.polysym import ComplexPolynomial, Symbol, evaluate_on_torus, torus_grid

logger = logging.getLogger("polydisc.examples")

Family = Literal["g", "F"]

ADMISSIBLE_GRID_N = 4096
ADMISSIBLE_MARGIN = 1e-12
DEFAULT_EPSILON = 0.01
DEFAULT_ABC = (0.01, 0.01, 0.01)
EPSILON_GRID = tuple(round(0.001 * k, 3) for k in range(0, 251))

EXAMPLE_NAMES = (
    "ex71",
    "ex73",
    "averaging3",
    "triple-monomial",
    "compact2-avg",
    "compact2-monomial",
    "compact3-pair",
    "compact3-avg",
    "identity",
)


# ---------------------------------------------------------------------------
# Famílias de uma variável
# ---------------------------------------------------------------------------
def _z() -> ComplexPolynomial:
    return ComplexPolynomial.variable(1, 1)


def g_family(eps: float) -> ComplexPolynomial:
    z = _z()
    return (1 + z) * 0.5 + 1j * eps * (z - 1) ** 2


def f_family(eps: float) -> ComplexPolynomial:
    z = _z()
    return (3 + 6 * z - z**2) * 0.125 + 2j * eps * (z - 1) ** 2 - 1j * eps * (z - 1) ** 3


_FAMILIES = {"g": g_family, "F": f_family}


def circle_sup(p: ComplexPolynomial, grid_n: int = ADMISSIBLE_GRID_N) -> float:
    """max |p(e^{i theta})| na grade de grid_n ângulos."""
    theta = torus_grid(grid_n)[:, None]
    return float(np.max(np.abs(evaluate_on_torus(p, theta))))


def admissible_epsilon(
    family: Family,
    grid_n: int = ADMISSIBLE_GRID_N,
    eps_grid: Iterable[float] | None = None,
) -> float:
    """
    Maior eps da grade tal que sup |family_eps| <= 1 + 1e-12 no círculo.

    A grade é percorrida em ordem crescente e a busca para na primeira falha,
    de modo que todo candidato menor também passa. Devolve 0 quando nenhum
    candidato positivo passa.
    """
    if family not in _FAMILIES:
        raise ValueError(f"família desconhecida: {family}")
    if grid_n < ADMISSIBLE_GRID_N:
        raise ValueError(f"grid_n precisa ser >= {ADMISSIBLE_GRID_N}")
    build = _FAMILIES[family]
    best = 0.0
    for eps in sorted(float(e) for e in (eps_grid if eps_grid is not None else EPSILON_GRID)):
        if eps < 0:
            continue
        if circle_sup(build(eps), grid_n) > 1.0 + ADMISSIBLE_MARGIN:
            break
        best = eps
    logger.info("Admissibilidade | família=%s | grid_n=%d | eps=%.4f", family, grid_n, best)
    return best


def _check_admissible(name: str, params: tuple[float, ...], polys: Sequence[ComplexPolynomial]) -> None:
    sup = max(circle_sup(p) for p in polys)
    if sup > 1.0 + ADMISSIBLE_MARGIN:
        raise InadmissibleParameterError(name, params, sup)


# ---------------------------------------------------------------------------
# Construção dos símbolos
# ---------------------------------------------------------------------------
def _embed(p: ComplexPolynomial, k: int, d: int) -> ComplexPolynomial:
    """p(z_k) como polinômio em d variáveis."""
    terms = {}
    for (a,), c in p.terms.items():
        alpha = [0] * d
        alpha[k - 1] = a
        terms[tuple(alpha)] = c
    return ComplexPolynomial(d, terms)


def _vars(d: int) -> list[ComplexPolynomial]:
    return [ComplexPolynomial.variable(d, k) for k in range(1, d + 1)]


def _ex71(eps: float) -> Symbol:
    g = g_family(eps)
    _check_admissible("ex71", (eps,), [g])
    z1, z2, z3 = _vars(3)
    return Symbol(
        3,
        (
            (z1 * z2 + _embed(g, 3, 3)) * 0.5,
            (z1 * z2 + (1 + z3) * 0.5) * 0.5,
            ComplexPolynomial.zero(3),
        ),
    )


def _ex73(a: float, b: float, c: float) -> Symbol:
    factors = [f_family(e) for e in (a, b, c)]
    _check_admissible("ex73", (a, b, c), factors)
    base = f_family(0.0)
    first = _embed(base, 1, 3) * _embed(base, 2, 3) * _embed(base, 3, 3)
    second = _embed(factors[0], 1, 3) * _embed(factors[1], 2, 3) * _embed(factors[2], 3, 3)
    return Symbol(3, (first, second, ComplexPolynomial.zero(3)))


def build_example(spec: ExampleSpec | str) -> Symbol:
    """
    Símbolo expandido do exemplo ``spec``.

    Parameters
    ----------
    spec : ExampleSpec | str
        Nome e parâmetros; sem parâmetros usa eps = 0.01 e (a, b, c) = (0.01, 0.01, 0.01).

    Returns
    -------
    Symbol
        Símbolo reprodutível bit a bit.

    Raises
    ------
    InadmissibleParameterError
        Se algum fator exceder módulo 1 na grade de admissibilidade.
    """
    if isinstance(spec, str):
        spec = ExampleSpec(name=spec)
    name = spec.name

    if name == "ex71":
        (eps,) = spec.params or (DEFAULT_EPSILON,)
        return _ex71(eps)
    if name == "ex73":
        a, b, c = spec.params or DEFAULT_ABC
        return _ex73(a, b, c)

    if name in ("compact2-avg", "compact2-monomial"):
        z1, z2 = _vars(2)
        zero = ComplexPolynomial.zero(2)
        first = (z1 + z2) * 0.5 if name == "compact2-avg" else z1 * z2
        return Symbol(2, (first, zero))

    z1, z2, z3 = _vars(3)
    zero = ComplexPolynomial.zero(3)
    if name == "averaging3":
        avg = (z1 + z2 + z3) * (1.0 / 3.0)
        return Symbol(3, (avg, avg, zero))
    if name == "triple-monomial":
        mono = z1 * z2 * z3
        return Symbol(3, (mono, mono, zero))
    if name == "compact3-pair":
        return Symbol(3, (z1 * z2, z1 * (1.0 / 3.0) + z2 * (2.0 / 3.0), zero))
    if name == "compact3-avg":
        return Symbol(
            3, ((z1 + z2 + z3) * (1.0 / 3.0), z1 * 0.25 + z2 * 0.5 + z3 * 0.25, zero)
        )
    return Symbol(3, (z1, z2, z3))


def parse_params(text: str | None) -> tuple[float, ...]:
    """'0.01,-0.01,0' -> (0.01, -0.01, 0.0)."""
    if not text:
        return ()
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ValueError(f"parâmetros inválidos: {text!r}") from exc
