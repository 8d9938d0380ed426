"""
Polinômios complexos esparsos e símbolos polinomiais do polidisco.

Representação, parsing, avaliação, derivação e triagem de auto-mapa para
símbolos phi = (phi_1, ..., phi_d) com d = 2 ou 3.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from app.core.exceptions import (
    DimensionMismatchError,
    ParseError,
    SymbolError,
    UnimodularConstantError,
)
from app.schemas.report_schema import ComponentScreen, SelfMapReport
from app.schemas.symbol_schema import ComponentSpec, SymbolFile, TermSpec

logger = logging.getLogger("polydisc.polysym")

Exponent = tuple[int, ...]

SUPPORTED_DIMENSIONS = (2, 3)
UNIMODULAR_TOL = 1e-12


# ---------------------------------------------------------------------------
# ComplexPolynomial
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ComplexPolynomial:
    """Polinômio esparso: mapa expoente -> coeficiente complexo não nulo."""

    dimension: int
    terms: Mapping[Exponent, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise SymbolError(f"dimensão inválida: {self.dimension}")
        clean: dict[Exponent, complex] = {}
        for alpha, coeff in self.terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dimension or any(a < 0 for a in alpha):
                raise SymbolError(f"expoente inválido {alpha} para d={self.dimension}")
            coeff = complex(coeff)
            if coeff != 0:
                clean[alpha] = clean.get(alpha, 0j) + coeff
        clean = {a: c for a, c in clean.items() if c != 0}
        object.__setattr__(self, "terms", MappingProxyType(dict(sorted(clean.items()))))

    # ---- construtores -----------------------------------------------------
    @classmethod
    def zero(cls, dimension: int) -> "ComplexPolynomial":
        return cls(dimension, {})

    @classmethod
    def constant(cls, dimension: int, value: complex) -> "ComplexPolynomial":
        return cls(dimension, {(0,) * dimension: value})

    @classmethod
    def variable(cls, dimension: int, k: int) -> "ComplexPolynomial":
        """Coordenada z_k (k começa em 1)."""
        if not 1 <= k <= dimension:
            raise SymbolError(f"variável z{k} fora de 1..{dimension}")
        alpha = [0] * dimension
        alpha[k - 1] = 1
        return cls(dimension, {tuple(alpha): 1.0})

    # ---- aritmética -------------------------------------------------------
    def _check(self, other: "ComplexPolynomial") -> None:
        if other.dimension != self.dimension:
            raise DimensionMismatchError(
                f"dimensões incompatíveis: {self.dimension} e {other.dimension}"
            )

    def _coerce(self, other: object) -> "ComplexPolynomial":
        if isinstance(other, ComplexPolynomial):
            self._check(other)
            return other
        if isinstance(other, (int, float, complex)):
            return ComplexPolynomial.constant(self.dimension, other)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other: object) -> "ComplexPolynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms = dict(self.terms)
        for alpha, c in other.terms.items():
            terms[alpha] = terms.get(alpha, 0j) + c
        return ComplexPolynomial(self.dimension, terms)

    __radd__ = __add__

    def __neg__(self) -> "ComplexPolynomial":
        return ComplexPolynomial(self.dimension, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other: object) -> "ComplexPolynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: object) -> "ComplexPolynomial":
        return (-self) + other

    def __mul__(self, other: object) -> "ComplexPolynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms: dict[Exponent, complex] = {}
        for (a, ca), (b, cb) in itertools.product(self.terms.items(), other.terms.items()):
            key = tuple(x + y for x, y in zip(a, b))
            terms[key] = terms.get(key, 0j) + ca * cb
        return ComplexPolynomial(self.dimension, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "ComplexPolynomial":
        if not isinstance(n, int) or n < 0:
            raise SymbolError(f"expoente precisa ser inteiro não negativo: {n!r}")
        result = ComplexPolynomial.constant(self.dimension, 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # ---- propriedades -----------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(sum(a) == 0 for a in self.terms)

    @property
    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def partial_degrees(self) -> tuple[int, ...]:
        return tuple(
            max((a[k] for a in self.terms), default=0) for k in range(self.dimension)
        )

    @cached_property
    def exponent_array(self) -> np.ndarray:
        if not self.terms:
            return np.zeros((0, self.dimension), dtype=np.int64)
        return np.array(list(self.terms.keys()), dtype=np.int64)

    @cached_property
    def coefficient_array(self) -> np.ndarray:
        return np.array(list(self.terms.values()), dtype=np.complex128)

    def __str__(self) -> str:
        return format_polynomial(self)


# ---------------------------------------------------------------------------
# Symbol
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Symbol:
    """phi = (phi_1, ..., phi_d), todas as componentes em dimensão d."""

    dimension: int
    components: tuple[ComplexPolynomial, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))
        if self.dimension not in SUPPORTED_DIMENSIONS:
            raise SymbolError(f"dimensão {self.dimension} não suportada (use 2 ou 3)")
        if len(self.components) != self.dimension:
            raise SymbolError(
                f"esperadas {self.dimension} componentes, recebidas {len(self.components)}"
            )
        for j, p in enumerate(self.components):
            if p.dimension != self.dimension:
                raise DimensionMismatchError(
                    f"componente {j + 1} tem dimensão {p.dimension}"
                )
            if p.is_constant and not p.is_zero:
                value = next(iter(p.terms.values()))
                if abs(abs(value) - 1.0) <= UNIMODULAR_TOL:
                    raise UnimodularConstantError(j, value)

    def evaluate(self, z: Sequence[complex]) -> np.ndarray:
        return np.array([evaluate(p, z) for p in self.components], dtype=np.complex128)

    def jacobian(self, z: Sequence[complex]) -> np.ndarray:
        """Matriz complexa d x d de dphi_i/dz_k em z."""
        d = self.dimension
        jac = np.zeros((d, d), dtype=np.complex128)
        for i, p in enumerate(self.components):
            for k in range(d):
                jac[i, k] = evaluate(partial_derivative(p, k + 1), z)
        return jac


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?[ij]?)
  | (?P<var>z\d+)
  | (?P<imag>[ij](?![A-Za-z0-9_]))
  | (?P<op>\*\*|[-+*/^()])
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError("caractere inesperado", pos, text[pos])
        kind = match.lastgroup or ""
        if kind != "ws":
            tokens.append(_Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    """Descida recursiva: expr := term (('+'|'-') term)*."""

    def __init__(self, text: str, dimension: int) -> None:
        self.text = text
        self.d = dimension
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _expect(self, text: str) -> None:
        if self.tok.text != text:
            raise ParseError(f"esperado {text!r}", self.tok.pos, self.tok.text)
        self._advance()

    def parse(self) -> ComplexPolynomial:
        if self.tok.kind == "end":
            raise ParseError("expressão vazia", 0, "")
        poly = self._expr()
        if self.tok.kind != "end":
            raise ParseError("token inesperado", self.tok.pos, self.tok.text)
        return poly

    def _expr(self) -> ComplexPolynomial:
        poly = self._term()
        while self.tok.text in ("+", "-"):
            op = self._advance().text
            rhs = self._term()
            poly = poly + rhs if op == "+" else poly - rhs
        return poly

    def _term(self) -> ComplexPolynomial:
        poly = self._unary()
        while True:
            if self.tok.text == "*":
                self._advance()
                poly = poly * self._unary()
            elif self.tok.text == "/":
                tok = self._advance()
                divisor = self._unary()
                if not divisor.is_constant or divisor.is_zero:
                    raise ParseError("divisão só por constante não nula", tok.pos, tok.text)
                poly = poly * (1.0 / divisor.terms[(0,) * self.d])
            elif self.tok.kind == "var" or self.tok.text == "(":
                # multiplicação implícita: 2z1, 3(z1+z2)
                poly = poly * self._unary()
            else:
                return poly

    def _unary(self) -> ComplexPolynomial:
        if self.tok.text in ("+", "-"):
            op = self._advance().text
            operand = self._unary()
            return operand if op == "+" else -operand
        return self._power()

    def _power(self) -> ComplexPolynomial:
        base = self._atom()
        if self.tok.text in ("^", "**"):
            self._advance()
            tok = self._advance()
            if tok.kind != "num" or not tok.text.isdigit():
                raise ParseError("expoente precisa ser inteiro não negativo", tok.pos, tok.text)
            return base ** int(tok.text)
        return base

    def _atom(self) -> ComplexPolynomial:
        tok = self._advance()
        if tok.kind == "num":
            return ComplexPolynomial.constant(self.d, _literal(tok))
        if tok.kind == "imag":
            return ComplexPolynomial.constant(self.d, 1j)
        if tok.kind == "var":
            k = int(tok.text[1:])
            if not 1 <= k <= self.d:
                raise ParseError(f"variável desconhecida para d={self.d}", tok.pos, tok.text)
            return ComplexPolynomial.variable(self.d, k)
        if tok.text == "(":
            inner = self._expr()
            self._expect(")")
            return inner
        if tok.kind == "name":
            raise ParseError("identificador desconhecido", tok.pos, tok.text)
        raise ParseError("token inesperado", tok.pos, tok.text)


def _literal(tok: _Token) -> complex:
    text = tok.text
    try:
        if text[-1] in "ij":
            return complex(0.0, float(text[:-1]))
        return complex(float(text), 0.0)
    except ValueError as exc:
        raise ParseError("literal malformado", tok.pos, text) from exc


def parse_expression(text: str, d: int) -> ComplexPolynomial:
    """
    Converte uma expressão textual num polinômio expandido.

    Gramática: literais complexos (``a``, ``bi``, ``a+bi``), variáveis
    ``z1..zd``, operadores ``+ - *``, divisão por constante, potências
    inteiras ``^`` e parênteses.

    Raises
    ------
    ParseError
        Variável fora de alcance, literal malformado ou expoente não inteiro;
        a exceção carrega a posição do token.
    """
    return _Parser(text, d).parse()


def _format_coefficient(c: complex) -> str:
    if c.imag == 0:
        return repr(c.real) if c.real >= 0 else f"({c.real!r})"
    if c.real == 0:
        return f"({c.imag!r}i)"
    sign = "+" if c.imag >= 0 else "-"
    return f"({c.real!r}{sign}{abs(c.imag)!r}i)"


def format_polynomial(p: ComplexPolynomial) -> str:
    """Texto reparseável por :func:`parse_expression`."""
    if p.is_zero:
        return "0"
    parts = []
    for alpha, c in p.terms.items():
        factors = [
            f"z{k + 1}" if a == 1 else f"z{k + 1}^{a}"
            for k, a in enumerate(alpha)
            if a > 0
        ]
        parts.append("*".join([_format_coefficient(c), *factors]))
    return " + ".join(parts)


# ---------------------------------------------------------------------------
# Avaliação e derivação
# ---------------------------------------------------------------------------
def evaluate(p: ComplexPolynomial, z: Sequence[complex]) -> complex:
    """Avaliação direta (soma finita) em um ponto."""
    if len(z) != p.dimension:
        raise DimensionMismatchError(f"ponto com {len(z)} coordenadas para d={p.dimension}")
    total = 0j
    for alpha, c in p.terms.items():
        term = c
        for zk, a in zip(z, alpha):
            if a:
                term *= complex(zk) ** a
        total += term
    return total


def evaluate_many(p: ComplexPolynomial, points: np.ndarray) -> np.ndarray:
    """Avaliação vetorizada em ``points`` de forma (N, d)."""
    points = np.asarray(points, dtype=np.complex128)
    if points.ndim != 2 or points.shape[1] != p.dimension:
        raise DimensionMismatchError(f"pontos de forma {points.shape} para d={p.dimension}")
    out = np.zeros(points.shape[0], dtype=np.complex128)
    for alpha, c in p.terms.items():
        term = np.full(points.shape[0], c, dtype=np.complex128)
        for k, a in enumerate(alpha):
            if a:
                term = term * points[:, k] ** a
        out += term
    return out


def evaluate_on_torus(p: ComplexPolynomial, angles: np.ndarray) -> np.ndarray:
    """Avalia theta -> p(e^{i theta}) para ângulos de forma (N, d)."""
    angles = np.asarray(angles, dtype=np.float64)
    if p.is_zero:
        return np.zeros(angles.shape[0], dtype=np.complex128)
    phases = angles @ p.exponent_array.T.astype(np.float64)
    return np.exp(1j * phases) @ p.coefficient_array


def torus_grid(grid_n: int) -> np.ndarray:
    """Ângulos -pi + 2 pi k / n, k = 0..n-1 (contém 0 quando n é par)."""
    return -math.pi + 2.0 * math.pi * np.arange(grid_n) / grid_n


def evaluate_on_grid(p: ComplexPolynomial, grid_n: int, chunk: int = 64) -> np.ndarray:
    """
    Avalia p na grade tensorial grid_n^d do toro.

    Usa a estrutura separável dos monômios (contração ``einsum``) e processa o
    primeiro eixo em blocos para limitar memória.
    """
    d = p.dimension
    theta = torus_grid(grid_n)
    degs = p.partial_degrees()
    tensor = np.zeros(tuple(k + 1 for k in degs), dtype=np.complex128)
    for alpha, c in p.terms.items():
        tensor[alpha] = c
    powers = [np.exp(1j * np.outer(theta, np.arange(k + 1))) for k in degs]
    letters = "abc"[:d]
    spec = letters + "," + ",".join(f"{'ijk'[m]}{letters[m]}" for m in range(d)) + "->" + "ijk"[:d]
    blocks = []
    for start in range(0, grid_n, chunk):
        first = powers[0][start : start + chunk]
        blocks.append(np.einsum(spec, tensor, first, *powers[1:], optimize=True))
    return np.concatenate(blocks, axis=0)


def partial_derivative(p: ComplexPolynomial, k: int) -> ComplexPolynomial:
    """Derivada formal exata em relação a z_k (k começa em 1)."""
    if not 1 <= k <= p.dimension:
        raise SymbolError(f"índice de variável {k} fora de 1..{p.dimension}")
    terms: dict[Exponent, complex] = {}
    for alpha, c in p.terms.items():
        a = alpha[k - 1]
        if a:
            beta = list(alpha)
            beta[k - 1] -= 1
            terms[tuple(beta)] = c * a
    return ComplexPolynomial(p.dimension, terms)


def depends_on(p: ComplexPolynomial, k: int) -> bool:
    """Verdadeiro sse algum termo armazenado tem alpha_k > 0."""
    return any(alpha[k - 1] > 0 for alpha in p.terms)


def dependent_variables(p: ComplexPolynomial) -> tuple[int, ...]:
    return tuple(k for k in range(1, p.dimension + 1) if depends_on(p, k))


def is_unimodular_monomial(p: ComplexPolynomial, tol: float = UNIMODULAR_TOL) -> bool:
    """Constante unimodular vezes um monômio não constante."""
    if not p.is_monomial or p.is_constant:
        return False
    (c,) = p.terms.values()
    return abs(abs(c) - 1.0) <= tol


def angular_derivatives(
    p: ComplexPolynomial, theta: Sequence[float]
) -> tuple[complex, np.ndarray, np.ndarray]:
    """
    Valor, gradiente e hessiana (complexos) de theta -> p(e^{i theta}).

    d/dtheta_k z^alpha = i alpha_k z^alpha, portanto a hessiana é
    -sum alpha_k alpha_l c z^alpha.
    """
    exps = p.exponent_array.astype(np.float64)
    if exps.shape[0] == 0:
        d = p.dimension
        return 0j, np.zeros(d, dtype=np.complex128), np.zeros((d, d), dtype=np.complex128)
    terms = p.coefficient_array * np.exp(1j * (exps @ np.asarray(theta, dtype=np.float64)))
    value = complex(terms.sum())
    grad = 1j * (exps.T @ terms)
    hess = -(exps.T * terms) @ exps
    return value, grad, hess


# ---------------------------------------------------------------------------
# Triagem de auto-mapa
# ---------------------------------------------------------------------------
def self_map_report(
    s: Symbol,
    grid_n: int = 64,
    margin: float = 1e-9,
    *,
    assume_self_map: bool = False,
) -> SelfMapReport:
    """
    Triagem consultiva de ``|phi_j| <= 1`` na grade grid_n^d do toro.

    Para polinômios o supremo no polidisco fechado coincide com o supremo em
    T^d, de modo que a grade do toro basta. Igualdade em pontos de contato
    impede qualquer certificação: o relatório é apenas indicativo.
    """
    if grid_n < 16:
        raise ValueError("grid_n precisa ser >= 16")
    theta = torus_grid(grid_n)
    screens: list[ComponentScreen] = []
    for j, p in enumerate(s.components):
        if p.is_zero:
            screens.append(
                ComponentScreen(
                    component=j + 1, max_modulus=0.0, argmax=[0.0] * s.dimension, passed=True
                )
            )
            continue
        modulus = np.abs(evaluate_on_grid(p, grid_n))
        flat_index = int(np.argmax(modulus))
        idx = np.unravel_index(flat_index, modulus.shape)
        max_mod = float(modulus[idx])
        screens.append(
            ComponentScreen(
                component=j + 1,
                max_modulus=max_mod,
                argmax=[float(theta[i]) for i in idx],
                passed=max_mod <= 1.0 + margin,
            )
        )
    passed = all(c.passed for c in screens)
    if not passed:
        logger.warning(
            "Triagem de auto-mapa falhou | grid_n=%d | máximos=%s",
            grid_n,
            [round(c.max_modulus, 12) for c in screens],
        )
    return SelfMapReport(
        grid_n=grid_n,
        margin=margin,
        components=screens,
        passed=passed,
        asserted=assume_self_map,
    )


# ---------------------------------------------------------------------------
# Formato de arquivo (JSON) e transformações de símbolos
# ---------------------------------------------------------------------------
def polynomial_from_spec(spec: ComponentSpec, d: int) -> ComplexPolynomial:
    if spec.expr is not None:
        return parse_expression(spec.expr, d)
    terms: dict[Exponent, complex] = {}
    for term in spec.terms or []:
        if len(term.exponents) != d:
            raise SymbolError(f"expoente {term.exponents} incompatível com d={d}")
        alpha = tuple(term.exponents)
        terms[alpha] = terms.get(alpha, 0j) + complex(term.coeff[0], term.coeff[1])
    return ComplexPolynomial(d, terms)


def symbol_from_file_model(model: SymbolFile) -> Symbol:
    d = model.dimension
    return Symbol(d, tuple(polynomial_from_spec(c, d) for c in model.components))


def symbol_to_file_model(s: Symbol, *, as_terms: bool = False) -> SymbolFile:
    components = []
    for p in s.components:
        if as_terms:
            components.append(
                ComponentSpec(
                    terms=[
                        TermSpec(exponents=list(a), coeff=[c.real, c.imag])
                        for a, c in p.terms.items()
                    ]
                )
            )
        else:
            components.append(ComponentSpec(expr=format_polynomial(p)))
    return SymbolFile(dimension=s.dimension, components=components)


def load_symbol(path: str | Path) -> Symbol:
    """Lê um arquivo JSON de símbolo (forma ``expr`` ou ``terms``)."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return symbol_from_file_model(SymbolFile.model_validate(raw))


def symbol_from_expressions(expressions: Iterable[str], d: int) -> Symbol:
    return Symbol(d, tuple(parse_expression(e, d) for e in expressions))


def rotate_symbol(
    s: Symbol,
    rho: Sequence[float] | None = None,
    tau: Sequence[float] | None = None,
) -> Symbol:
    """Símbolo z -> tau . phi(rho . z) com rotações diagonais e^{i rho}, e^{i tau}."""
    d = s.dimension
    rho = np.zeros(d) if rho is None else np.asarray(rho, dtype=np.float64)
    tau = np.zeros(d) if tau is None else np.asarray(tau, dtype=np.float64)
    components = []
    for j, p in enumerate(s.components):
        terms = {
            alpha: c * complex(np.exp(1j * (tau[j] + float(np.dot(alpha, rho)))))
            for alpha, c in p.terms.items()
        }
        components.append(ComplexPolynomial(d, terms))
    return Symbol(d, tuple(components))


def permute_variables(s: Symbol, perm: Sequence[int]) -> Symbol:
    """Símbolo z -> phi(z_{perm}): a nova variável k ocupa o lugar de perm[k]."""
    d = s.dimension
    if sorted(perm) != list(range(d)):
        raise SymbolError(f"permutação inválida: {perm}")
    components = []
    for p in s.components:
        terms = {}
        for alpha, c in p.terms.items():
            beta = [0] * d
            for new_k, old_k in enumerate(perm):
                beta[new_k] = alpha[old_k]
            terms[tuple(beta)] = c
        components.append(ComplexPolynomial(d, terms))
    return Symbol(d, tuple(components))
