"""
Álgebra de jatos de Taylor de ordem 3 nas variáveis angulares theta.

Um :class:`AngularJet` guarda os coeficientes densos de um polinômio em
theta de grau total <= 3. Produtos são convoluções truncadas e a expansão
normalizada conj(eta) * p(xi * e^{i theta}) fornece as formas L, Q_j e A_j
consumidas pela classificação.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from app.core.exceptions import DimensionMismatchError, NotAContactError
from app.services.polysym import ComplexPolynomial

logger = logging.getLogger("polydisc.jets")

ORDER = 3
UNIMODULAR_TOL = 1e-12
ETA_TOL = 1e-9
NORMALIZATION_TOL = 1e-6


# ---------------------------------------------------------------------------
# Multi-índices e tabela de produtos
# ---------------------------------------------------------------------------
@lru_cache(maxsize=None)
def multi_indices(d: int) -> tuple[tuple[int, ...], ...]:
    """Multi-índices com |alpha| <= 3 em ordem graduada (grau, depois lexicográfica reversa)."""
    out: list[tuple[int, ...]] = []
    for degree in range(ORDER + 1):
        level = [a for a in itertools.product(range(degree + 1), repeat=d) if sum(a) == degree]
        out.extend(sorted(level, reverse=True))
    return tuple(out)


@lru_cache(maxsize=None)
def index_of(d: int) -> dict[tuple[int, ...], int]:
    return {alpha: pos for pos, alpha in enumerate(multi_indices(d))}


@lru_cache(maxsize=None)
def _product_table(d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = index_of(d)
    left, right, target = [], [], []
    for a, i in idx.items():
        for b, j in idx.items():
            c = tuple(x + y for x, y in zip(a, b))
            if sum(c) <= ORDER:
                left.append(i)
                right.append(j)
                target.append(idx[c])
    return np.array(left), np.array(right), np.array(target)


def jet_size(d: int) -> int:
    return math.comb(d + ORDER, ORDER)


# ---------------------------------------------------------------------------
# AngularJet
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class AngularJet:
    """Jato truncado em grau 3; ``xi``/``eta`` registram o ponto base."""

    dimension: int
    coefficients: np.ndarray
    xi: tuple[float, ...] | None = None
    eta: complex | None = None

    def __post_init__(self) -> None:
        coeffs = np.array(self.coefficients, dtype=np.complex128)
        if coeffs.shape != (jet_size(self.dimension),):
            raise DimensionMismatchError(
                f"jato com {coeffs.shape} coeficientes; esperado {jet_size(self.dimension)}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def constant(cls, d: int, value: complex = 1.0) -> "AngularJet":
        coeffs = np.zeros(jet_size(d), dtype=np.complex128)
        coeffs[0] = value
        return cls(d, coeffs)

    @classmethod
    def zero(cls, d: int) -> "AngularJet":
        return cls(d, np.zeros(jet_size(d), dtype=np.complex128))

    def coefficient(self, alpha: Sequence[int]) -> complex:
        return complex(self.coefficients[index_of(self.dimension)[tuple(alpha)]])

    def __add__(self, other: "AngularJet") -> "AngularJet":
        _same_dimension(self, other)
        return AngularJet(self.dimension, self.coefficients + other.coefficients)

    def __mul__(self, other: "AngularJet | complex | float") -> "AngularJet":
        if isinstance(other, AngularJet):
            return jet_mul(self, other)
        return AngularJet(self.dimension, self.coefficients * complex(other))

    __rmul__ = __mul__

    def evaluate(self, theta: Sequence[float]) -> complex:
        """Valor do polinômio truncado em theta."""
        theta = np.asarray(theta, dtype=np.float64)
        monomials = np.array(
            [np.prod(theta ** np.array(a)) for a in multi_indices(self.dimension)]
        )
        return complex(self.coefficients @ monomials)


def _same_dimension(a: AngularJet, b: AngularJet) -> None:
    if a.dimension != b.dimension:
        raise DimensionMismatchError(f"jatos de dimensões {a.dimension} e {b.dimension}")


def jet_mul(a: AngularJet, b: AngularJet) -> AngularJet:
    """Convolução de coeficientes truncada em grau total 3."""
    _same_dimension(a, b)
    left, right, target = _product_table(a.dimension)
    out = np.zeros(jet_size(a.dimension), dtype=np.complex128)
    np.add.at(out, target, a.coefficients[left] * b.coefficients[right])
    return AngularJet(a.dimension, out)


def circle_jet(k: int, xi_k: complex, d: int) -> AngularJet:
    """
    Jato de theta -> xi_k * e^{i theta_k}.

    Parameters
    ----------
    k : int
        Variável (começa em 1).
    xi_k : complex
        Ponto unimodular.
    d : int
        Dimensão do jato.
    """
    if abs(abs(xi_k) - 1.0) > UNIMODULAR_TOL:
        raise ValueError(f"xi_{k} não é unimodular: |xi| = {abs(xi_k)!r}")
    if not 1 <= k <= d:
        raise DimensionMismatchError(f"variável {k} fora de 1..{d}")
    idx = index_of(d)
    coeffs = np.zeros(jet_size(d), dtype=np.complex128)
    series = (1.0, 1j, -0.5, -1j / 6.0)
    for power, value in enumerate(series):
        alpha = [0] * d
        alpha[k - 1] = power
        coeffs[idx[tuple(alpha)]] = xi_k * value
    return AngularJet(d, coeffs)


def _power_jets(base: AngularJet, max_power: int) -> list[AngularJet]:
    powers = [AngularJet.constant(base.dimension)]
    for _ in range(max_power):
        powers.append(jet_mul(powers[-1], base))
    return powers


def symbol_jet(p: ComplexPolynomial, xi: Sequence[float], eta: complex) -> AngularJet:
    """
    Jato normalizado conj(eta) * p(xi * e^{i theta}).

    Parameters
    ----------
    p : ComplexPolynomial
        Componente do símbolo.
    xi : Sequence[float]
        Ângulos do ponto base no toro.
    eta : complex
        Alvo unimodular, deve coincidir com p(xi).

    Raises
    ------
    NotAContactError
        Se |conj(eta) p(xi) - 1| > 1e-6.
    """
    d = p.dimension
    if len(xi) != d:
        raise DimensionMismatchError(f"xi com {len(xi)} ângulos para d={d}")
    if abs(abs(eta) - 1.0) > ETA_TOL:
        raise ValueError(f"eta não é unimodular: |eta| = {abs(eta)!r}")
    circles = [circle_jet(k + 1, complex(np.exp(1j * xi[k])), d) for k in range(d)]
    degs = p.partial_degrees()
    powers = [_power_jets(circles[k], degs[k]) for k in range(d)]

    total = AngularJet.zero(d)
    for alpha, c in p.terms.items():
        term = AngularJet.constant(d, c)
        for k, a in enumerate(alpha):
            if a:
                term = jet_mul(term, powers[k][a])
        total = total + term

    jet = AngularJet(d, total.coefficients * np.conj(eta), xi=tuple(float(t) for t in xi), eta=complex(eta))
    residual = abs(jet.coefficients[0] - 1.0)
    if residual > NORMALIZATION_TOL:
        raise NotAContactError(residual)
    return jet


# ---------------------------------------------------------------------------
# Estratos reais
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class JetStrata:
    """Gradientes e hessianas de Re e Im do jato em theta = 0."""

    re_grad: np.ndarray
    im_grad: np.ndarray
    re_hess: np.ndarray
    im_hess: np.ndarray

    @property
    def contact_form(self) -> np.ndarray:
        """Q = -re_hess / 2 (forma de contato, valor theta^T Q theta)."""
        return -0.5 * self.re_hess

    @property
    def imaginary_form(self) -> np.ndarray:
        """A = im_hess / 2 (parte quadrática de Im)."""
        return 0.5 * self.im_hess


def real_strata(jet: AngularJet) -> JetStrata:
    """Extrai gradientes e hessianas simétricas (diagonal = 2 * coef, fora = coef)."""
    d = jet.dimension
    idx = index_of(d)
    grad = np.zeros(d, dtype=np.complex128)
    hess = np.zeros((d, d), dtype=np.complex128)
    for k in range(d):
        e_k = [0] * d
        e_k[k] = 1
        grad[k] = jet.coefficients[idx[tuple(e_k)]]
        for l in range(k, d):
            alpha = [0] * d
            alpha[k] += 1
            alpha[l] += 1
            c = jet.coefficients[idx[tuple(alpha)]]
            if k == l:
                hess[k, k] = 2.0 * c
            else:
                hess[k, l] = hess[l, k] = c
    return JetStrata(
        re_grad=grad.real.copy(),
        im_grad=grad.imag.copy(),
        re_hess=hess.real.copy(),
        im_hess=hess.imag.copy(),
    )
