"""
Fixtures compartilhadas: configurações isoladas do ambiente, símbolos da
biblioteca e uma configuração de Monte-Carlo pequena.
"""

from __future__ import annotations

import numpy as np
import pytest

from app.core.config import Settings
from app.services.carleson import MonteCarloConfig
from app.services.example_library import build_example
from app.services.polysym import ComplexPolynomial, Symbol, symbol_from_expressions


@pytest.fixture
def settings() -> Settings:
    return Settings(_env_file=None)


@pytest.fixture
def small_mc() -> MonteCarloConfig:
    return MonteCarloConfig(samples=200_000, seed=7, chunk=50_000, workers=2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def identity3() -> Symbol:
    return build_example("identity")


@pytest.fixture
def averaging3() -> Symbol:
    return build_example("averaging3")


@pytest.fixture
def triple_monomial() -> Symbol:
    return build_example("triple-monomial")


@pytest.fixture
def bidisc_monomial() -> Symbol:
    """(z1 z2, 0) no bidisco."""
    return symbol_from_expressions(["z1*z2", "0"], 2)


@pytest.fixture
def interior_symbol() -> Symbol:
    """Imagem longe da fronteira: nenhum contato."""
    z1 = ComplexPolynomial.variable(2, 1)
    z2 = ComplexPolynomial.variable(2, 2)
    return Symbol(2, ((z1 + z2) * 0.25, ComplexPolynomial.zero(2)))
