"""
Exceções de domínio.

Seguem a convenção do projeto: erros de entrada derivam de ``ValueError`` e
falhas numéricas de ``RuntimeError``; a CLI converte cada família num código de
saída.
"""

from __future__ import annotations

from typing import Any


class SymbolError(ValueError):
    """Símbolo polinomial inválido."""


class ParseError(SymbolError):
    """Erro de sintaxe numa expressão polinomial."""

    def __init__(self, message: str, position: int, token: str = "") -> None:
        super().__init__(f"{message} (posição {position}, token {token!r})")
        self.position = position
        self.token = token


class UnimodularConstantError(SymbolError):
    """Componente constante de módulo 1: contato em todo o toro, fora do escopo."""

    def __init__(self, index: int, value: complex) -> None:
        super().__init__(
            f"componente {index + 1} é a constante unimodular {value!r}"
        )
        self.index = index
        self.value = value


class DimensionMismatchError(ValueError):
    """Objetos de dimensões incompatíveis."""


class NotAContactError(ValueError):
    """A normalização conj(eta)*p(xi) não tem termo constante 1."""

    def __init__(self, residual: float) -> None:
        super().__init__(f"ponto não é de contato: resíduo de normalização {residual:.3e}")
        self.residual = residual


class InvalidInputError(ValueError):
    """Dados que contradizem as hipóteses de um auto-mapa C^3 genuíno."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SelfMapScreenError(ValueError):
    """O símbolo excede o módulo 1 na grade de triagem."""

    def __init__(self, report: Any) -> None:
        super().__init__("o símbolo não passou na triagem de auto-mapa")
        self.report = report


class RefinementError(RuntimeError):
    """Newton não convergiu dentro do limite de iterações."""

    def __init__(self, message: str, trajectory: list[list[float]]) -> None:
        super().__init__(message)
        self.trajectory = trajectory


class NumericalError(RuntimeError):
    """Falha numérica interna (sem estimativas utilizáveis, matriz degenerada...)."""


class InadmissibleParameterError(ValueError):
    """Parâmetro de exemplo fora da faixa verificada: |phi_j| excede 1 na grade."""

    def __init__(self, name: str, params: tuple[float, ...], sup_modulus: float) -> None:
        super().__init__(
            f"parâmetros {params} inadmissíveis para {name}: sup |phi| = {sup_modulus:.15f}"
        )
        self.name = name
        self.params = params
        self.sup_modulus = sup_modulus
