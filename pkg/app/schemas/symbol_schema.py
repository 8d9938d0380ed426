"""
Schemas Pydantic do arquivo JSON de símbolo.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator


# ---------------------------------------------------------------------------
# Termo explícito: expoentes + coeficiente [re, im]
# ---------------------------------------------------------------------------
class TermSpec(BaseModel):
    """Um monômio c * z^alpha."""

    exponents: list[int] = Field(..., description="Vetor de expoentes alpha (comprimento d)")
    coeff: list[float] = Field(
        ...,
        min_length=2,
        max_length=2,
        description="Coeficiente complexo como [re, im]",
        json_schema_extra={"example": [0.5, 0.0]},
    )

    @model_validator(mode="after")
    def _non_negative(self) -> "TermSpec":
        if any(a < 0 for a in self.exponents):
            raise ValueError("expoentes devem ser não negativos")
        return self


# ---------------------------------------------------------------------------
# Componente: expressão textual OU lista de termos
# ---------------------------------------------------------------------------
class ComponentSpec(BaseModel):
    """Uma componente phi_j do símbolo."""

    expr: str | None = Field(
        None,
        description="Expressão polinomial em z1..zd",
        json_schema_extra={"example": "(z1+z2+z3)/3"},
    )
    terms: list[TermSpec] | None = Field(None, description="Forma explícita por termos")

    @model_validator(mode="after")
    def _exactly_one(self) -> "ComponentSpec":
        if (self.expr is None) == (self.terms is None):
            raise ValueError("informe exatamente um entre 'expr' e 'terms'")
        return self


class SymbolFile(BaseModel):
    """Conteúdo completo de um arquivo de símbolo."""

    dimension: int = Field(..., ge=2, le=3, description="Dimensão d do polidisco")
    components: list[ComponentSpec] = Field(..., description="As d componentes")

    @model_validator(mode="after")
    def _count(self) -> "SymbolFile":
        if len(self.components) != self.dimension:
            raise ValueError(
                f"esperadas {self.dimension} componentes, recebidas {len(self.components)}"
            )
        return self


# ---------------------------------------------------------------------------
# Especificação de exemplo da biblioteca
# ---------------------------------------------------------------------------
ExampleName = Literal[
    "ex71",
    "ex73",
    "averaging3",
    "triple-monomial",
    "compact2-avg",
    "compact2-monomial",
    "compact3-pair",
    "compact3-avg",
    "identity",
]


class ExampleSpec(BaseModel):
    """Nome do exemplo e seus parâmetros (epsilon ou (a, b, c))."""

    name: ExampleName
    params: tuple[float, ...] = Field(
        default=(),
        description="ex71: (eps,); ex73: (a, b, c); demais: vazio",
        json_schema_extra={"example": [0.01, -0.01, 0.0]},
    )

    @model_validator(mode="after")
    def _arity(self) -> "ExampleSpec":
        expected = {"ex71": 1, "ex73": 3}.get(self.name, 0)
        if self.params and len(self.params) != expected:
            raise ValueError(
                f"{self.name} espera {expected} parâmetro(s), recebidos {len(self.params)}"
            )
        return self
