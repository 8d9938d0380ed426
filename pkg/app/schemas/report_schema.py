"""
Schemas Pydantic dos relatórios JSON emitidos pela CLI.

Todo relatório carrega ``schema_version`` e os parâmetros efetivos (grade,
tolerâncias, semente) para reprodutibilidade.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

from app.core.config import SCHEMA_VERSION

Verdict = Literal["Bounded", "Unbounded", "Invalid"]
CompactnessVerdict = Literal["Compact", "NotCompact", "Undetermined"]
CaseLabel = Literal["a", "b", "c", "d", "violation"]
VerdictHint = Literal["consistent-bounded", "blow-up", "inconclusive"]


# ---------------------------------------------------------------------------
# Triagem de auto-mapa
# ---------------------------------------------------------------------------
class ComponentScreen(BaseModel):
    """Máximo de |phi_j| na grade de triagem."""

    component: int = Field(..., description="Índice j (base 1)")
    max_modulus: float = Field(..., description="Máximo de |phi_j| na grade")
    argmax: list[float] = Field(..., description="Ângulos onde o máximo ocorre")
    passed: bool = Field(..., description="max <= 1 + margin")


class SelfMapReport(BaseModel):
    """Resultado consultivo da triagem |phi_j| <= 1."""

    grid_n: int
    margin: float
    components: list[ComponentScreen]
    passed: bool
    asserted: bool = Field(False, description="Usuário declarou que phi é auto-mapa")


# ---------------------------------------------------------------------------
# Contatos
# ---------------------------------------------------------------------------
class ContactModel(BaseModel):
    """Ponto de contato refinado."""

    xi: list[float] = Field(..., description="Ângulos em [-pi, pi)")
    index_set: list[int] = Field(..., description="I maximal (base 1)")
    eta: list[list[float]] = Field(..., description="Alvos unimodulares [re, im] por i em I")
    residuals: list[float] = Field(..., description="1 - |phi_i(xi)| por i em I")
    component_dim: int = Field(..., description="Dimensão estimada da componente de contato")
    cluster: int
    flat: bool = False


class JuliaModel(BaseModel):
    """Derivadas normalizadas conj(eta_i) xi_k dphi_i/dz_k."""

    real: list[list[float]]
    imag: list[list[float]]
    valid: bool
    reasons: list[str] = Field(default_factory=list)


class JacobianModel(BaseModel):
    """Determinante complexo de dphi(xi) quando |I| = d."""

    determinant: list[float] = Field(..., description="[re, im]")
    abs_det: float
    scale: float = Field(..., description="Cota de Hadamard (produto das normas das linhas)")
    ratio: float
    violation: bool


class SignatureModel(BaseModel):
    p: int
    q: int
    z: int
    eigenvalues: list[float]
    scale: float
    tol: float
    nonzero_margin: float | None = None
    zero_margin: float | None = None
    fragile: bool = False


class PairModel(BaseModel):
    """Análise de um par I' = {i1, i2} num ponto de contato."""

    pair: list[int]
    independent: bool
    independence_margin: float = Field(..., description="|l1 x l2| / (|l1| |l2|)")
    l1: list[float]
    l2: list[float]
    kappa: list[float] | None = None
    q1: list[list[float]]
    q2: list[list[float]]
    s_form: list[list[float]]
    s: int
    s_signature: SignatureModel
    kernel: list[list[float]] = Field(default_factory=list, description="Colunas de K")
    residual_form: list[list[float]] | None = Field(None, description="D = k2 A1 - k1 A2")
    restricted_form: list[list[float]] | None = Field(None, description="K^T D K")
    r: list[int] | None = None
    r_signature: SignatureModel | None = None
    case: CaseLabel
    violation: str | None = None


class ContactEvidence(BaseModel):
    contact: ContactModel
    julia: JuliaModel
    jacobian: JacobianModel | None = None
    pairs: list[PairModel] = Field(default_factory=list)


class Tolerances(BaseModel):
    tol_contact: float
    tol_sig: float
    tol_dep: float
    tol_jac: float
    tol_julia: float
    grid_n: int
    screen_grid_n: int
    samples_per_component: int


# ---------------------------------------------------------------------------
# Relatórios de classificação
# ---------------------------------------------------------------------------
class BoundednessReport(BaseModel):
    """Veredito de limitação do operador de composição."""

    schema_version: str = SCHEMA_VERSION
    kind: Literal["boundedness"] = "boundedness"
    verdict: Verdict
    dimension: int
    symbol: list[str]
    contacts: list[ContactEvidence] = Field(default_factory=list)
    violations: list[str] = Field(default_factory=list)
    tolerances: Tolerances
    self_map: SelfMapReport
    fragile: bool = False
    caveats: list[str] = Field(default_factory=list)
    divergences: list[str] = Field(default_factory=list)
    diagnostics: dict[str, Any] = Field(default_factory=dict)


class CompactnessTrigger(BaseModel):
    kind: Literal["full-contact", "dependent-pair", "variable-drop", "monomial-component"]
    contact: int = Field(..., description="Posição do contato em 'contacts'")
    index_set: list[int]
    detail: str


class SufficientCheck(BaseModel):
    contact: int
    index_set: list[int]
    passed: bool
    detail: str


class OracleEvidence(BaseModel):
    """Tendência da razão medida / delta^budget (não certificada)."""

    anchor: list[float]
    constrained: list[int]
    slope: float | None
    slope_stderr: float | None
    budget: int
    ratio_trend: float | None
    verdict_hint: VerdictHint
    sampler: Literal["plain", "importance"]
    note: str


class CompactnessReport(BaseModel):
    """Veredito de compacidade em três valores."""

    schema_version: str = SCHEMA_VERSION
    kind: Literal["compactness"] = "compactness"
    verdict: CompactnessVerdict
    boundedness_verdict: Verdict
    triggers: list[CompactnessTrigger] = Field(default_factory=list)
    checks: list[SufficientCheck] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)
    oracle: OracleEvidence | None = None


class ContactsReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal["contacts"] = "contacts"
    dimension: int
    grid_n: int
    tol_contact: float
    self_map: SelfMapReport
    contacts: list[ContactModel]
    caveats: list[str] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Oráculo de Monte-Carlo
# ---------------------------------------------------------------------------
class MeasureModel(BaseModel):
    delta: float
    mean: float
    stderr: float
    samples: int
    sampler: str
    half_widths: list[float] | None = None
    seed: int
    budget: int
    ratio: float = Field(..., description="measure / delta^budget")


class CoverageCheck(BaseModel):
    """Comparação importância x amostrador simples no maior delta."""

    delta: float
    importance_mean: float
    importance_stderr: float
    plain_mean: float
    plain_stderr: float
    consistent: bool


class ScalingFitReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal["scaling"] = "scaling"
    dimension: int
    symbol: list[str]
    anchor: list[float]
    constrained: list[int]
    estimates: list[MeasureModel]
    slope: float | None
    slope_stderr: float | None
    intercept: float | None
    budget: int
    verdict_hint: VerdictHint
    ratio_trend: float | None
    flags: list[str] = Field(default_factory=list)
    coverage: CoverageCheck | None = None
    seed: int
    samples: int


class CalibrationEntry(BaseModel):
    set_id: Literal["L33", "L34", "L35"]
    params: dict[str, float] = Field(default_factory=dict)
    delta: float
    mean: float
    stderr: float
    samples: int
    reference: float
    reference_method: str
    lower_bound: float | None = None
    upper_bound: float | None = None
    within_4_stderr: bool
    bound_satisfied: bool | None = None


class CalibrationReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    kind: Literal["calibration"] = "calibration"
    seed: int
    samples: int
    entries: list[CalibrationEntry]


class ClassificationOutput(BaseModel):
    """Saída de ``classify --compactness``: os dois relatórios juntos."""

    schema_version: str = SCHEMA_VERSION
    kind: Literal["classification"] = "classification"
    boundedness: BoundednessReport
    compactness: CompactnessReport
