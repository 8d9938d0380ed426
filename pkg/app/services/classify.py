"""
Motor de decisão: limitação (tabela de casos para d=3, regra do jacobiano
para d=2) e compacidade em três valores.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from app.core.config import Settings, get_settings
from app.core.exceptions import InvalidInputError, NotAContactError, SelfMapScreenError
from app.schemas.report_schema import (
    BoundednessReport,
    CompactnessReport,
    CompactnessTrigger,
    ContactEvidence,
    JacobianModel,
    OracleEvidence,
    PairModel,
    SignatureModel,
    SufficientCheck,
    Tolerances,
)
from app.services.carleson import MonteCarloConfig, ratio_trend, scaling_fit
from app.services.contact import (
    ContactRecord,
    JuliaCheck,
    contact_model,
    find_contacts,
    julia_caratheodory,
    julia_model,
)
from app.services.jets import real_strata, symbol_jet
from app.services.polysym import (
    Symbol,
    dependent_variables,
    format_polynomial,
    is_unimodular_monomial,
    self_map_report,
)
from app.services.quadform import FRAGILE_FACTOR, Signature, kernel_basis, restrict, signature

logger = logging.getLogger("polydisc.classify")

DEGENERATE_GRADIENT = 1e-10

OraclePolicy = Literal["off", "advisory"]

SAMPLING_CAVEAT = (
    "componentes de contato de dimensão positiva são representadas por "
    "{n} amostras; o veredito é a conjunção sobre as amostras"
)
GRID_CAVEAT = (
    "varredura em grade {n}^{d} (passo 2pi/{n}); componentes mais finas "
    "que a grade podem não ser detectadas"
)
SCREEN_CAVEAT = "triagem de auto-mapa consultiva: igualdade nos contatos impede certificação"
ASSERTED_CAVEAT = "usuário declarou phi auto-mapa; falha da triagem ignorada"
KAPPA_DIVERGENCE = (
    "forma residual usada: parte quadrática de k2 Im psi1 - k1 Im psi2 restrita a "
    "ker(Q1+Q2); com k1 != k2 ela difere da exibição com coeficientes "
    "normalizados por kappa (par {pair}, k = ({k1:.6g}, {k2:.6g}))"
)
CURVE_DIVERGENCE = (
    "par {pair} em xi = {xi}: s = 2 e a forma residual se anula em ker(Q1+Q2); "
    "a parte de Im fora do núcleo não entra em r e o veredito segue a tabela "
    "de casos (Unbounded) para todo parâmetro da família; o oráculo de "
    "Monte-Carlo arbitra via inclinação abaixo do orçamento"
)


# ---------------------------------------------------------------------------
# PairAnalysis
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class PairAnalysis:
    """Formas de um par I' = (i1, i2) num contato (matrizes theta^T M theta)."""

    xi: tuple[float, ...]
    pair: tuple[int, int]
    l1: np.ndarray
    l2: np.ndarray
    independent: bool
    independence_margin: float
    q1: np.ndarray
    q2: np.ndarray
    s_form: np.ndarray
    s_signature: Signature
    kappa: tuple[float, float] | None = None
    kernel: np.ndarray | None = None
    a1: np.ndarray | None = None
    a2: np.ndarray | None = None
    residual_form: np.ndarray | None = None
    restricted_form: np.ndarray | None = None
    r_signature: Signature | None = None
    case: str = "a"
    violation: str | None = None
    tol_dep: float = 1e-7

    @property
    def s(self) -> int:
        return self.s_signature.p

    @property
    def r(self) -> tuple[int, int] | None:
        return None if self.r_signature is None else self.r_signature.inertia

    @property
    def fragile(self) -> bool:
        m = self.independence_margin
        near_dep = self.tol_dep / FRAGILE_FACTOR < m < self.tol_dep * FRAGILE_FACTOR
        sig_fragile = self.s_signature.fragile or (
            self.r_signature is not None and self.r_signature.fragile
        )
        return near_dep or sig_fragile


def _case_label(s: int, r: tuple[int, int]) -> tuple[str, str | None]:
    if s == 3:
        return "b", None
    if s == 2:
        if r in ((1, 0), (0, 1)):
            return "c", None
        return "violation", f"s=2 exige r em {{(1,0),(0,1)}}, obtido r={r}"
    if s == 1:
        if r in ((2, 0), (0, 2)):
            return "d", None
        return "violation", f"s=1 exige r em {{(2,0),(0,2)}}, obtido r={r}"
    raise InvalidInputError(f"s={s} fora de 1..3")


def analyze_pair(
    s: Symbol,
    r: ContactRecord,
    pair: Sequence[int],
    *,
    tol_sig: float = 1e-8,
    tol_dep: float = 1e-7,
    kappa_scale: float = 1.0,
) -> PairAnalysis:
    """
    Análise de segunda ordem de um par de componentes num contato.

    Parameters
    ----------
    s : Symbol
        Símbolo (d = 3).
    r : ContactRecord
        Contato refinado cujo I contém o par.
    pair : Sequence[int]
        Índices (i1, i2), base 1, na ordem usada para kappa.
    tol_sig, tol_dep : float
        Tolerâncias de assinatura e de dependência dos gradientes.
    kappa_scale : float
        Normalização k1 = kappa_scale > 0.

    Returns
    -------
    PairAnalysis
        Formas, assinaturas e o rótulo do caso (a, b, c, d ou violação).

    Raises
    ------
    InvalidInputError
        Gradiente degenerado, Q1+Q2 com parte negativa ou s = 0.
    """
    i1, i2 = (int(i) for i in pair)
    if i1 == i2 or i1 not in r.index_set or i2 not in r.index_set:
        raise ValueError(f"par {pair} não contido em I = {r.index_set}")
    if kappa_scale <= 0:
        raise ValueError("kappa_scale precisa ser positivo")

    strata = [
        real_strata(symbol_jet(s.components[i - 1], r.xi, r.eta_of(i))) for i in (i1, i2)
    ]
    l1, l2 = strata[0].im_grad, strata[1].im_grad
    n1, n2 = float(np.linalg.norm(l1)), float(np.linalg.norm(l2))
    if n1 <= DEGENERATE_GRADIENT or n2 <= DEGENERATE_GRADIENT:
        raise InvalidInputError(
            "gradiente de Im degenerado num contato",
            {"xi": list(r.xi), "pair": [i1, i2], "norms": [n1, n2]},
        )
    margin = float(np.linalg.norm(np.cross(l1, l2)) / (n1 * n2))
    q1, q2 = strata[0].contact_form, strata[1].contact_form
    s_form = q1 + q2
    s_sig = signature(s_form, tol_sig)
    if s_sig.q != 0:
        raise InvalidInputError(
            "Q1 + Q2 tem autovalor negativo: contato não é máximo de |phi|",
            {"xi": list(r.xi), "pair": [i1, i2], "eigenvalues": list(s_sig.eigenvalues)},
        )
    if s_sig.p == 0:
        raise InvalidInputError(
            "s = 0 num contato de par", {"xi": list(r.xi), "pair": [i1, i2]}
        )

    common = dict(
        xi=r.xi,
        pair=(i1, i2),
        l1=l1,
        l2=l2,
        independence_margin=margin,
        q1=q1,
        q2=q2,
        s_form=s_form,
        s_signature=s_sig,
        tol_dep=tol_dep,
    )
    if margin > tol_dep:
        return PairAnalysis(independent=True, case="a", **common)

    k1 = kappa_scale
    k2 = kappa_scale * float(l2 @ l1) / float(l1 @ l1)
    residual = float(np.linalg.norm(l2 - (k2 / k1) * l1))
    if residual > tol_dep * max(n1, n2):
        raise InvalidInputError(
            "gradientes quase paralelos mas kappa não reproduz l2",
            {"xi": list(r.xi), "pair": [i1, i2], "residual": residual},
        )
    a1, a2 = strata[0].imaginary_form, strata[1].imaginary_form
    kernel = kernel_basis(s_form, tol_sig)
    d_form = k2 * a1 - k1 * a2
    restricted = restrict(d_form, kernel)
    scale = max(
        float(np.max(np.abs(s_sig.eigenvalues))),
        abs(k1) * float(np.linalg.norm(a1, 2)),
        abs(k2) * float(np.linalg.norm(a2, 2)),
    )
    r_sig = signature(restricted, tol_sig, scale=scale)
    case, violation = _case_label(s_sig.p, r_sig.inertia)
    return PairAnalysis(
        independent=False,
        kappa=(k1, k2),
        kernel=kernel,
        a1=a1,
        a2=a2,
        residual_form=d_form,
        restricted_form=restricted,
        r_signature=r_sig,
        case=case,
        violation=violation,
        **common,
    )


# ---------------------------------------------------------------------------
# Jacobiano (|I| = d)
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class JacobianCheck:
    determinant: complex
    scale: float
    tol: float

    @property
    def ratio(self) -> float:
        return abs(self.determinant) / self.scale if self.scale > 0 else 0.0

    @property
    def violation(self) -> bool:
        return self.ratio <= self.tol

    @property
    def fragile(self) -> bool:
        return self.tol / FRAGILE_FACTOR < self.ratio < self.tol * FRAGILE_FACTOR


def jacobian_check(s: Symbol, r: ContactRecord, tol_jac: float = 1e-8) -> JacobianCheck:
    """det dphi(xi) comparado à cota de Hadamard prod ||linha||."""
    jac = s.jacobian(r.point)
    scale = float(np.prod(np.linalg.norm(jac, axis=1)))
    return JacobianCheck(determinant=complex(np.linalg.det(jac)), scale=scale, tol=tol_jac)


# ---------------------------------------------------------------------------
# Coleta de evidências
# ---------------------------------------------------------------------------
@dataclass
class ContactAnalysis:
    record: ContactRecord
    julia: JuliaCheck
    jacobian: JacobianCheck | None = None
    pairs: list[PairAnalysis] = field(default_factory=list)


@dataclass
class BoundednessRun:
    """Resultado interno completo, reaproveitado pela compacidade."""

    symbol: Symbol
    report: BoundednessReport
    analyses: list[ContactAnalysis] = field(default_factory=list)


def _signature_model(sig: Signature) -> SignatureModel:
    return SignatureModel(
        p=sig.p,
        q=sig.q,
        z=sig.z,
        eigenvalues=list(sig.eigenvalues),
        scale=sig.scale,
        tol=sig.tol,
        nonzero_margin=sig.nonzero_margin,
        zero_margin=sig.zero_margin,
        fragile=sig.fragile,
    )


def pair_model(pa: PairAnalysis) -> PairModel:
    return PairModel(
        pair=list(pa.pair),
        independent=pa.independent,
        independence_margin=pa.independence_margin,
        l1=pa.l1.tolist(),
        l2=pa.l2.tolist(),
        kappa=None if pa.kappa is None else list(pa.kappa),
        q1=pa.q1.tolist(),
        q2=pa.q2.tolist(),
        s_form=pa.s_form.tolist(),
        s=pa.s,
        s_signature=_signature_model(pa.s_signature),
        kernel=[] if pa.kernel is None else pa.kernel.T.tolist(),
        residual_form=None if pa.residual_form is None else pa.residual_form.tolist(),
        restricted_form=None if pa.restricted_form is None else pa.restricted_form.tolist(),
        r=None if pa.r is None else list(pa.r),
        r_signature=None if pa.r_signature is None else _signature_model(pa.r_signature),
        case=pa.case,
        violation=pa.violation,
    )


def _jacobian_model(jc: JacobianCheck) -> JacobianModel:
    return JacobianModel(
        determinant=[jc.determinant.real, jc.determinant.imag],
        abs_det=abs(jc.determinant),
        scale=jc.scale,
        ratio=jc.ratio,
        violation=jc.violation,
    )


def _tolerances(cfg: Settings) -> Tolerances:
    return Tolerances(
        tol_contact=cfg.TOL_CONTACT,
        tol_sig=cfg.TOL_SIG,
        tol_dep=cfg.TOL_DEP,
        tol_jac=cfg.TOL_JAC,
        tol_julia=cfg.TOL_JULIA,
        grid_n=cfg.GRID_N,
        screen_grid_n=cfg.SCREEN_GRID_N,
        samples_per_component=cfg.SAMPLES_PER_COMPONENT,
    )


def _divergences(pa: PairAnalysis, cfg: Settings) -> list[str]:
    notes = []
    if pa.kappa is not None:
        k1, k2 = pa.kappa
        if abs(k2 - k1) > 1e-9 * abs(k1):
            notes.append(KAPPA_DIVERGENCE.format(pair=list(pa.pair), k1=k1, k2=k2))
        if pa.s == 2 and pa.r == (0, 0):
            xi = [round(x, 6) for x in pa.xi]
            notes.append(CURVE_DIVERGENCE.format(pair=list(pa.pair), xi=xi))
    return notes


def run_boundedness(
    s: Symbol,
    settings: Settings | None = None,
    *,
    assume_self_map: bool = False,
    kappa_scale: float = 1.0,
) -> BoundednessRun:
    """
    Executa a classificação de limitação e devolve também as análises internas.

    Raises
    ------
    SelfMapScreenError
        Quando a triagem falha e ``assume_self_map`` é falso.
    """
    cfg = settings or get_settings()
    logger.info("Classificando limitação | d=%d | grid_n=%d", s.dimension, cfg.GRID_N)
    screen = self_map_report(
        s, cfg.SCREEN_GRID_N, cfg.SELF_MAP_MARGIN, assume_self_map=assume_self_map
    )
    if not screen.passed and not assume_self_map:
        raise SelfMapScreenError(screen)

    caveats = [
        SCREEN_CAVEAT,
        SAMPLING_CAVEAT.format(n=cfg.SAMPLES_PER_COMPONENT),
        GRID_CAVEAT.format(n=cfg.GRID_N, d=s.dimension),
    ]
    if assume_self_map:
        caveats.append(ASSERTED_CAVEAT)

    records = find_contacts(
        s,
        cfg.GRID_N,
        cfg.TOL_CONTACT,
        samples_per_component=cfg.SAMPLES_PER_COMPONENT,
        refine_tol=cfg.REFINE_TOL,
        max_iter=cfg.REFINE_MAX_ITER,
        polish_dps=cfg.POLISH_DPS,
    )

    analyses: list[ContactAnalysis] = []
    violations: list[str] = []
    divergences: list[str] = []
    fragile = False
    diagnostics: dict = {}
    invalid: str | None = None

    for position, record in enumerate(records):
        julia = julia_caratheodory(s, record, cfg.TOL_JULIA)
        item = ContactAnalysis(record=record, julia=julia)
        analyses.append(item)
        if not julia.valid:
            invalid = f"Julia-Carathéodory falhou no contato {position}: {', '.join(julia.reasons)}"
            diagnostics = {"contact": position, "xi": list(record.xi), "reasons": list(julia.reasons)}
            break
        if len(record.index_set) == s.dimension:
            item.jacobian = jacobian_check(s, record, cfg.TOL_JAC)
            fragile = fragile or item.jacobian.fragile
            if item.jacobian.violation:
                violations.append(
                    f"contato {position}: dphi(xi) não invertível "
                    f"(|det|/escala = {item.jacobian.ratio:.3e})"
                )
        if s.dimension == 3:
            try:
                for pair in itertools.combinations(record.index_set, 2):
                    pa = analyze_pair(
                        s,
                        record,
                        pair,
                        tol_sig=cfg.TOL_SIG,
                        tol_dep=cfg.TOL_DEP,
                        kappa_scale=kappa_scale,
                    )
                    item.pairs.append(pa)
                    fragile = fragile or pa.fragile
                    for note in _divergences(pa, cfg):
                        if note not in divergences:
                            divergences.append(note)
                    if pa.violation:
                        violations.append(f"contato {position}, par {list(pair)}: {pa.violation}")
            except (InvalidInputError, NotAContactError) as exc:
                invalid = f"contato {position}: {exc}"
                diagnostics = {"contact": position, "xi": list(record.xi)}
                diagnostics.update(getattr(exc, "diagnostics", {}))
                break

    if invalid is not None:
        verdict = "Invalid"
        logger.warning("Símbolo inválido | %s", invalid)
        diagnostics["reason"] = invalid
    else:
        verdict = "Unbounded" if violations else "Bounded"
    if fragile:
        logger.warning("Classificação frágil: margem a menos de 10x da tolerância")

    report = BoundednessReport(
        verdict=verdict,
        dimension=s.dimension,
        symbol=[format_polynomial(p) for p in s.components],
        contacts=[
            ContactEvidence(
                contact=contact_model(a.record),
                julia=julia_model(a.julia),
                jacobian=None if a.jacobian is None else _jacobian_model(a.jacobian),
                pairs=[pair_model(pa) for pa in a.pairs],
            )
            for a in analyses
        ],
        violations=violations,
        tolerances=_tolerances(cfg),
        self_map=screen,
        fragile=fragile,
        caveats=caveats,
        divergences=divergences,
        diagnostics=diagnostics,
    )
    logger.info("Veredito de limitação | %s | contatos=%d", verdict, len(records))
    return BoundednessRun(symbol=s, report=report, analyses=analyses)


def classify_boundedness(
    s: Symbol, settings: Settings | None = None, *, assume_self_map: bool = False
) -> BoundednessReport:
    """Bounded / Unbounded / Invalid com toda a evidência por contato."""
    return run_boundedness(s, settings, assume_self_map=assume_self_map).report


# ---------------------------------------------------------------------------
# Compacidade
# ---------------------------------------------------------------------------
def _triggers(s: Symbol, analyses: list[ContactAnalysis]) -> list[CompactnessTrigger]:
    d = s.dimension
    out: list[CompactnessTrigger] = []
    for position, a in enumerate(analyses):
        index_set = list(a.record.index_set)
        if len(index_set) == d:
            out.append(
                CompactnessTrigger(
                    kind="full-contact",
                    contact=position,
                    index_set=index_set,
                    detail="phi(xi) pertence a T^d",
                )
            )
        for pa in a.pairs:
            if not pa.independent:
                out.append(
                    CompactnessTrigger(
                        kind="dependent-pair",
                        contact=position,
                        index_set=list(pa.pair),
                        detail=f"gradientes dependentes (margem {pa.independence_margin:.3e})",
                    )
                )
        variables = set()
        for i in index_set:
            variables.update(dependent_variables(s.components[i - 1]))
        needed = min(d, len(index_set) + 1)
        if len(variables) < needed:
            missing = sorted(set(range(1, d + 1)) - variables)
            out.append(
                CompactnessTrigger(
                    kind="variable-drop",
                    contact=position,
                    index_set=index_set,
                    detail=f"phi_I não depende de {['z%d' % k for k in missing]}",
                )
            )
        for i in index_set:
            if is_unimodular_monomial(s.components[i - 1]):
                out.append(
                    CompactnessTrigger(
                        kind="monomial-component",
                        contact=position,
                        index_set=[i],
                        detail=f"phi_{i} é constante unimodular vezes monômio",
                    )
                )
    return out


def _sufficient(s: Symbol, a: ContactAnalysis, position: int, tol_sig: float) -> SufficientCheck:
    d = s.dimension
    record = a.record
    index_set = list(record.index_set)
    if len(index_set) == 1:
        i = index_set[0]
        q = real_strata(symbol_jet(s.components[i - 1], record.xi, record.eta_of(i))).contact_form
        sig = signature(q, tol_sig)
        accepted = {(2, 0)} if d == 2 else {(2, 0), (3, 0)}
        passed = sig.inertia in accepted
        return SufficientCheck(
            contact=position,
            index_set=index_set,
            passed=passed,
            detail=f"assinatura de Q_{i} = {sig.inertia}",
        )
    if len(index_set) == 2 and d == 3 and a.pairs:
        pa = a.pairs[0]
        sig1, sig2 = signature(pa.q1, tol_sig), signature(pa.q2, tol_sig)
        passed = pa.independent and sig1.inertia == (3, 0) and sig2.inertia == (3, 0)
        return SufficientCheck(
            contact=position,
            index_set=index_set,
            passed=passed,
            detail=(
                f"independentes={pa.independent}, assinaturas Q = "
                f"{sig1.inertia}, {sig2.inertia}"
            ),
        )
    return SufficientCheck(
        contact=position,
        index_set=index_set,
        passed=False,
        detail="sem teste suficiente de ordem 2 para este I",
    )


def oracle_evidence(s: Symbol, a: ContactAnalysis, mc: MonteCarloConfig) -> OracleEvidence:
    deltas = np.geomspace(1e-3, 1e-1, 5)
    fit = scaling_fit(s, a.record, a.record.index_set, deltas, mc)
    return OracleEvidence(
        anchor=list(a.record.xi),
        constrained=list(a.record.index_set),
        slope=fit.slope,
        slope_stderr=fit.slope_stderr,
        budget=fit.budget,
        ratio_trend=ratio_trend(fit),
        verdict_hint=fit.verdict_hint,
        sampler="importance" if any(e.sampler == "importance" for e in fit.estimates) else "plain",
        note=(
            "evidência não certificada: tendência positiva (razão -> 0) é compatível "
            "com compacidade; tendência nula indica razão limitada inferiormente"
        ),
    )


def compactness_from_run(
    run: BoundednessRun,
    oracle_policy: OraclePolicy = "off",
    settings: Settings | None = None,
    mc: MonteCarloConfig | None = None,
) -> CompactnessReport:
    """
    Veredito de compacidade a partir de uma execução de limitação já feita.

    ``mc`` controla o oráculo consultivo; sem ele, usa ``MonteCarloConfig.from_settings``.
    """
    cfg = settings or get_settings()
    bounded = run.report.verdict
    if bounded == "Unbounded":
        return CompactnessReport(
            verdict="NotCompact",
            boundedness_verdict=bounded,
            notes=["operador não limitado: compacidade é vacuamente falsa"],
        )
    if bounded == "Invalid":
        return CompactnessReport(
            verdict="Undetermined",
            boundedness_verdict=bounded,
            notes=["símbolo inválido: compacidade não avaliada"],
        )
    if not run.analyses:
        return CompactnessReport(
            verdict="Compact",
            boundedness_verdict=bounded,
            notes=["sem contatos: phi(fecho do polidisco) longe da fronteira"],
        )

    s = run.symbol
    triggers = _triggers(s, run.analyses)
    if triggers:
        logger.info("Compacidade | NotCompact | gatilhos=%d", len(triggers))
        return CompactnessReport(
            verdict="NotCompact", boundedness_verdict=bounded, triggers=triggers
        )

    checks = [_sufficient(s, a, k, cfg.TOL_SIG) for k, a in enumerate(run.analyses)]
    if all(c.passed for c in checks):
        return CompactnessReport(verdict="Compact", boundedness_verdict=bounded, checks=checks)

    oracle = None
    if oracle_policy == "advisory":
        failing = next(k for k, c in enumerate(checks) if not c.passed)
        oracle = oracle_evidence(
            s, run.analyses[failing], mc or MonteCarloConfig.from_settings(cfg)
        )
    return CompactnessReport(
        verdict="Undetermined",
        boundedness_verdict=bounded,
        checks=checks,
        notes=["nenhuma condição necessária certificável falhou e o teste de ordem 2 não fecha"],
        oracle=oracle,
    )


def classify_compactness(
    s: Symbol,
    oracle_policy: OraclePolicy = "off",
    settings: Settings | None = None,
    *,
    assume_self_map: bool = False,
    mc: MonteCarloConfig | None = None,
) -> CompactnessReport:
    """Compact / NotCompact / Undetermined."""
    run = run_boundedness(s, settings, assume_self_map=assume_self_map)
    return compactness_from_run(run, oracle_policy, settings, mc)
