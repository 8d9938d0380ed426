"""
Oráculo numérico independente: medidas de Monte-Carlo de pré-imagens de
caixas de Carleson, ajuste de expoentes de escala e calibração contra
conjuntos planos com medida conhecida.

Aleatoriedade: fluxos Philox indexados por (seed, bloco); cada bloco conta
acertos inteiros e a redução é uma soma em ordem fixa, de modo que o
resultado não depende do número de threads.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Sequence, TextIO

import numpy as np
from scipy import integrate

from app.core.config import Settings, get_settings
from app.schemas.report_schema import (
    BoundednessReport,
    CalibrationEntry,
    CoverageCheck,
    MeasureModel,
    ScalingFitReport,
)
from app.services.contact import ContactRecord
from app.services.polysym import Symbol, evaluate_many, evaluate_on_torus, format_polynomial

logger = logging.getLogger("polydisc.carleson")

UNCONSTRAINED = 2.0
MIN_SAMPLES = 10_000
MIN_HITS = 20
HIT_EXTENT_SAFETY = 1.5
RAY_SAFETY = 3.0
RAY_DIRECTIONS = 200
MAX_INTEGER_ENTRY = 6
SIGNIFICANCE = 5.0
COVERAGE_SIGMAS = 4.0

SamplerKind = Literal["plain", "importance"]


# ---------------------------------------------------------------------------
# Configuração e tipos
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class MonteCarloConfig:
    """Parâmetros de amostragem; ``seed`` e ``samples`` definem o resultado."""

    samples: int = 1_000_000
    seed: int = 0
    chunk: int = 65_536
    workers: int = 4
    importance: bool = True
    importance_factor: float = 10.0

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed precisa ser não negativa")
        if self.chunk < 1 or self.workers < 1:
            raise ValueError("chunk e workers precisam ser positivos")

    @classmethod
    def from_settings(cls, cfg: Settings | None = None, **overrides) -> "MonteCarloConfig":
        cfg = cfg or get_settings()
        base = cls(
            samples=cfg.MC_SAMPLES,
            seed=cfg.MC_SEED,
            chunk=cfg.MC_CHUNK,
            workers=cfg.MC_WORKERS,
            importance_factor=cfg.IMPORTANCE_FACTOR,
        )
        return replace(base, **overrides)


@dataclass(frozen=True)
class BoxSpec:
    """
    Caixa S(eta, delta) ou janela W(eta, delta) em coordenadas de componente.

    ``eta`` são ângulos-alvo; raio 2 marca componente livre. Janelas aceitam
    raios radiais próprios (1 - |w_k| <= radial_radii[k]).
    """

    eta: tuple[float, ...]
    radii: tuple[float, ...]
    kind: Literal["box", "window"] = "box"
    radial_radii: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "eta", tuple(float(x) for x in self.eta))
        object.__setattr__(self, "radii", tuple(float(x) for x in self.radii))
        if len(self.eta) != len(self.radii):
            raise ValueError("eta e radii precisam ter o mesmo comprimento")
        if any(not 0.0 < r <= UNCONSTRAINED for r in self.radii):
            raise ValueError(f"raios fora de (0, 2]: {self.radii}")
        if self.radial_radii is not None:
            if self.kind != "window":
                raise ValueError("raios radiais só se aplicam a janelas")
            radial = tuple(float(x) for x in self.radial_radii)
            if len(radial) != len(self.radii) or any(not 0.0 < r <= UNCONSTRAINED for r in radial):
                raise ValueError(f"raios radiais inválidos: {self.radial_radii}")
            object.__setattr__(self, "radial_radii", radial)

    @classmethod
    def uniform(
        cls, eta: Sequence[float], constrained: Sequence[int], delta: float
    ) -> "BoxSpec":
        """Raio ``delta`` nas componentes de ``constrained`` (base 1), 2 nas demais."""
        radii = tuple(delta if k + 1 in constrained else UNCONSTRAINED for k in range(len(eta)))
        return cls(eta=tuple(eta), radii=radii)

    @property
    def radial(self) -> tuple[float, ...]:
        return self.radial_radii if self.radial_radii is not None else self.radii

    @property
    def constrained(self) -> tuple[int, ...]:
        if self.kind == "window":
            return tuple(
                k + 1
                for k, (a, b) in enumerate(zip(self.radii, self.radial))
                if a < UNCONSTRAINED or b < UNCONSTRAINED
            )
        return tuple(k + 1 for k, r in enumerate(self.radii) if r < UNCONSTRAINED)

    def levels(self, w: dict[int, np.ndarray]) -> np.ndarray:
        """max_k distância_k / raio_k; o ponto pertence à caixa sse nível <= 1."""
        level = None
        for k in self.constrained:
            target = np.exp(1j * self.eta[k - 1])
            wk = w[k]
            if self.kind == "box":
                lk = np.abs(wk - target) / self.radii[k - 1]
            else:
                lk = np.zeros(wk.shape)
                if self.radii[k - 1] < UNCONSTRAINED:
                    dt = np.abs(np.angle(wk * np.conj(target)))
                    lk = dt / self.radii[k - 1]
                if self.radial[k - 1] < UNCONSTRAINED:
                    lk = np.maximum(lk, (1.0 - np.abs(wk)) / self.radial[k - 1])
            level = lk if level is None else np.maximum(level, lk)
        return level

    def contains(self, w: dict[int, np.ndarray]) -> np.ndarray:
        return self.levels(w) <= 1.0


@dataclass(frozen=True, eq=False)
class ImportanceRegion:
    """Caixa anchor + F u, u em prod [-h_k, h_k]; colunas de F ortonormais."""

    anchor: np.ndarray
    frame: np.ndarray
    half_widths: np.ndarray
    periodic_axes: int = 0

    @property
    def volume(self) -> float:
        d = self.frame.shape[0]
        return float(np.prod(2.0 * self.half_widths) / (2.0 * math.pi) ** d)

    def with_transverse(self, widths: np.ndarray) -> "ImportanceRegion":
        h = self.half_widths.copy()
        h[self.periodic_axes :] = widths
        return replace(self, half_widths=h)

    @property
    def transverse(self) -> np.ndarray:
        return self.half_widths[self.periodic_axes :]


@dataclass(frozen=True, eq=False)
class MeasureEstimate:
    mean: float
    stderr: float
    n: int
    hits: int
    sampler: SamplerKind
    seed: int
    region_volume: float = 1.0
    half_widths: tuple[float, ...] | None = None
    hit_levels: np.ndarray | None = field(default=None, repr=False)
    hit_offsets: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class ScalingFit:
    deltas: tuple[float, ...]
    estimates: tuple[MeasureEstimate, ...]
    anchor: tuple[float, ...]
    constrained: tuple[int, ...]
    slope: float | None
    slope_stderr: float | None
    intercept: float | None
    budget: int
    verdict_hint: Literal["consistent-bounded", "blow-up", "inconclusive"]
    flags: tuple[str, ...] = ()
    coverage: CoverageCheck | None = None

    def ratios(self) -> list[float]:
        return [e.mean / d**self.budget for d, e in zip(self.deltas, self.estimates)]


# ---------------------------------------------------------------------------
# Motor de Monte-Carlo
# ---------------------------------------------------------------------------
def stream(seed: int, index: int) -> np.random.Generator:
    """Gerador Philox com chave (seed, index)."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


ChunkFn = Callable[[np.random.Generator, int], tuple[int, object]]


def _run_chunks(cfg: MonteCarloConfig, chunk_fn: ChunkFn) -> tuple[int, list]:
    sizes = [cfg.chunk] * (cfg.samples // cfg.chunk)
    if cfg.samples % cfg.chunk:
        sizes.append(cfg.samples % cfg.chunk)

    def work(index: int) -> tuple[int, object]:
        return chunk_fn(stream(cfg.seed, index), sizes[index])

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(work, range(len(sizes))))
    hits = sum(r[0] for r in results)
    return hits, [r[1] for r in results]


def _estimate(hits: int, n: int, volume: float) -> tuple[float, float]:
    p = hits / n
    stderr = volume * math.sqrt(p * (1.0 - p) / (n - 1)) if n > 1 else 0.0
    return volume * p, stderr


def _component_values(s: Symbol, ks: Sequence[int], angles: np.ndarray) -> dict[int, np.ndarray]:
    return {k: evaluate_on_torus(s.components[k - 1], angles) for k in ks}


# ---------------------------------------------------------------------------
# Regiões de importância
# ---------------------------------------------------------------------------
def free_directions(s: Symbol, constrained: Sequence[int]) -> np.ndarray:
    """Base ortonormal (colunas) de direções theta que deixam phi_C invariante."""
    d = s.dimension
    rows = [
        alpha
        for k in constrained
        for alpha in s.components[k - 1].terms
        if any(alpha)
    ]
    if not rows:
        return np.eye(d)
    _, sv, vh = np.linalg.svd(np.array(rows, dtype=np.float64))
    rank = int(np.sum(sv > 1e-10 * sv.max()))
    return vh[rank:].T


def integer_direction(v: np.ndarray) -> np.ndarray | None:
    """Vetor inteiro m (|m_i| <= 6) paralelo a v, se existir."""
    w = v / np.max(np.abs(v))
    for q in range(1, MAX_INTEGER_ENTRY + 1):
        cand = np.round(w * q)
        if np.max(np.abs(w * q - cand)) < 1e-9 and np.max(np.abs(cand)) <= MAX_INTEGER_ENTRY:
            g = np.gcd.reduce(np.abs(cand).astype(np.int64))
            return cand / max(int(g), 1)
    return None


def _injectivity_bound(transverse: np.ndarray) -> float:
    d, k = transverse.shape
    if k == 0:
        return math.pi
    shortest = math.inf
    for n in itertools.product(range(-3, 4), repeat=d):
        if not any(n):
            continue
        norm = float(np.linalg.norm(transverse.T @ np.array(n, dtype=np.float64)))
        if norm > 1e-12:
            shortest = min(shortest, norm)
    return min(math.pi, 2.0 * math.pi * shortest / (2.0 * math.sqrt(max(k, 1))))


def importance_region(
    s: Symbol,
    box: BoxSpec,
    anchor: Sequence[float],
    factor: float = 10.0,
) -> ImportanceRegion | None:
    """
    Região de importância com teto c * delta_min^(1/3) nas direções transversais.

    Nenhuma direção livre: caixa nos eixos. Uma direção livre racional m:
    período completo pi ||m|| ao longo dela. Caso contrário ``None``
    (amostrador simples).
    """
    d = s.dimension
    constrained = box.constrained
    free = free_directions(s, constrained)
    delta_min = min(min(box.radii), min(box.radial))
    ceiling = factor * delta_min ** (1.0 / 3.0)
    anchor = np.asarray(anchor, dtype=np.float64)

    if free.shape[1] == 0:
        frame = np.eye(d)
        widths = np.full(d, min(ceiling, math.pi))
        return ImportanceRegion(anchor=anchor, frame=frame, half_widths=widths)
    if free.shape[1] > 1:
        return None
    m = integer_direction(free[:, 0])
    if m is None:
        return None
    axis = m / np.linalg.norm(m)
    # complemento ortonormal de m
    q, _ = np.linalg.qr(np.column_stack([axis, np.eye(d)]))
    transverse = q[:, 1:d]
    frame = np.column_stack([axis, transverse])
    cap = _injectivity_bound(transverse)
    widths = np.concatenate([[math.pi * np.linalg.norm(m)], np.full(d - 1, min(ceiling, cap))])
    return ImportanceRegion(anchor=anchor, frame=frame, half_widths=widths, periodic_axes=1)


def _directions(k: int) -> np.ndarray:
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        t = 2.0 * math.pi * np.arange(RAY_DIRECTIONS) / RAY_DIRECTIONS
        return np.column_stack([np.cos(t), np.sin(t)])
    # esfera de Fibonacci mais os eixos
    i = np.arange(RAY_DIRECTIONS) + 0.5
    z = 1.0 - 2.0 * i / RAY_DIRECTIONS
    phi = math.pi * (1.0 + 5**0.5) * i
    r = np.sqrt(1.0 - z**2)
    fib = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return np.vstack([fib, np.eye(3), -np.eye(3)])


def ray_extent(s: Symbol, box: BoxSpec, region: ImportanceRegion) -> np.ndarray:
    """Extensão da pré-imagem ao longo de raios transversais a partir da âncora."""
    k0 = region.periodic_axes
    axes = region.frame[:, k0:]
    k = axes.shape[1]
    dirs = _directions(k)
    tmax = float(np.max(region.transverse))
    ks = box.constrained

    def inside(t: np.ndarray) -> np.ndarray:
        pts = region.anchor + (t[:, None] * dirs) @ axes.T
        return box.contains(_component_values(s, ks, pts))

    ts = np.geomspace(1e-9, tmax, 160)
    lo = np.zeros(len(dirs))
    hi = np.full(len(dirs), np.nan)
    for t in ts:
        open_ = np.isnan(hi)
        if not open_.any():
            break
        res = inside(np.full(len(dirs), t))
        lo = np.where(open_ & res, t, lo)
        hi = np.where(open_ & ~res, t, hi)
    done = np.isnan(hi)
    hi = np.where(done, tmax, hi)
    lo = np.where(done, tmax, lo)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        res = inside(mid)
        lo = np.where(res, mid, lo)
        hi = np.where(res, hi, mid)
    return np.max(np.abs(dirs) * lo[:, None], axis=0)


# ---------------------------------------------------------------------------
# Medidas
# ---------------------------------------------------------------------------
def _check_samples(cfg: MonteCarloConfig) -> None:
    if cfg.samples < MIN_SAMPLES:
        raise ValueError(f"são necessárias pelo menos {MIN_SAMPLES} amostras")


def torus_measure(
    s: Symbol,
    box: BoxSpec,
    cfg: MonteCarloConfig,
    *,
    anchor: Sequence[float] | None = None,
    region: ImportanceRegion | None = None,
    collect: bool = False,
) -> MeasureEstimate:
    """
    Estimativa de sigma_d({theta : phi(e^{i theta}) em box}).

    Com ``cfg.importance`` e uma âncora, amostra na região de importância
    (automática ou ``region``); a cobertura da pré-imagem não é verificada
    aqui, ver :func:`coverage_check`.
    """
    _check_samples(cfg)
    if len(box.eta) != s.dimension:
        raise ValueError("caixa com dimensão diferente do símbolo")
    ks = box.constrained
    if not ks:
        return MeasureEstimate(
            mean=1.0, stderr=0.0, n=cfg.samples, hits=cfg.samples, sampler="plain", seed=cfg.seed
        )
    if region is None and cfg.importance and anchor is not None:
        region = importance_region(s, box, anchor, cfg.importance_factor)
    if not cfg.importance:
        region = None
    d = s.dimension

    if region is None:

        def chunk(rng: np.random.Generator, n: int) -> tuple[int, object]:
            theta = rng.uniform(-math.pi, math.pi, size=(n, d))
            mask = box.contains(_component_values(s, ks, theta))
            return int(mask.sum()), None

        hits, _ = _run_chunks(cfg, chunk)
        mean, stderr = _estimate(hits, cfg.samples, 1.0)
        return MeasureEstimate(
            mean=mean, stderr=stderr, n=cfg.samples, hits=hits, sampler="plain", seed=cfg.seed
        )

    def chunk(rng: np.random.Generator, n: int) -> tuple[int, object]:
        u = rng.uniform(-1.0, 1.0, size=(n, d)) * region.half_widths
        theta = region.anchor + u @ region.frame.T
        levels = box.levels(_component_values(s, ks, theta))
        mask = levels <= 1.0
        extra = (levels[mask], np.abs(u[mask])) if collect else None
        return int(mask.sum()), extra

    hits, extras = _run_chunks(cfg, chunk)
    volume = region.volume
    mean, stderr = _estimate(hits, cfg.samples, volume)
    levels = offsets = None
    if collect:
        levels = np.concatenate([e[0] for e in extras])
        offsets = np.concatenate([e[1] for e in extras]).reshape(-1, d)
    return MeasureEstimate(
        mean=mean,
        stderr=stderr,
        n=cfg.samples,
        hits=hits,
        sampler="importance",
        seed=cfg.seed,
        region_volume=volume,
        half_widths=tuple(float(h) for h in region.half_widths),
        hit_levels=levels,
        hit_offsets=offsets,
    )


def weighted_volume(
    s: Symbol, beta: float, box: BoxSpec, cfg: MonteCarloConfig
) -> MeasureEstimate:
    """
    Estimativa de V_beta(phi^{-1}(box)) com a lei radial exata.

    r = sqrt(1 - (1 - u)^{1/(beta+1)}) reproduz dA_beta em cada disco.
    """
    if not -1.0 < beta <= 0.0:
        raise ValueError(f"beta fora de (-1, 0]: {beta}")
    _check_samples(cfg)
    ks = box.constrained
    if not ks:
        return MeasureEstimate(
            mean=1.0, stderr=0.0, n=cfg.samples, hits=cfg.samples, sampler="plain", seed=cfg.seed
        )
    d = s.dimension

    def chunk(rng: np.random.Generator, n: int) -> tuple[int, object]:
        t = rng.uniform(-math.pi, math.pi, size=(n, d))
        u = rng.uniform(0.0, 1.0, size=(n, d))
        r = np.sqrt(1.0 - (1.0 - u) ** (1.0 / (beta + 1.0)))
        z = r * np.exp(1j * t)
        w = {k: evaluate_many(s.components[k - 1], z) for k in ks}
        return int(box.contains(w).sum()), None

    hits, _ = _run_chunks(cfg, chunk)
    mean, stderr = _estimate(hits, cfg.samples, 1.0)
    return MeasureEstimate(
        mean=mean, stderr=stderr, n=cfg.samples, hits=hits, sampler="plain", seed=cfg.seed
    )


# ---------------------------------------------------------------------------
# Ajuste de escala
# ---------------------------------------------------------------------------
def geometric_deltas(start: float, end: float, count: int) -> np.ndarray:
    return np.geomspace(start, end, count)


def _validate_deltas(deltas: Sequence[float]) -> np.ndarray:
    grid = np.sort(np.asarray(deltas, dtype=np.float64))
    if grid.size < 5:
        raise ValueError("a grade de deltas precisa de pelo menos 5 pontos")
    if grid[0] < 1e-5 or grid[-1] > 1e-1:
        raise ValueError("deltas devem estar em [1e-5, 1e-1]")
    ratios = grid[1:] / grid[:-1]
    if np.max(np.abs(ratios / ratios[0] - 1.0)) > 1e-6:
        raise ValueError("a grade de deltas precisa ser geométrica")
    return grid


def _adaptive_measure(
    s: Symbol,
    box: BoxSpec,
    anchor: np.ndarray,
    cfg: MonteCarloConfig,
    previous: tuple[MeasureEstimate, np.ndarray, float] | None,
    delta: float,
) -> tuple[MeasureEstimate, np.ndarray | None]:
    """Medida com a região transversal encolhida pelo raio-cast e pelos acertos anteriores."""
    region = importance_region(s, box, anchor, cfg.importance_factor)
    if region is None or not cfg.importance:
        return torus_measure(s, box, replace(cfg, importance=False)), None

    ceiling = region.transverse.copy()
    ray = np.minimum(RAY_SAFETY * ray_extent(s, box, region), ceiling)
    widths = ceiling
    if previous is not None:
        prev_est, prev_widths, prev_delta = previous
        widths = np.minimum(prev_widths, ceiling)
        if prev_est.hit_levels is not None:
            qualifying = prev_est.hit_levels <= delta / prev_delta
            if qualifying.sum() >= MIN_HITS:
                k0 = region.periodic_axes
                # offsets estão nas coordenadas do quadro, iguais entre deltas
                reach = HIT_EXTENT_SAFETY * prev_est.hit_offsets[qualifying][:, k0:].max(axis=0)
                widths = np.minimum(widths, np.maximum(ray, reach))
            else:
                widths = np.minimum(widths, np.maximum(ray, 1e-12))
    est = torus_measure(s, box, cfg, region=region.with_transverse(widths), collect=True)
    if est.hits < MIN_HITS and np.any(ray < widths):
        widths = np.minimum(widths, np.maximum(ray, 1e-12))
        est = torus_measure(s, box, cfg, region=region.with_transverse(widths), collect=True)
    return est, widths


def coverage_check(
    s: Symbol, box: BoxSpec, importance: MeasureEstimate, cfg: MonteCarloConfig, delta: float
) -> CoverageCheck:
    """Compara a estimativa de importância com o amostrador simples."""
    plain = torus_measure(s, box, replace(cfg, importance=False))
    floor_plain = 1.0 / cfg.samples
    floor_imp = importance.region_volume / cfg.samples
    combined = math.hypot(max(plain.stderr, floor_plain), max(importance.stderr, floor_imp))
    consistent = abs(plain.mean - importance.mean) <= COVERAGE_SIGMAS * combined
    if not consistent:
        logger.warning(
            "Cobertura inconsistente | delta=%.3e | importância=%.4e | simples=%.4e",
            delta,
            importance.mean,
            plain.mean,
        )
    return CoverageCheck(
        delta=delta,
        importance_mean=importance.mean,
        importance_stderr=importance.stderr,
        plain_mean=plain.mean,
        plain_stderr=plain.stderr,
        consistent=consistent,
    )


def scaling_fit(
    s: Symbol,
    anchor: ContactRecord | Sequence[float],
    constrained: Sequence[int],
    deltas: Sequence[float],
    cfg: MonteCarloConfig,
    *,
    check_coverage: bool = False,
) -> ScalingFit:
    """
    Inclinação log-log da medida das pré-imagens contra delta.

    Parameters
    ----------
    s : Symbol
        Símbolo.
    anchor : ContactRecord | Sequence[float]
        Ponto de contato; as caixas ficam centradas em phi(anchor).
    constrained : Sequence[int]
        Componentes com raio delta (base 1); as demais ficam livres.
    deltas : Sequence[float]
        Grade geométrica em [1e-5, 1e-1] com >= 5 pontos.
    cfg : MonteCarloConfig
        Amostragem.
    check_coverage : bool
        Roda o amostrador simples no maior delta para conferir a região.

    Returns
    -------
    ScalingFit
        Inclinação, erro padrão, orçamento |constrained| e a dica de veredito.
    """
    grid = _validate_deltas(deltas)
    xi = np.asarray(anchor.xi if isinstance(anchor, ContactRecord) else anchor, dtype=np.float64)
    constrained = tuple(sorted(set(int(k) for k in constrained)))
    if not constrained or any(not 1 <= k <= s.dimension for k in constrained):
        raise ValueError(f"componentes restritas inválidas: {constrained}")
    z = np.exp(1j * xi)[None, :]
    eta = tuple(float(np.angle(evaluate_many(p, z)[0])) for p in s.components)
    budget = len(constrained)
    logger.info(
        "Ajuste de escala | anchor=%s | C=%s | deltas=%d | n=%d",
        np.round(xi, 6).tolist(),
        constrained,
        grid.size,
        cfg.samples,
    )

    estimates: dict[float, MeasureEstimate] = {}
    previous = None
    for delta in grid[::-1]:
        box = BoxSpec.uniform(eta, constrained, float(delta))
        est, widths = _adaptive_measure(s, box, xi, cfg, previous, float(delta))
        estimates[float(delta)] = est
        previous = None if widths is None else (est, widths, float(delta))

    ordered = tuple(estimates[float(d)] for d in grid)
    flags: list[str] = []
    coverage = None
    if check_coverage and ordered[-1].sampler == "importance":
        box = BoxSpec.uniform(eta, constrained, float(grid[-1]))
        coverage = coverage_check(s, box, ordered[-1], cfg, float(grid[-1]))
        if not coverage.consistent:
            flags.append("coverage-mismatch")

    usable = [
        (float(d), e) for d, e in zip(grid, ordered) if e.mean > SIGNIFICANCE * e.stderr and e.mean > 0
    ]
    slope = slope_se = intercept = None
    hint: Literal["consistent-bounded", "blow-up", "inconclusive"] = "inconclusive"
    if len(usable) < 2:
        flags.append("statistically-zero" if not usable else "too-few-points")
    else:
        x = np.log([d for d, _ in usable])
        y = np.log([e.mean for _, e in usable])
        weights = np.array([e.mean / e.stderr if e.stderr > 0 else 1e6 for _, e in usable])
        coeffs, cov = np.polyfit(x, y, 1, w=weights, cov="unscaled")
        slope, intercept = float(coeffs[0]), float(coeffs[1])
        slope_se = float(math.sqrt(max(cov[0, 0], 0.0)))
        if slope + 2.0 * slope_se < budget:
            hint = "blow-up"
        elif slope - 2.0 * slope_se >= budget:
            hint = "consistent-bounded"
    logger.info("Ajuste | inclinação=%s | orçamento=%d | dica=%s", slope, budget, hint)
    return ScalingFit(
        deltas=tuple(float(d) for d in grid),
        estimates=ordered,
        anchor=tuple(float(t) for t in xi),
        constrained=constrained,
        slope=slope,
        slope_stderr=slope_se,
        intercept=intercept,
        budget=budget,
        verdict_hint=hint,
        flags=tuple(flags),
        coverage=coverage,
    )


def ratio_trend(fit: ScalingFit) -> float | None:
    """slope - budget: positivo indica razão medida/delta^budget tendendo a 0."""
    return None if fit.slope is None else fit.slope - fit.budget


def scaling_report(fit: ScalingFit, s: Symbol) -> ScalingFitReport:
    return ScalingFitReport(
        dimension=s.dimension,
        symbol=[format_polynomial(p) for p in s.components],
        anchor=list(fit.anchor),
        constrained=list(fit.constrained),
        estimates=[
            MeasureModel(
                delta=d,
                mean=e.mean,
                stderr=e.stderr,
                samples=e.n,
                sampler=e.sampler,
                half_widths=None if e.half_widths is None else list(e.half_widths),
                seed=e.seed,
                budget=fit.budget,
                ratio=ratio,
            )
            for d, e, ratio in zip(fit.deltas, fit.estimates, fit.ratios())
        ],
        slope=fit.slope,
        slope_stderr=fit.slope_stderr,
        intercept=fit.intercept,
        budget=fit.budget,
        verdict_hint=fit.verdict_hint,
        ratio_trend=ratio_trend(fit),
        flags=list(fit.flags),
        coverage=fit.coverage,
        seed=fit.estimates[0].seed,
        samples=fit.estimates[0].n,
    )


CSV_COLUMNS = ("delta", "measure", "stderr", "samples", "budget", "ratio")


def write_scaling_csv(fit: ScalingFit, handle: TextIO) -> None:
    """Uma linha por delta: delta, measure, stderr, samples, budget, ratio."""
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for d, e, ratio in zip(fit.deltas, fit.estimates, fit.ratios()):
        writer.writerow([repr(d), repr(e.mean), repr(e.stderr), e.n, fit.budget, repr(ratio)])


def designate_witness(report: BoundednessReport) -> tuple[list[float], list[int]] | None:
    """Âncora e conjunto restrito da primeira violação (ou do primeiro contato)."""
    for item in report.contacts:
        if item.jacobian is not None and item.jacobian.violation:
            return list(item.contact.xi), list(item.contact.index_set)
        for pair in item.pairs:
            if pair.case == "violation":
                return list(item.contact.xi), list(pair.pair)
    if report.contacts:
        first = report.contacts[0].contact
        return list(first.xi), list(first.index_set)
    return None


# ---------------------------------------------------------------------------
# Calibração (conjuntos planos de medida conhecida)
# ---------------------------------------------------------------------------
def _planar_measure(
    indicator: Callable[[np.ndarray, np.ndarray], np.ndarray],
    half_x: float,
    half_y: float,
    cfg: MonteCarloConfig,
) -> MeasureEstimate:
    area = 4.0 * half_x * half_y

    def chunk(rng: np.random.Generator, n: int) -> tuple[int, object]:
        x = rng.uniform(-half_x, half_x, size=n)
        y = rng.uniform(-half_y, half_y, size=n)
        return int(indicator(x, y).sum()), None

    hits, _ = _run_chunks(cfg, chunk)
    mean, stderr = _estimate(hits, cfg.samples, area)
    return MeasureEstimate(
        mean=mean,
        stderr=stderr,
        n=cfg.samples,
        hits=hits,
        sampler="plain",
        seed=cfg.seed,
        region_volume=area,
    )


def hyperbolic_area(delta: float) -> float:
    """Área de {|x| <= delta^(1/3), |y| <= delta^(1/2), |xy| <= delta} por quadratura."""
    hx, hy = delta ** (1.0 / 3.0), delta ** 0.5
    value, _ = integrate.quad(
        lambda y: min(hx, delta / y) if y > 0 else hx, 0.0, hy, points=[delta / hx], limit=200
    )
    return 4.0 * value


def saddle_area(a: float, b: float, delta: float) -> float:
    """Área de {(x, y) em [-h, h]^2 : |a x^2 - b y^2| <= delta}, h = delta^(1/3)."""
    h = delta ** (1.0 / 3.0)

    def width(x: float) -> float:
        upper = min(h, math.sqrt((a * x * x + delta) / b))
        lower = min(h, math.sqrt(max(0.0, (a * x * x - delta) / b)))
        return 2.0 * max(0.0, upper - lower)

    breaks = [math.sqrt(delta / a)]
    for value in (b * h * h - delta, b * h * h + delta):
        if value > 0:
            breaks.append(math.sqrt(value / a))
    points = sorted(p for p in breaks if 0.0 < p < h)
    value, _ = integrate.quad(width, 0.0, h, points=points or None, limit=200)
    return 2.0 * value


def annulus_area(a: float, delta: float) -> float:
    """Área exata de {|x^2 + y^2 - a| < delta}."""
    if a < -delta:
        return 0.0
    if a < delta:
        return math.pi * (delta + a)
    return 2.0 * math.pi * delta


def calibrate_set(
    set_id: Literal["L33", "L34", "L35"],
    params: dict[str, float] | None,
    delta: float,
    cfg: MonteCarloConfig,
) -> CalibrationEntry:
    """
    Medida de Monte-Carlo de um conjunto plano contra a referência determinística.

    L33: |x| <= delta^(1/3), |y| <= delta^(1/2), |xy| <= delta (cota inferior
    delta ln(1/delta) / 6). L34: |a x^2 - b y^2| <= delta no quadrado
    [-delta^(1/3), delta^(1/3)]^2. L35: |x^2 + y^2 - a| < delta (cota 2 pi delta).
    """
    if not 0.0 < delta <= 0.1:
        raise ValueError(f"delta fora de (0, 0.1]: {delta}")
    params = dict(params or {})
    lower = upper = None
    bound_ok = None

    if set_id == "L33":
        hx, hy = delta ** (1.0 / 3.0), delta**0.5
        est = _planar_measure(lambda x, y: np.abs(x * y) <= delta, hx, hy, cfg)
        reference = hyperbolic_area(delta)
        method = "quadratura adaptativa (scipy.integrate.quad)"
        lower = delta * math.log(1.0 / delta) / 6.0
        bound_ok = reference >= lower
    elif set_id == "L34":
        a, b = params.setdefault("a", 1.0), params.setdefault("b", 1.0)
        if a <= 0 or b <= 0:
            raise ValueError("L34 exige a, b > 0")
        h = delta ** (1.0 / 3.0)
        est = _planar_measure(lambda x, y: np.abs(a * x * x - b * y * y) <= delta, h, h, cfg)
        reference = saddle_area(a, b, delta)
        method = "quadratura adaptativa (scipy.integrate.quad)"
    elif set_id == "L35":
        a = params.setdefault("a", 0.5)
        radius = math.sqrt(a + delta) if a + delta > 0 else 1.0
        est = _planar_measure(lambda x, y: np.abs(x * x + y * y - a) < delta, radius, radius, cfg)
        reference = annulus_area(a, delta)
        method = "fórmula fechada"
        upper = 2.0 * math.pi * delta
        bound_ok = est.mean <= upper + COVERAGE_SIGMAS * est.stderr
    else:
        raise ValueError(f"conjunto de calibração desconhecido: {set_id}")

    within = abs(est.mean - reference) <= COVERAGE_SIGMAS * max(est.stderr, 1e-300) or (
        est.hits == 0 and reference == 0.0
    )
    return CalibrationEntry(
        set_id=set_id,
        params=params,
        delta=delta,
        mean=est.mean,
        stderr=est.stderr,
        samples=est.n,
        reference=reference,
        reference_method=method,
        lower_bound=lower,
        upper_bound=upper,
        within_4_stderr=within,
        bound_satisfied=bound_ok,
    )
