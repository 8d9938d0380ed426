"""
Localização e refinamento do conjunto de contato {xi em T^d : |phi_j(xi)| = 1}.

Fluxo de :func:`find_contacts`:
    1. varredura da grade tensorial por quase-contatos (|phi_j| >= 1 - 0.01);
    2. para cada conjunto de índices I, interseção das máscaras e rotulagem
       de componentes conexas (com identificação periódica das bordas);
    3. sementes espalhadas por componente, refinadas por Newton sobre
       sum_{i em I} |phi_i|^2, polidas em alta precisão quando necessário;
    4. dimensão da componente, I maximal recalculado e registros ordenados.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from mpmath import mp
from scipy import ndimage

from app.core.exceptions import DimensionMismatchError, RefinementError
from app.schemas.report_schema import ContactModel, JuliaModel
from app.services.polysym import (
    ComplexPolynomial,
    Symbol,
    angular_derivatives,
    evaluate,
    evaluate_on_grid,
    partial_derivative,
    torus_grid,
)

logger = logging.getLogger("polydisc.contact")

NEAR_HIT = 0.01
REFINE_PRECONDITION = 0.1
MAX_STEP = 0.5
LATTICE_STEP = math.pi / 12
SNAP_RADIUS = 1e-4
KERNEL_RTOL = 1e-6
EPS = np.finfo(np.float64).eps


# ---------------------------------------------------------------------------
# Utilidades angulares
# ---------------------------------------------------------------------------
def wrap_angles(theta: np.ndarray | Sequence[float]) -> np.ndarray:
    """Reduz ângulos a [-pi, pi)."""
    return (np.asarray(theta, dtype=np.float64) + math.pi) % (2.0 * math.pi) - math.pi


def torus_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(wrap_angles(np.asarray(a) - np.asarray(b)), axis=-1)


# ---------------------------------------------------------------------------
# Tipos
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ContactRecord:
    """Ponto de contato refinado com seu conjunto maximal de índices (base 1)."""

    xi: tuple[float, ...]
    index_set: tuple[int, ...]
    eta: tuple[complex, ...]
    residuals: tuple[float, ...]
    component_dim: int
    cluster: int
    flat: bool = False

    @property
    def point(self) -> np.ndarray:
        return np.exp(1j * np.asarray(self.xi))

    def eta_of(self, j: int) -> complex:
        return self.eta[self.index_set.index(j)]


@dataclass(frozen=True, eq=False)
class RefinementResult:
    theta: np.ndarray
    flat: bool
    iterations: int
    residual: float
    trajectory: tuple[tuple[float, ...], ...] = field(default=())
    snapped: bool = False
    polished: bool = False


@dataclass(frozen=True, eq=False)
class JuliaCheck:
    """Derivadas normalizadas conj(eta_i) xi_k dphi_i/dz_k para i em I."""

    index_set: tuple[int, ...]
    values: np.ndarray
    valid: bool
    scale: float
    reasons: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Objetivo sum |phi_i|^2 em precisão dupla
# ---------------------------------------------------------------------------
def _as_index_set(j: int | Sequence[int], d: int) -> tuple[int, ...]:
    index_set = (j,) if isinstance(j, (int, np.integer)) else tuple(sorted(set(j)))
    if not index_set or any(not 1 <= i <= d for i in index_set):
        raise DimensionMismatchError(f"índices de componente inválidos: {j!r}")
    return tuple(int(i) for i in index_set)


def _moduli(components: Sequence[ComplexPolynomial], theta: np.ndarray) -> np.ndarray:
    z = np.exp(1j * theta)
    return np.array([abs(evaluate(p, z)) for p in components])


def _residual(components: Sequence[ComplexPolynomial], theta: np.ndarray) -> float:
    return float(np.max(1.0 - _moduli(components, theta)))


def _objective(
    components: Sequence[ComplexPolynomial], theta: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    d = theta.shape[0]
    f = 0.0
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    for p in components:
        v, g, h = angular_derivatives(p, theta)
        f += abs(v) ** 2
        grad += 2.0 * np.real(np.conj(v) * g)
        hess += 2.0 * np.real(np.conj(v) * h + np.outer(np.conj(g), g))
    return f, grad, 0.5 * (hess + hess.T)


def _ascent_step(grad: np.ndarray, hess: np.ndarray) -> np.ndarray:
    eig, vecs = np.linalg.eigh(hess)
    floor = max(1e-8 * float(np.max(np.abs(eig), initial=0.0)), 1e-300)
    step = vecs @ ((vecs.T @ grad) / np.maximum(np.abs(eig), floor))
    norm = float(np.linalg.norm(step))
    if norm > MAX_STEP:
        step *= MAX_STEP / norm
    return step


def _objective_value(components: Sequence[ComplexPolynomial], theta: np.ndarray) -> float:
    return float(np.sum(_moduli(components, theta) ** 2))


# ---------------------------------------------------------------------------
# Polimento em alta precisão (mpmath)
# ---------------------------------------------------------------------------
def _polish(
    components: Sequence[ComplexPolynomial], theta: np.ndarray, dps: int, max_iter: int = 80
) -> np.ndarray:
    """
    Newton com passos corrigidos por multiplicidade em ``dps`` dígitos.

    Contatos de ordem 4 (hessiana nula no ponto) convergem linearmente com
    razão estável rho; o passo extrapolado step / (1 - rho) recupera a taxa.
    """
    d = theta.shape[0]
    with mp.workdps(dps):
        terms = [
            [(mp.mpc(c.real, c.imag), alpha) for alpha, c in p.terms.items()]
            for p in components
        ]

        def value(th: list) -> mp.mpf:
            total = mp.mpf(0)
            for comp in terms:
                v = mp.mpc(0)
                for c, alpha in comp:
                    v += c * mp.expj(mp.fsum(a * t for a, t in zip(alpha, th)))
                total += abs(v) ** 2
            return total

        def derivatives(th: list) -> tuple[mp.mpf, mp.matrix, mp.matrix]:
            f = mp.mpf(0)
            g = mp.matrix(d, 1)
            h = mp.matrix(d, d)
            for comp in terms:
                v = mp.mpc(0)
                gv = [mp.mpc(0)] * d
                hv = [[mp.mpc(0)] * d for _ in range(d)]
                for c, alpha in comp:
                    t = c * mp.expj(mp.fsum(a * x for a, x in zip(alpha, th)))
                    v += t
                    for k in range(d):
                        if alpha[k]:
                            gv[k] += 1j * alpha[k] * t
                            for l in range(d):
                                if alpha[l]:
                                    hv[k][l] -= alpha[k] * alpha[l] * t
                f += abs(v) ** 2
                cv = mp.conj(v)
                for k in range(d):
                    g[k] += 2 * mp.re(cv * gv[k])
                    for l in range(d):
                        h[k, l] += 2 * mp.re(cv * hv[k][l] + mp.conj(gv[k]) * gv[l])
            return f, g, h

        th = [mp.mpf(float(t)) for t in theta]
        stop = mp.mpf(10) ** (-(dps // 2))
        prev_norm = None
        for _ in range(max_iter):
            f, g, h = derivatives(th)
            eig, vecs = mp.eigsy(h)
            top = max(abs(eig[k]) for k in range(d))
            floor = max(top * mp.mpf(10) ** -20, mp.mpf(10) ** -40)
            coords = vecs.T * g
            for k in range(d):
                coords[k] /= max(abs(eig[k]), floor)
            step = vecs * coords
            norm = mp.norm(step)
            if norm < stop:
                break
            factors = [1]
            if prev_norm is not None:
                rho = norm / prev_norm
                if 0.2 < rho < 0.95:
                    factors.insert(0, 1 / (1 - rho))
            accepted = False
            for factor in factors:
                cand = [th[k] + factor * step[k] for k in range(d)]
                if value(cand) >= f:
                    th = cand
                    accepted = True
                    break
            if not accepted:
                break
            prev_norm = norm
        return np.array([float(t) for t in th])


def _snap(components: Sequence[ComplexPolynomial], theta: np.ndarray) -> np.ndarray | None:
    lattice = np.round(theta / LATTICE_STEP) * LATTICE_STEP
    if np.max(np.abs(theta - lattice)) > SNAP_RADIUS:
        return None
    if _residual(components, lattice) <= _residual(components, theta) + 4 * EPS:
        return wrap_angles(lattice)
    return None


# ---------------------------------------------------------------------------
# Operações públicas
# ---------------------------------------------------------------------------
def refine_contact(
    s: Symbol,
    j: int | Sequence[int],
    theta0: Sequence[float],
    tol: float = 1e-12,
    max_iter: int = 50,
    *,
    polish_dps: int | None = 50,
) -> RefinementResult:
    """
    Subida de Newton em theta -> sum_{i em I} |phi_i(e^{i theta})|^2.

    Parameters
    ----------
    s : Symbol
        Símbolo.
    j : int | Sequence[int]
        Componente (base 1) ou conjunto de componentes refinadas em conjunto.
    theta0 : Sequence[float]
        Ponto inicial com |phi_i| >= 0.9 para todo i.
    tol : float
        Alvo para 1 - |phi_i| no ponto final.
    max_iter : int
        Limite de iterações de Newton.
    polish_dps : int | None
        Dígitos do polimento mpmath; ``None`` desliga.

    Returns
    -------
    RefinementResult
        Ângulos finais, marca ``flat`` para objetivos constantes (monômios).

    Raises
    ------
    RefinementError
        Sem convergência dentro de ``max_iter``; carrega a trajetória.
    """
    index_set = _as_index_set(j, s.dimension)
    components = [s.components[i - 1] for i in index_set]
    theta = wrap_angles(theta0)
    if theta.shape != (s.dimension,):
        raise DimensionMismatchError(f"theta0 com forma {theta.shape} para d={s.dimension}")
    moduli = _moduli(components, theta)
    if np.any(moduli < 1.0 - REFINE_PRECONDITION):
        raise ValueError(
            f"ponto inicial longe do contato: |phi_I| = {np.round(moduli, 6).tolist()}"
        )

    if all(p.is_monomial for p in components):
        return RefinementResult(
            theta=theta,
            flat=True,
            iterations=0,
            residual=_residual(components, theta),
            trajectory=(tuple(theta),),
        )

    trajectory = [tuple(theta)]
    residual = _residual(components, theta)
    iterations = 0
    while residual > tol and iterations < max_iter:
        iterations += 1
        f, grad, hess = _objective(components, theta)
        step = _ascent_step(grad, hess)
        t = 1.0
        for _ in range(40):
            cand = theta + t * step
            if _objective_value(components, cand) > f:
                break
            t *= 0.5
        else:
            break
        theta = wrap_angles(cand)
        trajectory.append(tuple(theta))
        residual = _residual(components, theta)

    if residual > tol:
        logger.info(
            "Refinamento sem convergência | I=%s | resíduo=%.3e | iterações=%d",
            index_set,
            residual,
            iterations,
        )
        raise RefinementError(
            f"Newton não atingiu 1-|phi| <= {tol:g} (resíduo {residual:.3e})",
            [list(p) for p in trajectory],
        )

    snapped = _snap(components, theta)
    if snapped is not None:
        return RefinementResult(
            theta=snapped,
            flat=False,
            iterations=iterations,
            residual=_residual(components, snapped),
            trajectory=tuple(trajectory),
            snapped=True,
        )

    polished = False
    if polish_dps is not None:
        theta, polished = polish_contact(s, index_set, theta, polish_dps, tol)
    return RefinementResult(
        theta=theta,
        flat=False,
        iterations=iterations,
        residual=_residual(components, theta),
        trajectory=tuple(trajectory),
        polished=polished,
    )


def polish_contact(
    s: Symbol,
    index_set: Sequence[int],
    theta: np.ndarray,
    dps: int = 50,
    tol: float = 1e-12,
) -> tuple[np.ndarray, bool]:
    """Polimento mpmath de um ponto já refinado; mantém o original se o resíduo piorar."""
    components = [s.components[i - 1] for i in index_set]
    residual = _residual(components, theta)
    candidate = wrap_angles(_polish(components, np.asarray(theta, dtype=np.float64), dps))
    if _residual(components, candidate) <= max(residual, tol):
        return candidate, True
    logger.info("Polimento descartado | I=%s | resíduo=%.3e", tuple(index_set), residual)
    return np.asarray(theta), False


def maximal_index_set(s: Symbol, theta: np.ndarray, tol_contact: float) -> tuple[int, ...]:
    z = np.exp(1j * np.asarray(theta))
    return tuple(
        j + 1
        for j, p in enumerate(s.components)
        if not p.is_zero and 1.0 - abs(evaluate(p, z)) <= tol_contact
    )


def _periodic_labels(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Rótulos de ``ndimage.label`` com as faces opostas identificadas."""
    structure = np.ones((3,) * mask.ndim, dtype=bool)
    labels, count = ndimage.label(mask, structure=structure)
    if count == 0:
        return labels, 0
    parent = list(range(count + 1))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    n = mask.shape[0]
    for axis in range(mask.ndim):
        first = np.take(labels, 0, axis=axis)
        last = np.take(labels, n - 1, axis=axis)
        # vizinhança diagonal através da borda
        for shift in itertools.product((-1, 0, 1), repeat=mask.ndim - 1):
            shifted = np.roll(last, shift, axis=tuple(range(mask.ndim - 1)))
            both = (first > 0) & (shifted > 0)
            if not both.any():
                continue
            pairs = np.unique(np.stack([first[both], shifted[both]], axis=1), axis=0)
            for a, b in pairs:
                ra, rb = find(int(a)), find(int(b))
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    roots = np.array([find(k) for k in range(count + 1)])
    _, compact = np.unique(roots, return_inverse=True)
    return compact[labels], int(compact.max())


def _spread_seeds(angles: np.ndarray, count: int) -> np.ndarray:
    """Amostragem do ponto mais distante, começando pela célula mais próxima da origem."""
    start = int(np.argmin(torus_distance(angles, np.zeros(angles.shape[1]))))
    chosen = [start]
    nearest = torus_distance(angles, angles[start])
    while len(chosen) < count:
        nxt = int(np.argmax(nearest))
        if nearest[nxt] <= 0.0:
            break
        chosen.append(nxt)
        nearest = np.minimum(nearest, torus_distance(angles, angles[nxt]))
    return angles[chosen]


def _dedupe(results: list[RefinementResult], radius: float) -> list[RefinementResult]:
    kept: list[RefinementResult] = []
    for r in results:
        if all(torus_distance(r.theta, q.theta) > radius for q in kept):
            kept.append(r)
    return kept


def _component_dim(
    components: Sequence[ComplexPolynomial], points: list[np.ndarray], grid_n: int
) -> int:
    """min(posto do espalhamento das amostras, dimensão do núcleo da hessiana)."""
    d = points[0].shape[0]
    _, _, hess = _objective(components, points[0])
    eig = np.abs(np.linalg.eigvalsh(hess))
    kernel = int(np.sum(eig <= KERNEL_RTOL * max(1.0, float(eig.max(initial=0.0)))))
    if len(points) < 2:
        return 0
    rel = wrap_angles(np.array(points) - points[0])
    rel -= rel.mean(axis=0)
    spread = np.linalg.svd(rel, compute_uv=False) / math.sqrt(len(points))
    rank = int(np.sum(spread > 4.0 * math.pi / grid_n))
    return min(kernel, rank, d)


def find_contacts(
    s: Symbol,
    grid_n: int = 64,
    tol_contact: float = 1e-9,
    *,
    samples_per_component: int = 8,
    refine_tol: float = 1e-12,
    max_iter: int = 50,
    polish_dps: int | None = 50,
) -> list[ContactRecord]:
    """
    Varre, agrupa e refina o conjunto de contato de ``s``.

    Cada conjunto de índices I é varrido separadamente; um ponto refinado só
    é registrado no estrato cujo I coincide com o seu I maximal, o que evita
    duplicatas entre estratos.
    """
    d = s.dimension
    theta = torus_grid(grid_n)
    logger.info("Varredura de contatos | d=%d | grid_n=%d", d, grid_n)

    masks: dict[int, np.ndarray] = {}
    for j, p in enumerate(s.components, start=1):
        if p.is_zero:
            continue
        hit = np.abs(evaluate_on_grid(p, grid_n)) >= 1.0 - NEAR_HIT
        if hit.any():
            masks[j] = hit
    if not masks:
        return []

    active = sorted(masks)
    strata = [c for size in range(len(active), 0, -1) for c in itertools.combinations(active, size)]
    records: list[ContactRecord] = []
    cluster_id = 0
    merge_radius = 2.0 * math.pi / grid_n

    for index_set in strata:
        mask = np.logical_and.reduce([masks[j] for j in index_set])
        if not mask.any():
            continue
        components = [s.components[j - 1] for j in index_set]
        labels, count = _periodic_labels(mask)
        for label in range(1, count + 1):
            cells = np.argwhere(labels == label)
            seeds = _spread_seeds(theta[cells], samples_per_component)
            results: list[RefinementResult] = []
            for seed in seeds:
                try:
                    result = refine_contact(s, index_set, seed, refine_tol, max_iter, polish_dps=None)
                except RefinementError as exc:
                    last = np.array(exc.trajectory[-1])
                    if _residual(components, last) <= 100 * refine_tol:
                        logger.warning("Semente não convergiu | I=%s | seed=%s", index_set, seed)
                    continue
                if result.residual <= tol_contact:
                    results.append(result)
            if not results:
                continue
            flat = any(r.flat for r in results)
            results = _dedupe(results, merge_radius)
            dim = _component_dim(components, [r.theta for r in results], grid_n)
            kept: list[ContactRecord] = []
            for result in results:
                point = result.theta
                maximal = maximal_index_set(s, point, tol_contact)
                if maximal != index_set:
                    continue
                if polish_dps is not None and not (result.flat or result.snapped):
                    point, _ = polish_contact(s, index_set, point, polish_dps, refine_tol)
                values = [evaluate(s.components[i - 1], np.exp(1j * point)) for i in maximal]
                kept.append(
                    ContactRecord(
                        xi=tuple(float(t) for t in wrap_angles(point)),
                        index_set=maximal,
                        eta=tuple(complex(v / abs(v)) for v in values),
                        residuals=tuple(float(1.0 - abs(v)) for v in values),
                        component_dim=dim,
                        cluster=cluster_id,
                        flat=flat,
                    )
                )
            if kept:
                records.extend(kept)
                cluster_id += 1

    logger.info("Contatos encontrados | registros=%d | componentes=%d", len(records), cluster_id)
    return records


def julia_caratheodory(s: Symbol, r: ContactRecord, tol: float = 1e-6) -> JuliaCheck:
    """
    Derivadas normalizadas conj(eta_i) xi_k dphi_i/dz_k(xi).

    Válido quando todas são reais e não negativas (a menos de ``tol * scale``)
    e nenhuma linha se anula por completo.
    """
    z = r.point
    rows = []
    for i in r.index_set:
        p = s.components[i - 1]
        eta = r.eta_of(i)
        rows.append(
            [
                np.conj(eta) * z[k] * evaluate(partial_derivative(p, k + 1), z)
                for k in range(s.dimension)
            ]
        )
    values = np.array(rows, dtype=np.complex128)
    scale = max(float(np.max(np.abs(values), initial=0.0)), 1e-300)
    limit = tol * scale
    reasons = []
    if np.any(np.abs(values.imag) > limit):
        reasons.append("derivada normalizada com parte imaginária")
    if np.any(values.real < -limit):
        reasons.append("derivada normalizada negativa")
    for row, i in zip(values, r.index_set):
        if np.all(np.abs(row) <= limit):
            reasons.append(f"todas as derivadas de phi_{i} se anulam")
    return JuliaCheck(
        index_set=r.index_set,
        values=values,
        valid=not reasons,
        scale=scale,
        reasons=tuple(reasons),
    )


# ---------------------------------------------------------------------------
# Conversão para os schemas de relatório
# ---------------------------------------------------------------------------
def contact_model(r: ContactRecord) -> ContactModel:
    return ContactModel(
        xi=list(r.xi),
        index_set=list(r.index_set),
        eta=[[e.real, e.imag] for e in r.eta],
        residuals=list(r.residuals),
        component_dim=r.component_dim,
        cluster=r.cluster,
        flat=r.flat,
    )


def julia_model(check: JuliaCheck) -> JuliaModel:
    return JuliaModel(
        real=check.values.real.tolist(),
        imag=check.values.imag.tolist(),
        valid=check.valid,
        reasons=list(check.reasons),
    )
