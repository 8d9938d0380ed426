"""
Inércia de formas quadráticas simétricas pequenas (n <= 3).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from app.core.exceptions import DimensionMismatchError

logger = logging.getLogger("polydisc.quadform")

MAX_SIZE = 3
SCALE_FLOOR = 1e-300
FRAGILE_FACTOR = 10.0


@dataclass(frozen=True)
class Signature:
    """Contagens (p, q, z) com a margem da decisão."""

    p: int
    q: int
    z: int
    eigenvalues: tuple[float, ...]
    scale: float
    tol: float
    nonzero_margin: float | None
    zero_margin: float | None

    @property
    def inertia(self) -> tuple[int, int]:
        return (self.p, self.q)

    @property
    def threshold(self) -> float:
        return self.tol * self.scale

    @property
    def fragile(self) -> bool:
        """Alguma margem está a menos de 10x do limiar."""
        t = self.threshold
        if self.nonzero_margin is not None and self.nonzero_margin < FRAGILE_FACTOR * t:
            return True
        return self.zero_margin is not None and self.zero_margin * FRAGILE_FACTOR > t


def as_symmetric_form(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"forma precisa ser quadrada, recebida {m.shape}")
    if m.shape[0] > MAX_SIZE:
        raise DimensionMismatchError(f"formas limitadas a {MAX_SIZE}x{MAX_SIZE}")
    if not np.all(np.isfinite(m)):
        raise ValueError("forma com entradas não finitas")
    return 0.5 * (m + m.T)


def _check_tol(tol: float) -> None:
    if not 0.0 < tol <= 1e-2:
        raise ValueError(f"tolerância fora de (0, 1e-2]: {tol}")


def _spectrum(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if m.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0))
    return np.linalg.eigh(m)


def signature(M: np.ndarray, tol: float = 1e-8, scale: float | None = None) -> Signature:
    """
    Assinatura de M com limiar relativo ``tol * scale``.

    ``scale`` padrão é max(|autovalores|, 1e-300); uma escala externa permite
    decidir que uma forma identicamente pequena é nula.
    """
    _check_tol(tol)
    m = as_symmetric_form(M)
    eig, _ = _spectrum(m)
    if scale is None:
        scale = float(np.max(np.abs(eig), initial=0.0))
    scale = max(float(scale), SCALE_FLOOR)
    threshold = tol * scale

    positive = eig > threshold
    negative = eig < -threshold
    zero = ~(positive | negative)
    nonzero_abs = np.abs(eig[~zero])
    zero_abs = np.abs(eig[zero])
    return Signature(
        p=int(positive.sum()),
        q=int(negative.sum()),
        z=int(zero.sum()),
        eigenvalues=tuple(float(x) for x in eig),
        scale=scale,
        tol=tol,
        nonzero_margin=float(nonzero_abs.min()) if nonzero_abs.size else None,
        zero_margin=float(zero_abs.max()) if zero_abs.size else None,
    )


def kernel_basis(M: np.ndarray, tol: float = 1e-8, scale: float | None = None) -> np.ndarray:
    """Base ortonormal (colunas) dos autovetores com |autovalor| <= tol * scale."""
    _check_tol(tol)
    m = as_symmetric_form(M)
    eig, vecs = _spectrum(m)
    if scale is None:
        scale = float(np.max(np.abs(eig), initial=0.0))
    scale = max(float(scale), SCALE_FLOOR)
    mask = np.abs(eig) <= tol * scale
    return vecs[:, mask]


def restrict(M: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Forma restrita B^T M B ao subespaço gerado pelas colunas de B."""
    m = as_symmetric_form(M)
    b = np.asarray(B, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != m.shape[0] or b.shape[1] > m.shape[0]:
        raise DimensionMismatchError(
            f"base de forma {b.shape} incompatível com forma {m.shape}"
        )
    r = b.T @ m @ b
    return 0.5 * (r + r.T)
