"""Dense stochastic-matrix functionals.

Matrices are plain ``numpy.ndarray`` values of dtype float64.  Dynamics are
``x(t+1) = G x(t)`` with row-stochastic ``G``; entry ``(i, j)`` is the weight
agent ``i`` places on agent ``j``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, PreconditionError

TOL_STOCH = 1e-9
TOL_ZERO = 1e-12


class Norm(str, Enum):
    L1 = "L1"


def as_matrix(m, *, square: bool = False) -> np.ndarray:
    """Coerce ``m`` to a finite 2-D float array."""
    try:
        a = np.array(m, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"not a numeric matrix: {exc}") from None
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise InvalidInputError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    if square and a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    return a


def validate_stochastic(m, tol: float = TOL_STOCH) -> bool:
    """True iff every entry is >= -tol and every row sums to 1 within tol."""
    a = as_matrix(m)
    if tol < 0:
        raise PreconditionError("tol must be >= 0")
    return bool(np.all(a >= -tol) and np.all(np.abs(a.sum(axis=1) - 1.0) <= tol))


def _require_stochastic(a: np.ndarray, tol: float = TOL_STOCH) -> None:
    if not validate_stochastic(a, tol):
        raise PreconditionError("matrix is not row-stochastic")


def hajnal_diameter(m, norm: Norm | str = Norm.L1) -> float:
    """Largest L1 distance between two rows of ``m``."""
    a = as_matrix(m)
    if Norm(norm) is not Norm.L1:  # pragma: no cover - only L1 ships
        raise InvalidInputError(f"unsupported norm {norm}")
    if a.shape[0] == 1:
        return 0.0
    diffs = np.abs(a[:, None, :] - a[None, :, :]).sum(axis=2)
    return float(diffs.max())


def scramblingness(m, tol: float = TOL_STOCH) -> float:
    """Smallest L1 mass of the entrywise minimum over pairs of rows.

    A stochastic matrix is scrambling iff the result is positive.
    """
    a = as_matrix(m)
    _require_stochastic(a, tol)
    if a.shape[0] == 1:
        return float(a[0].sum())
    overlap = np.minimum(a[:, None, :], a[None, :, :]).sum(axis=2)
    return float(min(max(overlap.min(), 0.0), 1.0))


@dataclass(frozen=True)
class DeltaMatrix:
    base: np.ndarray
    delta: float
    result: np.ndarray


def delta_matrix(m, delta: float) -> DeltaMatrix:
    """Threshold ``m`` at ``delta``: entries >= delta become delta, others 0."""
    a = as_matrix(m)
    if not delta > 0:
        raise PreconditionError("delta must be positive")
    if np.any(a < -TOL_ZERO):
        raise PreconditionError("delta_matrix needs an entrywise nonnegative matrix")
    return DeltaMatrix(a, float(delta), np.where(a >= delta, float(delta), 0.0))


def left_product(seq: Sequence) -> np.ndarray:
    """Return ``M_n @ ... @ M_1`` for a time-ordered sequence ``(M_1, ..., M_n)``."""
    mats = [as_matrix(m, square=True) for m in seq]
    if not mats:
        raise InvalidInputError("left_product of an empty sequence")
    out = mats[0].copy()
    for m in mats[1:]:
        if m.shape != out.shape:
            raise InvalidInputError(f"dimension mismatch: {m.shape} vs {out.shape}")
        out = m @ out
    return out


def is_analog(a, b, tol_zero: float = TOL_ZERO) -> bool:
    """True iff ``a`` and ``b`` have the same zero pattern."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return bool(np.array_equal(np.abs(a) > tol_zero, np.abs(b) > tol_zero))


def pattern(m, tol_zero: float = TOL_ZERO) -> np.ndarray:
    return np.abs(as_matrix(m)) > tol_zero


def pattern_product(seq: Iterable[np.ndarray]) -> np.ndarray:
    """Boolean left product of zero patterns; exact, no underflow."""
    out = None
    for p in seq:
        p = np.asarray(p, dtype=bool)
        out = p.copy() if out is None else (p.astype(np.int64) @ out.astype(np.int64)) > 0
    if out is None:
        raise InvalidInputError("pattern_product of an empty sequence")
    return out


def charpoly(m) -> np.ndarray:
    """Characteristic polynomial coefficients, highest degree first.

    Faddeev-LeVerrier recursion; coefficient 0 is always 1.
    """
    a = as_matrix(m, square=True)
    n = a.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    mk = np.zeros_like(a)
    eye = np.eye(n)
    for k in range(1, n + 1):
        mk = a @ mk + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(a @ mk) / k
    return coeffs


def to_json(m) -> str:
    return json.dumps(as_matrix(m).tolist())


def from_json(text: str) -> np.ndarray:
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"bad matrix JSON: {exc}") from None
    return as_matrix(rows)
