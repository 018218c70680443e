"""Delayed couplings and their block-companion lift.

A :class:`DelayedCoupling` holds one ``m x m`` nonnegative matrix per delay
``tau = 0..tau_max``; the update is ``x(t+1) = sum_tau G[tau] @ x(t - tau)``.
Stacking ``y(t) = [x(t); x(t-1); ...; x(t-tau_max)]`` turns it into the
first-order system ``y(t+1) = B y(t)`` built by :func:`lift`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, PreconditionError, ZeroPatternError
from .graphs import lifted_labels
from .matrix import TOL_STOCH, TOL_ZERO, as_matrix


@dataclass(frozen=True, eq=False)
class DelayedCoupling:
    """Coupling matrices ``g[tau]`` for ``tau = 0..tau_max``."""

    g: np.ndarray

    def __post_init__(self):
        try:
            g = np.array(self.g, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad coupling family: {exc}") from None
        if g.ndim == 2:
            g = g[None]
        if g.ndim != 3 or g.shape[1] != g.shape[2] or g.shape[1] == 0:
            raise InvalidInputError(f"coupling family must have shape (tau_max+1, m, m), got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise InvalidInputError("coupling has non-finite entries")
        if np.any(g < -TOL_ZERO):
            raise InvalidInputError("coupling matrices must be nonnegative")
        rows = g.sum(axis=(0, 2))
        if np.any(np.abs(rows - 1.0) > TOL_STOCH):
            raise InvalidInputError(f"summed coupling is not row-stochastic (row sums {rows.tolist()})")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def m(self) -> int:
        return self.g.shape[1]

    @property
    def tau_max(self) -> int:
        return self.g.shape[0] - 1

    @property
    def total(self) -> np.ndarray:
        """The delay-free coupling ``sum_tau g[tau]``."""
        return self.g.sum(axis=0)

    def delays(self, tol_zero: float = TOL_ZERO) -> list[int]:
        """Delays carrying nonzero weight."""
        return [t for t in range(self.tau_max + 1) if np.any(self.g[t] > tol_zero)]

    def padded(self, tau_max: int) -> "DelayedCoupling":
        if tau_max < self.tau_max:
            raise InvalidInputError("cannot pad to a smaller tau_max")
        extra = np.zeros((tau_max - self.tau_max, self.m, self.m))
        return DelayedCoupling(np.concatenate([self.g, extra]))

    @classmethod
    def from_pairwise(cls, weights, delays, tau_max: int | None = None) -> "DelayedCoupling":
        """Compile per-pair weights ``G[i, j]`` and delays ``tau[i, j]`` into a family."""
        w = as_matrix(weights, square=True)
        d = np.asarray(delays)
        if d.shape != w.shape or np.any(d < 0) or not np.all(d == np.round(d)):
            raise InvalidInputError("delays must be a nonnegative integer matrix shaped like weights")
        d = d.astype(int)
        top = int(d.max()) if tau_max is None else tau_max
        if d.max() > top:
            raise InvalidInputError("a pairwise delay exceeds tau_max")
        g = np.zeros((top + 1,) + w.shape)
        for (i, j), t in np.ndenumerate(d):
            g[t, i, j] += w[i, j]
        return cls(g)

    def to_json(self) -> dict:
        return {"m": self.m, "tau_max": self.tau_max, "G": self.g.tolist()}

    @classmethod
    def from_json(cls, obj: Mapping) -> "DelayedCoupling":
        try:
            dc = cls(obj["G"])
        except KeyError:
            raise InvalidInputError("coupling JSON needs a 'G' field") from None
        if "m" in obj and int(obj["m"]) != dc.m:
            raise InvalidInputError(f"declared m={obj['m']} but matrices are {dc.m}x{dc.m}")
        if "tau_max" in obj and int(obj["tau_max"]) != dc.tau_max:
            if int(obj["tau_max"]) < dc.tau_max:
                raise InvalidInputError("declared tau_max is smaller than the number of delay matrices")
            dc = dc.padded(int(obj["tau_max"]))
        return dc


@dataclass(frozen=True, eq=False)
class LiftedMatrix:
    inner: np.ndarray
    m: int
    tau_max: int

    @property
    def labels(self) -> list[str]:
        """``v_{i,j}`` names row ``(i-1)*m + j`` (1-based)."""
        return lifted_labels(self.m, self.tau_max)

    def block(self, i: int, j: int) -> np.ndarray:
        """0-based ``m x m`` block ``(i, j)``."""
        m = self.m
        return self.inner[i * m:(i + 1) * m, j * m:(j + 1) * m]


def lift(dc: DelayedCoupling) -> LiftedMatrix:
    """Block-companion matrix: first block row ``[G0 G1 ... G_tau_max]``, identity subdiagonal."""
    m, k = dc.m, dc.tau_max + 1
    b = np.zeros((k * m, k * m))
    b[:m, :] = np.concatenate(list(dc.g), axis=1)
    for i in range(1, k):
        b[i * m:(i + 1) * m, (i - 1) * m:i * m] = np.eye(m)
    return LiftedMatrix(b, m, dc.tau_max)


def delay_class(tau: int, tau0: int) -> int:
    """Residue class of a delay; the self-link delay ``tau0`` lands in class 0."""
    return (tau + 1) % (tau0 + 1)


def class_sums(dc: DelayedCoupling, tau0: int) -> np.ndarray:
    """Array of shape ``(tau0+1, m, m)``: entry ``c`` sums ``g[tau]`` over delays in class ``c``."""
    out = np.zeros((tau0 + 1, dc.m, dc.m))
    for tau in range(dc.tau_max + 1):
        out[delay_class(tau, tau0)] += dc.g[tau]
    return out


@dataclass(frozen=True, eq=False)
class DelayClassInfo:
    tau0: int
    class_of: dict[int, int]
    ghat: np.ndarray | dict[str, np.ndarray]
    active_delays: list[int]
    period: int
    offenders: list[tuple[int, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "tau0": self.tau0,
            "class_of": {str(k): v for k, v in self.class_of.items()},
            "active_delays": self.active_delays,
            "period": self.period,
            "offenders": [list(o) for o in self.offenders],
        }


def delay_classes(dc: DelayedCoupling | Mapping[str, DelayedCoupling], tau0: int,
                  delays: Sequence[int] | None = None) -> DelayClassInfo:
    """Residue classes, class sums and period for self-link delay ``tau0``.

    ``dc`` is one coupling or a mapping of state name to coupling; for a
    mapping the active delays are pooled over all states and ``ghat`` is a
    dict of per-state class sums.  ``delays`` declares the cross-class delays
    explicitly; weight in any other nonzero class is reported in
    ``offenders``.  Without it, every weighted delay outside class 0 counts.
    """
    family = dict(dc) if isinstance(dc, Mapping) else {None: dc}
    tau_max = max(c.tau_max for c in family.values())
    if not 0 <= tau0 <= tau_max:
        raise PreconditionError(f"tau0={tau0} outside 0..{tau_max}")
    weighted = sorted({t for c in family.values() for t in c.delays()})
    class_of = {t: delay_class(t, tau0) for t in range(tau_max + 1)}
    offenders: list[tuple[int, int]] = []
    if delays is None:
        active = [t for t in weighted if class_of[t] != 0]
    else:
        active = sorted(set(int(t) for t in delays))
        bad = [t for t in active if not 0 <= t <= tau_max or class_of[t] == 0]
        if bad:
            raise PreconditionError(f"declared delays {bad} are out of range or in class 0")
        allowed = {0} | {class_of[t] for t in active}
        offenders = [(class_of[t], t) for t in weighted if class_of[t] not in allowed]
    period = tau0 + 1
    for t in active:
        period = gcd(period, t + 1)
    if None in family:
        ghat = class_sums(family[None], tau0)
    else:
        ghat = {name: class_sums(c, tau0) for name, c in family.items()}
    return DelayClassInfo(tau0, class_of, ghat, active, period, offenders)


@dataclass(frozen=True, eq=False)
class BlockPermutation:
    """Row/column order grouping block indices by residue modulo ``period``.

    ``order[k]`` is the original index placed at position ``k``; ``blocks``
    holds the position ranges of each residue group in the permuted matrix.
    """

    order: np.ndarray
    blocks: list[np.ndarray]
    period: int

    def apply(self, b) -> np.ndarray:
        b = np.asarray(b)
        return b[np.ix_(self.order, self.order)]

    def matrix(self) -> np.ndarray:
        """Permutation matrix ``Q`` (Kronecker-expanded) with ``apply(B) == Q B Q^T``."""
        n = len(self.order)
        q = np.zeros((n, n))
        q[np.arange(n), self.order] = 1.0
        return q

    def diagonal_blocks(self, b) -> list[np.ndarray]:
        pb = self.apply(b)
        return [pb[np.ix_(idx, idx)] for idx in self.blocks]

    def off_block_max(self, b) -> float:
        pb = np.abs(self.apply(b))
        mask = np.ones(pb.shape, dtype=bool)
        for idx in self.blocks:
            mask[np.ix_(idx, idx)] = False
        return float(pb[mask].max()) if mask.any() else 0.0


def block_permutation(info: DelayClassInfo, tau_max: int, m: int) -> BlockPermutation:
    """Group lifted coordinates by block index modulo the period.

    Products of ``B`` whose length is a multiple of ``info.period`` become
    exactly block diagonal in this order; a single ``B`` is block cyclic
    (residue ``r-1`` feeds residue ``r``).  Raises :class:`ZeroPatternError`
    when the coupling has weight outside the declared classes.
    """
    if info.offenders:
        raise ZeroPatternError(info.offenders)
    period = info.period
    order, blocks, pos = [], [], 0
    for p in range(1, period + 1):
        idx_blocks = [i for i in range(1, tau_max + 2) if i % period == p % period]
        rows = [(i - 1) * m + j for i in idx_blocks for j in range(m)]
        order.extend(rows)
        blocks.append(np.arange(pos, pos + len(rows)))
        pos += len(rows)
    return BlockPermutation(np.array(order, dtype=int), blocks, period)
