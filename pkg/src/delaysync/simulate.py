"""Delayed consensus recursion and outcome classification."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, PreconditionError
from .lifting import DelayedCoupling, lift
from .matrix import scramblingness
from .process import RNG_NAME, TopologyProcess, sample_path

DEFAULT_TOL = 1e-8
DEFAULT_TAIL = 50
DEFAULT_HORIZON = 2000


@dataclass(eq=False)
class Trajectory:
    """Simulated history.

    ``values[t]`` is ``x(t)`` for ``t = 0..T``; ``history[tau]`` is the
    initial ``x(-tau)`` for ``tau = 0..tau_max`` (so ``history[0] == values[0]``).
    ``path[t]`` is the state in force on the step ``t -> t+1``.
    """

    values: np.ndarray
    history: np.ndarray
    path: list[str]
    seed: int | None = None

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def tau_max(self) -> int:
        return self.history.shape[0] - 1

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    def diameters(self) -> np.ndarray:
        return self.values.max(axis=1) - self.values.min(axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "state"] + [f"x_{i + 1}" for i in range(self.m)])
        for t, row in enumerate(self.values):
            state = self.path[t] if t < len(self.path) else ""
            w.writerow([t, state] + [format(float(x), ".17g") for x in row])
        return buf.getvalue()


@dataclass
class Verdict:
    kind: str  # "consensus" | "periodic_sync" | "synchronized" | "none"
    residual: float
    t_detect: int | None
    alpha: float | None = None
    period: int | None = None
    cycle: list[float] | None = None
    seed: int | None = None
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.period is not None:
            out["period"] = self.period
        if self.cycle is not None:
            out["cycle"] = self.cycle
        out.update(residual=self.residual, t_detect=self.t_detect, seed=self.seed)
        out.update(self.extras)
        return out


def _as_window(window, m: int | None = None) -> np.ndarray:
    w = np.array(window, dtype=float)
    if w.ndim == 1:
        w = w[None]
    if w.ndim != 2 or (m is not None and w.shape[1] != m):
        raise InvalidInputError(f"history window has shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise InvalidInputError("history window has non-finite values")
    return w


def step(window, dc: DelayedCoupling) -> np.ndarray:
    """``sum_tau G[tau] @ window[tau]`` where ``window[tau] = x(t - tau)``."""
    w = _as_window(window)
    if w.shape != (dc.tau_max + 1, dc.m):
        raise InvalidInputError(f"window shape {w.shape} does not match coupling "
                                f"(tau_max+1, m) = {(dc.tau_max + 1, dc.m)}")
    return np.einsum("tij,tj->i", dc.g, w)


def replicate_history(x0, tau_max: int) -> np.ndarray:
    """Constant history ``x(-tau) = x0``; shifts the limit value, not the verdict kind."""
    x0 = np.asarray(x0, dtype=float)
    return np.tile(x0, (tau_max + 1, 1))


def run_path(couplings: Mapping[str, DelayedCoupling], path: Sequence[str], init,
             seed: int | None = None) -> Trajectory:
    """Iterate the recursion along an explicit state sequence."""
    if not path:
        raise InvalidInputError("empty path")
    try:
        dcs = [couplings[s] for s in path]
    except KeyError as exc:
        raise InvalidInputError(f"path uses unknown state {exc}") from None
    m, tau_max = dcs[0].m, max(c.tau_max for c in couplings.values())
    dcs = [c if c.tau_max == tau_max else c.padded(tau_max) for c in dcs]
    hist = _as_window(init, m)
    if hist.shape[0] != tau_max + 1:
        raise InvalidInputError(f"history needs {tau_max + 1} vectors, got {hist.shape[0]}")
    window = hist.copy()
    values = np.empty((len(path) + 1, m))
    values[0] = window[0]
    for t, dc in enumerate(dcs):
        x = step(window, dc)
        window = np.roll(window, 1, axis=0)
        window[0] = x
        values[t + 1] = x
    return Trajectory(values, hist, list(path), seed)


def run(p: TopologyProcess, init, horizon: int = DEFAULT_HORIZON, seed: int | None = None) -> Trajectory:
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    return run_path(p.couplings, sample_path(p, horizon, seed), init, seed)


def random_history(m: int, tau_max: int, seed: int | None, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """Uniform initial history drawn from a stream independent of the path stream."""
    rng = np.random.default_rng([0 if seed is None else seed, 1])
    return rng.uniform(low, high, size=(tau_max + 1, m))


def _suffix_start(ok: np.ndarray) -> int | None:
    """First index from which ``ok`` stays true to the end."""
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return 0
    start = int(bad[-1]) + 1
    return start if start < ok.size else None


def detect_consensus(traj: Trajectory, tol: float = DEFAULT_TOL, tail: int = DEFAULT_TAIL) -> Verdict | None:
    """Consensus when, over the last ``tail`` steps, agents agree and values stop moving."""
    if not 1 <= tail <= traj.horizon + 1:
        raise PreconditionError("tail must lie in 1..horizon+1")
    vals = traj.values
    window = vals[-tail:]
    diam = traj.diameters()
    if diam[-tail:].max() >= tol or window.max() - window.min() >= tol:
        return None
    alpha = float(window.mean())
    settled = (diam < tol) & (np.abs(vals - alpha).max(axis=1) < tol)
    return Verdict("consensus", float(diam[-1]), _suffix_start(settled), alpha=alpha,
                   period=1, cycle=[alpha], seed=traj.seed)


def detect_periodic_sync(traj: Trajectory, p_max: int | None = None, tol: float = DEFAULT_TOL,
                         tail: int = DEFAULT_TAIL) -> Verdict:
    """Smallest period ``P <= p_max`` the synchronized tail repeats with.

    ``cycle[k]`` is the averaged value at times ``t`` with ``t % P == k``.
    """
    p_max = traj.tau_max + 1 if p_max is None else p_max
    if p_max < 1:
        raise PreconditionError("p_max must be >= 1")
    if tail < 2 * p_max:
        raise PreconditionError(f"tail={tail} must be at least 2*p_max={2 * p_max}")
    if tail > traj.horizon + 1:
        raise PreconditionError("tail exceeds the trajectory length")
    vals = traj.values
    diam = traj.diameters()
    T = traj.horizon
    if diam[-tail:].max() >= tol:
        return Verdict("none", float(diam[-1]), None, seed=traj.seed)
    synced = diam < tol
    for period in range(1, p_max + 1):
        lagged = np.abs(vals[period:] - vals[:-period]).max(axis=1)
        if lagged[-(tail - period):].max() >= tol:
            continue
        times = np.arange(T - tail + 1, T + 1)
        means = vals[times].mean(axis=1)
        cycle = [float(means[times % period == k].mean()) for k in range(period)]
        ok = synced.copy()
        ok[period:] &= lagged < tol
        return Verdict("periodic_sync", float(diam[-1]), _suffix_start(ok), period=period,
                       cycle=cycle, seed=traj.seed)
    return Verdict("synchronized", float(diam[-1]), _suffix_start(synced), seed=traj.seed)


def classify(traj: Trajectory, tol: float = DEFAULT_TOL, tail: int = DEFAULT_TAIL,
             p_max: int | None = None) -> Verdict:
    """Strongest verdict: consensus, then periodic sync, then synchronized, then none."""
    v = detect_consensus(traj, tol, tail)
    if v is not None:
        return v
    return detect_periodic_sync(traj, p_max, tol, tail)


def scrambling_monitor(couplings: Mapping[str, DelayedCoupling], path: Sequence[str],
                       max_window: int = 200) -> dict:
    """Accumulate scramblingness of lifted products over greedy disjoint windows.

    Each window grows from its start until the lifted product becomes
    scrambling (or ``max_window`` is hit).  A large total is consistent with
    consensus; it is a diagnostic, not a proof.
    """
    lifted = {s: lift(c).inner for s, c in couplings.items()}
    total, windows, start, prod = 0.0, 0, 0, None
    for t, s in enumerate(path):
        prod = lifted[s] if prod is None else lifted[s] @ prod
        eta = scramblingness(prod)
        if eta > 0 or t - start + 1 >= max_window:
            if eta > 0:
                total += eta
                windows += 1
            start, prod = t + 1, None
    return {"eta_sum": total, "windows": windows}


def verdict_summary(verdicts: Sequence[Verdict]) -> dict:
    kinds: dict[str, int] = {}
    periods: dict[int, int] = {}
    for v in verdicts:
        kinds[v.kind] = kinds.get(v.kind, 0) + 1
        if v.kind == "periodic_sync" and v.period is not None:
            periods[v.period] = periods.get(v.period, 0) + 1
    modal = min(periods, key=lambda k: (-periods[k], k)) if periods else None
    return {"runs": len(verdicts), "kinds": dict(sorted(kinds.items())), "modal_period": modal,
            "rng": RNG_NAME}
