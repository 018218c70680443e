"""Switching processes for the coupling topology.

Three families are supported for exact conditional expectations:
deterministic schedules, i.i.d. draws and finite-state Markov chains.  In
all three the law of the future given the past depends only on the current
state (or, for schedules, the current position), so "for every ``n``"
reduces to "for every conditioning value".
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Union

import numpy as np

from .errors import CapacityError, InvalidInputError, PreconditionError
from .graphs import graph_of, graph_period, is_strongly_connected
from .lifting import DelayedCoupling
from .matrix import TOL_STOCH, as_matrix, left_product, validate_stochastic

RNG_NAME = "numpy.random.Generator(PCG64)"
ENUMERATION_BITS = 24
PI_MAX_ITER = 10_000
PI_TOL = 1e-12


@dataclass(frozen=True)
class Deterministic:
    """Fixed schedule; a non-cyclic schedule holds its last state forever."""

    schedule: tuple[str, ...]
    cyclic: bool = True


@dataclass(frozen=True, eq=False)
class IID:
    states: tuple[str, ...]
    probs: np.ndarray


@dataclass(frozen=True, eq=False)
class Markov:
    states: tuple[str, ...]
    transition: np.ndarray
    initial: np.ndarray


Variant = Union[Deterministic, IID, Markov]


@dataclass(frozen=True, eq=False)
class TopologyProcess:
    variant: Variant
    couplings: Mapping[str, DelayedCoupling] = field(default_factory=dict)

    def __post_init__(self):
        v = self.variant
        if isinstance(v, Deterministic):
            if not v.schedule:
                raise InvalidInputError("empty schedule")
            object.__setattr__(self, "variant", Deterministic(tuple(v.schedule), bool(v.cyclic)))
            used = set(v.schedule)
        elif isinstance(v, IID):
            probs = np.asarray(v.probs, dtype=float)
            if len(v.states) == 0 or probs.shape != (len(v.states),):
                raise InvalidInputError("IID needs one probability per state")
            if np.any(probs < 0) or abs(probs.sum() - 1.0) > TOL_STOCH:
                raise InvalidInputError("IID probabilities must be nonnegative and sum to 1")
            object.__setattr__(self, "variant", IID(tuple(v.states), probs))
            used = set(v.states)
        elif isinstance(v, Markov):
            n = len(v.states)
            t = as_matrix(v.transition, square=True)
            init = np.asarray(v.initial, dtype=float)
            if t.shape[0] != n or init.shape != (n,):
                raise InvalidInputError("Markov transition/initial do not match the state list")
            if not validate_stochastic(t):
                raise InvalidInputError("Markov transition is not row-stochastic")
            if np.any(init < 0) or abs(init.sum() - 1.0) > TOL_STOCH:
                raise InvalidInputError("Markov initial law is not a distribution")
            object.__setattr__(self, "variant", Markov(tuple(v.states), t, init))
            used = set(v.states)
        else:
            raise InvalidInputError(f"unknown process variant {type(v).__name__}")
        if len(set(self.states)) != len(self.states):
            raise InvalidInputError("duplicate state ids")
        if self.couplings:
            missing = used - set(self.couplings)
            if missing:
                raise InvalidInputError(f"no coupling for states {sorted(missing)}")
            shapes = {(c.m, c.tau_max) for c in self.couplings.values()}
            if len({s[0] for s in shapes}) > 1:
                raise InvalidInputError("all couplings must share the agent count m")
            if len(shapes) > 1:
                top = max(s[1] for s in shapes)
                object.__setattr__(self, "couplings",
                                   {k: c.padded(top) for k, c in self.couplings.items()})

    @property
    def states(self) -> tuple[str, ...]:
        v = self.variant
        if isinstance(v, Deterministic):
            return tuple(dict.fromkeys(v.schedule))
        return v.states

    @property
    def m(self) -> int:
        return next(iter(self.couplings.values())).m

    @property
    def tau_max(self) -> int:
        return next(iter(self.couplings.values())).tau_max

    def conditioning_values(self) -> list[Hashable]:
        """Values of the current state that determine the future law.

        Schedule positions for deterministic processes, state ids otherwise.
        """
        v = self.variant
        if isinstance(v, Deterministic):
            return list(range(len(v.schedule)))
        return list(v.states)

    def describe(self, cond) -> str:
        v = self.variant
        if isinstance(v, Deterministic):
            return f"{cond}:{v.schedule[cond]}"
        return str(cond)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def sample_path(p: TopologyProcess, horizon: int, seed: int | None = None) -> list[str]:
    """States ``sigma(0..horizon-1)``; a pure function of ``(p, horizon, seed)``."""
    if horizon < 1:
        raise InvalidInputError("horizon must be >= 1")
    v = p.variant
    if isinstance(v, Deterministic):
        return [_schedule_at(v, t) for t in range(horizon)]
    rng = _rng(seed)
    if isinstance(v, IID):
        idx = rng.choice(len(v.states), size=horizon, p=v.probs)
        return [v.states[i] for i in idx]
    cum = np.cumsum(v.transition, axis=1)
    draws = rng.random(horizon)
    s = int(np.searchsorted(np.cumsum(v.initial), draws[0], side="right"))
    s = min(s, len(v.states) - 1)
    out = [v.states[s]]
    for u in draws[1:]:
        s = min(int(np.searchsorted(cum[s], u, side="right")), len(v.states) - 1)
        out.append(v.states[s])
    return out


def _schedule_at(v: Deterministic, t: int) -> str:
    if v.cyclic:
        return v.schedule[t % len(v.schedule)]
    return v.schedule[min(t, len(v.schedule) - 1)]


def _resolve(p: TopologyProcess, current) -> Hashable:
    v = p.variant
    if isinstance(v, Deterministic):
        if isinstance(current, (int, np.integer)) and not isinstance(current, bool):
            if not 0 <= current < len(v.schedule):
                raise InvalidInputError(f"schedule position {current} out of range")
            return int(current)
        if current in v.schedule:
            return v.schedule.index(current)
        raise InvalidInputError(f"unknown state {current!r}")
    if current not in v.states:
        raise InvalidInputError(f"unknown state {current!r}")
    return current


def _total(p: TopologyProcess) -> Callable[[str], np.ndarray]:
    return lambda s: p.couplings[s].total


def _step_law(p: TopologyProcess, cond) -> list[tuple[str, float]]:
    """Distribution of the next state given the current one (Markov/IID)."""
    v = p.variant
    if isinstance(v, IID):
        return [(s, float(q)) for s, q in zip(v.states, v.probs) if q > 0]
    row = v.transition[v.states.index(cond)]
    return [(s, float(q)) for s, q in zip(v.states, row) if q > 0]


def _next_dist(p: TopologyProcess, cond, L: int) -> list[np.ndarray]:
    """Laws of ``sigma(n+1) .. sigma(n+L)`` over ``p.states`` for Markov/IID."""
    v = p.variant
    if isinstance(v, IID):
        return [v.probs] * L
    row = np.zeros(len(v.states))
    row[v.states.index(cond)] = 1.0
    out = []
    for _ in range(L):
        row = row @ v.transition
        out.append(row)
    return out


def expected_window_sum(p: TopologyProcess, current, L: int,
                        matrix_of: Callable[[str], np.ndarray] | None = None) -> np.ndarray:
    """Exact ``E[sum_{k=n+1}^{n+L} M(sigma_k) | sigma_n = current]``.

    ``matrix_of`` maps a state id to a matrix; it defaults to the total
    coupling.  For a deterministic process ``current`` is a schedule position
    (a state id resolves to its first occurrence).
    """
    if L < 1:
        raise InvalidInputError("L must be >= 1")
    f = matrix_of or _total(p)
    cond = _resolve(p, current)
    v = p.variant
    if isinstance(v, Deterministic):
        return sum(f(_schedule_at(v, cond + k)) for k in range(1, L + 1))
    if isinstance(v, IID):
        return L * sum(q * f(s) for s, q in zip(v.states, v.probs))
    mats = [f(s) for s in v.states]
    acc = np.zeros_like(mats[0], dtype=float)
    for law in _next_dist(p, cond, L):
        acc = acc + sum(q * mat for q, mat in zip(law, mats))
    return acc


def expected_window_product(p: TopologyProcess, current, L: int,
                            matrix_of: Callable[[str], np.ndarray] | None = None,
                            method: str = "exact", samples: int = 10_000,
                            seed: int | None = None) -> np.ndarray:
    """``E[M(sigma_{n+L}) ... M(sigma_{n+1}) | sigma_n = current]``.

    ``method`` is one of

    * ``"exact"`` - forward recursion over the chain, cost linear in ``L``;
    * ``"enumerate"`` - sum over all ``L``-words, refused with
      :class:`CapacityError` beyond ``2**24`` words;
    * ``"monte_carlo"`` - average over ``samples`` sampled continuations.
    """
    if L < 1:
        raise InvalidInputError("L must be >= 1")
    f = matrix_of or _total(p)
    cond = _resolve(p, current)
    v = p.variant
    if isinstance(v, Deterministic):
        return left_product([f(_schedule_at(v, cond + k)) for k in range(1, L + 1)])
    if method == "exact":
        return _product_recursion(p, cond, L, f)
    if method == "enumerate":
        return _product_enumerate(p, cond, L, f)
    if method == "monte_carlo":
        return _product_monte_carlo(p, cond, L, f, samples, seed)
    raise InvalidInputError(f"unknown method {method!r}")


def _product_recursion(p, cond, L, f):
    # w[s] = E[product of the window so far ; sigma_{n+k} = s]
    v = p.variant
    mats = {s: np.asarray(f(s), dtype=float) for s in v.states}
    w = {s: q * mats[s] for s, q in _step_law(p, cond)}
    for _ in range(L - 1):
        nxt = {}
        for s, acc in w.items():
            for s2, q in _step_law(p, s):
                term = q * (mats[s2] @ acc)
                nxt[s2] = nxt[s2] + term if s2 in nxt else term
        w = nxt
    return sum(w.values())


def _product_enumerate(p, cond, L, f):
    n_states = len(p.variant.states)
    if L * math.log2(max(n_states, 1)) > ENUMERATION_BITS:
        raise CapacityError(
            f"{n_states}**{L} words exceed the 2**{ENUMERATION_BITS} enumeration cap; "
            "use method='monte_carlo' with samples and seed")
    mats = {s: np.asarray(f(s), dtype=float) for s in p.variant.states}
    total = None
    for word in itertools.product(p.variant.states, repeat=L):
        prob, prev = 1.0, cond
        for s in word:
            prob *= dict(_step_law(p, prev)).get(s, 0.0)
            if prob == 0.0:
                break
            prev = s
        if prob == 0.0:
            continue
        term = prob * left_product([mats[s] for s in word])
        total = term if total is None else total + term
    return total


def _product_monte_carlo(p, cond, L, f, samples, seed):
    rng = _rng(seed)
    mats = {s: np.asarray(f(s), dtype=float) for s in p.variant.states}
    acc = None
    for _ in range(samples):
        prev, prod = cond, None
        for _ in range(L):
            law = _step_law(p, prev)
            i = rng.choice(len(law), p=[q for _, q in law])
            prev = law[i][0]
            prod = mats[prev] if prod is None else mats[prev] @ prod
        acc = prod if acc is None else acc + prod
    return acc / samples


def stationary_distribution(p: TopologyProcess | Markov) -> np.ndarray:
    """Invariant law of an irreducible aperiodic finite chain.

    Such chains are uniformly ergodic.  Raises :class:`PreconditionError`
    naming the failing property otherwise.
    """
    v = p.variant if isinstance(p, TopologyProcess) else p
    if not isinstance(v, Markov):
        raise PreconditionError("stationary_distribution needs a Markov process")
    t = v.transition
    g = graph_of(t)
    if not is_strongly_connected(g):
        raise PreconditionError("transition matrix is reducible")
    if graph_period(g) != 1:
        raise PreconditionError("transition matrix is periodic")
    n = t.shape[0]
    # pi (T - I) = 0 with sum(pi) = 1
    a = np.vstack([(t - np.eye(n)).T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def is_uniformly_ergodic(p: TopologyProcess | Markov) -> bool:
    try:
        stationary_distribution(p)
    except PreconditionError:
        return False
    return True


def stationary_expectation(p: TopologyProcess, matrix_of: Callable[[str], np.ndarray] | None = None) -> np.ndarray:
    """``E[M(sigma)]`` under the stationary law (Markov) or the draw law (IID)."""
    f = matrix_of or _total(p)
    v = p.variant
    if isinstance(v, IID):
        law = v.probs
    elif isinstance(v, Markov):
        law = stationary_distribution(p)
    else:
        raise PreconditionError("stationary expectation needs an IID or Markov process")
    return sum(q * f(s) for s, q in zip(v.states, law))


def read_path_file(path) -> list[str]:
    """Externally generated state sequence, one id per line."""
    with open(path) as fh:
        out = [line.strip() for line in fh if line.strip()]
    if not out:
        raise InvalidInputError(f"{path}: empty path file")
    return out


def process_from_json(obj: Mapping, couplings: Mapping[str, DelayedCoupling]) -> TopologyProcess:
    try:
        kind = obj["variant"]
        if kind == "deterministic":
            variant = Deterministic(tuple(obj["schedule"]), bool(obj.get("cyclic", True)))
        elif kind == "iid":
            states = tuple(obj["states"])
            probs = obj.get("probs")
            if probs is None:
                probs = [1.0 / len(states)] * len(states)
            variant = IID(states, np.asarray(probs, dtype=float))
        elif kind == "markov":
            states = tuple(obj["states"])
            init = obj.get("initial")
            if isinstance(init, str):
                init = [1.0 if s == init else 0.0 for s in states]
            elif init is None:
                init = [1.0 / len(states)] * len(states)
            variant = Markov(states, np.asarray(obj["transition"], dtype=float), np.asarray(init, dtype=float))
        else:
            raise InvalidInputError(f"unknown process variant {kind!r}")
    except KeyError as exc:
        raise InvalidInputError(f"process JSON missing field {exc}") from None
    return TopologyProcess(variant, dict(couplings))


def process_to_json(p: TopologyProcess) -> dict:
    v = p.variant
    if isinstance(v, Deterministic):
        return {"variant": "deterministic", "schedule": list(v.schedule), "cyclic": v.cyclic}
    if isinstance(v, IID):
        return {"variant": "iid", "states": list(v.states), "probs": v.probs.tolist()}
    return {"variant": "markov", "states": list(v.states), "transition": v.transition.tolist(),
            "initial": v.initial.tolist()}
