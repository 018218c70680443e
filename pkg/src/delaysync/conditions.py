"""Mechanical checks of the sufficient conditions for consensus and periodic sync.

Every check quantifies over the conditioning values of the process (see
:meth:`TopologyProcess.conditioning_values`); for the three built-in process
families this covers "for all n, almost surely".
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import gcd
from typing import Callable, Sequence

import numpy as np

from .errors import CapacityError, PreconditionError, ZeroPatternError
from .graphs import (DiGraph, graph_of, graph_period, is_scrambling_graph, is_sia,
                     is_strongly_connected, lifted_labels, root_set)
from .lifting import DelayClassInfo, block_permutation, delay_classes, lift
from .matrix import as_matrix, pattern
from .process import TopologyProcess, expected_window_product, expected_window_sum, stationary_expectation

EXHAUSTIVE_CAP = 2 ** 20


@dataclass
class ConditionReport:
    theorem: str
    satisfied: bool
    parameters: dict
    witnesses: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"theorem": self.theorem, "satisfied": self.satisfied, "parameters": self.parameters,
                "witnesses": self.witnesses, "failures": self.failures}


def _report(theorem, params, witnesses, failures) -> ConditionReport:
    return ConditionReport(theorem, not failures, params, witnesses, failures)


def _diag_above(p: TopologyProcess, tau: int, mu: float, clause: str) -> tuple[dict, list[str]]:
    wit, fails = {}, []
    for s in p.states:
        d = np.diag(p.couplings[s].g[tau])
        wit[s] = float(d.min())
        if not np.all(d > mu):
            fails.append(f"{clause}: state {s} has G^{tau} diagonal {d.min():.6g} <= mu={mu}")
    return wit, fails


def check_theorem1(p: TopologyProcess, L: int, delta: float, method: str = "exact") -> ConditionReport:
    """Delay-free case: the delta-graph of every expected ``L``-window product
    must have a spanning tree and be aperiodic."""
    if p.tau_max != 0:
        raise PreconditionError("theorem 1 check needs delay-free couplings (tau_max = 0)")
    witnesses, failures = {}, []
    for cond in p.conditioning_values():
        name = p.describe(cond)
        g = graph_of(expected_window_product(p, cond, L, method=method), delta)
        roots, period = root_set(g), graph_period(g)
        witnesses[name] = {"roots": sorted(roots), "period": period}
        if not roots:
            failures.append(f"spanning_tree: no root at {name}")
        elif period != 1:
            failures.append(f"aperiodicity: period {period} at {name}")
    return _report("T1", {"L": L, "delta": delta}, witnesses, failures)


def check_theorem2(p: TopologyProcess, L: int, delta: float, mu: float) -> ConditionReport:
    """Instantaneous self-links above ``mu`` plus a spanning tree in every
    expected ``L``-window sum of the total coupling."""
    if not mu > 0:
        raise PreconditionError("mu must be positive")
    diag, failures = _diag_above(p, 0, mu, "self_links")
    roots = {}
    for cond in p.conditioning_values():
        name = p.describe(cond)
        r = root_set(graph_of(expected_window_sum(p, cond, L), delta))
        roots[name] = sorted(r)
        if not r:
            failures.append(f"spanning_tree: no root at {name}")
    return _report("T2", {"L": L, "delta": delta, "mu": mu},
                   {"g0_min_diagonal": diag, "roots": roots}, failures)


def _b2_clauses(info: DelayClassInfo, delta: float,
                expectations: dict[str, Callable[[Callable], np.ndarray]]) -> tuple[dict, list[str]]:
    """Zero pattern plus a nonzero delta-matrix for each active delay class.

    ``expectations`` maps a conditioning label to a function taking a
    state->matrix map and returning the one-step conditional expectation.
    """
    failures = [f"B.2.zero_pattern: weight in class {c} at delay {d}" for c, d in info.offenders]
    nonzero = {}
    for tau in info.active_delays:
        c = info.class_of[tau]
        per = {}
        for name, expect in expectations.items():
            ok = bool(np.any(expect(lambda s, c=c: info.ghat[s][c]) >= delta))
            per[name] = ok
            if not ok:
                failures.append(f"B.2.delta_nonzero: class {c} (delay {tau}) vanishes at {name}")
        nonzero[str(tau)] = per
    return nonzero, failures


def _block_witness(info: DelayClassInfo, m: int, tau_max: int) -> list[list[str]] | None:
    try:
        perm = block_permutation(info, tau_max, m)
    except ZeroPatternError:
        return None
    labels = lifted_labels(m, tau_max)
    return [[labels[perm.order[k]] for k in idx] for idx in perm.blocks]


def check_theorem3(p: TopologyProcess, tau0: int, L: int, delta: float, mu: float) -> ConditionReport:
    """Self-link delay ``tau0``: B.1, B.2 and strong connectivity of the
    expected ``L``-window sum of the class-0 coupling.

    The report carries the period ``P``; ``P = 1`` predicts consensus.
    """
    if not mu > 0:
        raise PreconditionError("mu must be positive")
    info = delay_classes(dict(p.couplings), tau0)
    diag, failures = _diag_above(p, tau0, mu, "B.1")

    one_step = {p.describe(c): (lambda f, c=c: expected_window_sum(p, c, 1, matrix_of=f))
                for c in p.conditioning_values()}
    nonzero, b2 = _b2_clauses(info, delta, one_step)
    failures += b2
    strong = {}
    for cond in p.conditioning_values():
        name = p.describe(cond)
        e = expected_window_sum(p, cond, L, matrix_of=lambda s: info.ghat[s][0])
        ok = is_strongly_connected(graph_of(e, delta))
        strong[name] = ok
        if not ok:
            failures.append(f"strong_connectivity: class-0 window sum not strongly connected at {name}")
    witnesses = {"classes": info.to_json(), "g_tau0_min_diagonal": diag, "delta_nonzero": nonzero,
                 "strongly_connected": strong, "blocks": _block_witness(info, p.m, p.tau_max)}
    params = {"L": L, "delta": delta, "mu": mu, "tau0": tau0, "P": info.period}
    return _report("T3", params, witnesses, failures)


def structural_classes(p: TopologyProcess, tau0: int | None = None) -> DelayClassInfo:
    """Delay classes for ``tau0``; without it, residues modulo the gcd of all
    weighted ``tau + 1`` (the coarsest period the coupling admits)."""
    if tau0 is not None:
        return delay_classes(dict(p.couplings), tau0)
    period = 0
    for c in p.couplings.values():
        for t in c.delays():
            period = gcd(period, t + 1)
    return delay_classes(dict(p.couplings), max(period, 1) - 1)


def check_proposition(p: TopologyProcess, which: str, L: int, delta: float,
                      tau0: int | None = None, method: str = "exact") -> ConditionReport:
    """Lifted-product conditions without assuming self-links.

    ``P1``: the delta-graph of the expected ``L``-step product of lifted
    matrices has a spanning tree with a self-linked root.
    ``P2``: after grouping lifted coordinates by residue modulo ``P``, each
    diagonal block of the expected product over ``L`` periods (``L * P``
    steps) is strongly connected with a self-link.
    """
    lifted = {s: lift(c).inner for s, c in p.couplings.items()}
    witnesses, failures = {}, []
    if which == "P1":
        for cond in p.conditioning_values():
            name = p.describe(cond)
            g = graph_of(expected_window_product(p, cond, L, matrix_of=lifted.__getitem__, method=method), delta)
            roots = root_set(g)
            linked = roots & g.self_linked()
            witnesses[name] = {"roots": sorted(roots), "self_linked_roots": sorted(linked)}
            if not roots:
                failures.append(f"spanning_tree: no root at {name}")
            elif not linked:
                failures.append(f"root_self_link: no self-linked root at {name}")
        return _report("P1", {"L": L, "delta": delta}, witnesses, failures)
    if which != "P2":
        raise PreconditionError(f"unknown proposition {which!r}")
    info = structural_classes(p, tau0)
    params = {"L": L, "delta": delta, "tau0": info.tau0, "P": info.period}
    if info.offenders:
        return _report("P2", params, {"classes": info.to_json()},
                       [f"B.2.zero_pattern: weight in class {c} at delay {d}" for c, d in info.offenders])
    perm = block_permutation(info, p.tau_max, p.m)
    for cond in p.conditioning_values():
        name = p.describe(cond)
        e = expected_window_product(p, cond, L * info.period, matrix_of=lifted.__getitem__, method=method)
        per = []
        for k, blk in enumerate(perm.diagonal_blocks(e), start=1):
            g = graph_of(blk, delta)
            strong, looped = is_strongly_connected(g), bool(g.self_linked())
            per.append({"block": k, "strongly_connected": strong, "self_link": looped})
            if not strong:
                failures.append(f"strong_connectivity: block {k} at {name}")
            if not looped:
                failures.append(f"self_link: block {k} has no self-link at {name}")
        witnesses[name] = per
    witnesses["classes"] = info.to_json()
    return _report("P2", params, witnesses, failures)


def check_stationary_corollary(p: TopologyProcess, which: str, delta: float, mu: float,
                               tau0: int | None = None) -> ConditionReport:
    """i.i.d./uniformly ergodic Markov versions, stated on the stationary mean.

    ``C1`` needs instantaneous self-links above ``mu`` and a spanning tree in
    the delta-graph of the stationary mean of the total coupling.  ``C2``
    needs B.1/B.2 for ``tau0`` and a strongly connected delta-graph of the
    stationary mean of the class-0 coupling.
    """
    if which == "C1":
        diag, failures = _diag_above(p, 0, mu, "self_links")
        roots = root_set(graph_of(stationary_expectation(p), delta))
        if not roots:
            failures.append("spanning_tree: stationary mean coupling has no root")
        return _report("C1", {"delta": delta, "mu": mu},
                       {"g0_min_diagonal": diag, "roots": sorted(roots)}, failures)
    if which != "C2" or tau0 is None:
        raise PreconditionError("C2 needs tau0; which must be C1 or C2")
    info = delay_classes(dict(p.couplings), tau0)
    diag, failures = _diag_above(p, tau0, mu, "B.1")

    nonzero, b2 = _b2_clauses(info, delta, {"stationary": lambda f: stationary_expectation(p, f)})
    failures += b2
    strong = is_strongly_connected(graph_of(stationary_expectation(p, lambda s: info.ghat[s][0]), delta))
    if not strong:
        failures.append("strong_connectivity: stationary class-0 mean not strongly connected")
    return _report("C2", {"delta": delta, "mu": mu, "tau0": tau0, "P": info.period},
                   {"classes": info.to_json(), "delta_nonzero": nonzero, "strongly_connected": strong},
                   failures)


def search_parameters(check: Callable[..., ConditionReport], p: TopologyProcess, L_max: int = 8,
                      k_max: int = 12, **kwargs) -> tuple[int, float, ConditionReport] | None:
    """First ``(L, delta)`` on the grid ``L = 1..L_max``, ``delta = 2**-k`` that satisfies ``check``."""
    for L in range(1, L_max + 1):
        for k in range(k_max + 1):
            rep = check(p, L=L, delta=2.0 ** -k, **kwargs)
            if rep.satisfied:
                return L, 2.0 ** -k, rep
    return None


def _scrambling(pat: np.ndarray) -> bool:
    return is_scrambling_graph(DiGraph(pat))


def estimate_wolfowitz_N(matrices: Sequence, cap: int = 64, mode: str = "exhaustive",
                         seed: int | None = None, count: int = 1000) -> int | None:
    """Smallest ``n <= cap`` such that every length-``n`` product is scrambling.

    Works on zero patterns, so the answer is exact for the words it covers.
    ``exhaustive`` tracks the set of distinct product patterns and raises
    :class:`CapacityError` if it grows beyond ``2**20``.  ``sampled`` covers
    all words while there are at most ``count`` of them and ``count`` random
    words per length beyond that.
    """
    mats = [as_matrix(a, square=True) for a in matrices]
    if not mats or cap < 1:
        raise PreconditionError("need at least one matrix and cap >= 1")
    for k, a in enumerate(mats):
        if not is_sia(a):
            raise PreconditionError(f"matrix {k} is not SIA")
    pats = [pattern(a) for a in mats]
    if mode == "exhaustive":
        level = {pt.tobytes(): pt for pt in pats}
        for n in range(1, cap + 1):
            if all(_scrambling(pt) for pt in level.values()):
                return n
            nxt = {}
            for pt in level.values():
                for a in pats:
                    q = (a.astype(np.int64) @ pt.astype(np.int64)) > 0
                    nxt[q.tobytes()] = q
            if len(nxt) > EXHAUSTIVE_CAP:
                raise CapacityError("distinct product patterns exceed 2**20")
            level = nxt
        return None
    if mode != "sampled":
        raise PreconditionError(f"unknown mode {mode!r}")
    k = len(pats)
    for n in range(1, cap + 1):
        if k ** n <= count:
            words = itertools.product(range(k), repeat=n)
        else:
            rng = np.random.default_rng([0 if seed is None else seed, n])
            words = rng.integers(0, k, size=(count, n))
        if all(_scrambling(_word_pattern(pats, w)) for w in words):
            return n
    return None


def _word_pattern(pats, word) -> np.ndarray:
    out = pats[word[0]]
    for i in word[1:]:
        out = (pats[i].astype(np.int64) @ out.astype(np.int64)) > 0
    return out
