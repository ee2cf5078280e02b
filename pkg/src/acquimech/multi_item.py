"""Multi-item mechanisms for k i.i.d. items behind one quality bar.

Covers the joint LP-optimal mechanism OMk, the ordinal ranking mechanism for
two items together with its incentive audit (it is not truthful), and union
mechanisms that run k single-item mechanisms and greedily redistribute the
pooled acquisition mass toward the highest-quality items.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import (Instance, Mechanism, MultiInstance, MultiPolicy,
                   noise_product, prior_product)
from .lp import LpProblem, OPTIMAL, solve_lp

#: Refuse LPs and policy tensors beyond this many variables/cells by default.
DEFAULT_SIZE_BUDGET = 1_000_000

#: Pooled acquisition mass at or below this is treated as exactly zero.
GAMMA_ZERO_TOL = 1e-12

RANK_CLASSES = ("greater", "equal", "smaller")


class SizeBudgetError(RuntimeError):
    """Requested tensor/LP size exceeds the configured variable budget."""


def _check_budget(size: int, size_budget: int | None) -> None:
    budget = DEFAULT_SIZE_BUDGET if size_budget is None else int(size_budget)
    if size > budget:
        raise SizeBudgetError(f"problem size {size} exceeds budget {budget}")


def _policy_shape(n: int, m: int, k: int) -> tuple[int, ...]:
    return (k,) + (n,) * k + (m,) * k


def _flat_products(mi: MultiInstance):
    """Flattened joint noise (NV, NS) and joint prior (NV,) plus tuple lists."""
    inst, k = mi.base, mi.item_count
    n, m = inst.n, inst.m
    Rk = noise_product(inst.score_model, k).reshape(n**k, m**k)
    dk = prior_product(inst.prior, k).reshape(n**k)
    vts = list(itertools.product(range(n), repeat=k))
    sts = list(itertools.product(range(m), repeat=k))
    return Rk, dk, vts, sts


def _objective_coeffs(mi: MultiInstance, Rk, dk, vts) -> np.ndarray:
    """Per-variable reward weight (v_i - t) * prod_j r(v_j,s_j) d(v_j),
    shaped (k, NV, NS)."""
    inst, k = mi.base, mi.item_count
    values = inst.grid.values
    vsel = np.array([[values[vt[i]] for vt in vts] for i in range(k)])
    return (vsel - inst.bar)[:, :, None] * (dk[:, None] * Rk)[None, :, :]


def solve_omk(mi: MultiInstance, size_budget: int | None = None) -> MultiPolicy:
    """Jointly optimal IC monotone policy via one LP over all k items.

    Variables x_i(v-tuple, s-tuple); IC compares the owner's total expected
    acquisitions for every pair of reported quality tuples under the true
    tuple's noise; monotonicity is per item in its own score, other scores
    fixed.  Grows as k * n^k * m^k, hence the size budget.
    """
    inst, k = mi.base, mi.item_count
    n, m = inst.n, inst.m
    NV, NS = n**k, m**k
    nvars = k * NV * NS
    _check_budget(nvars, size_budget)
    Rk, dk, vts, sts = _flat_products(mi)
    c = _objective_coeffs(mi, Rk, dk, vts).ravel()

    def var(i: int, a: int, b: int) -> int:
        return (i * NV + a) * NS + b

    rows_i, cols_i, data = [], [], []
    row_id = 0
    b_all = np.arange(NS)
    for a in range(NV):          # true quality tuple
        for ap in range(NV):     # reported
            if a == ap:
                continue
            for i in range(k):
                rows_i.append(np.full(2 * NS, row_id))
                cols_i.append(np.concatenate([var(i, ap, 0) + b_all,
                                              var(i, a, 0) + b_all]))
                data.append(np.concatenate([Rk[a], -Rk[a]]))
            row_id += 1
    for i in range(k):
        stride = m ** (k - 1 - i)
        for a in range(NV):
            for b, st in enumerate(sts):
                if st[i] == 0:
                    continue
                rows_i.append(np.array([row_id, row_id]))
                cols_i.append(np.array([var(i, a, b - stride), var(i, a, b)]))
                data.append(np.array([1.0, -1.0]))
                row_id += 1
    A = sp.csr_matrix((np.concatenate(data),
                       (np.concatenate(rows_i), np.concatenate(cols_i))),
                      shape=(row_id, nvars))
    problem = LpProblem(c, A, np.zeros(row_id), np.zeros(nvars), np.ones(nvars))
    sol = solve_lp(problem)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"OMk LP unexpectedly {sol.status}")
    values = np.clip(sol.values, 0.0, 1.0)   # shave solver box noise
    return MultiPolicy(values.reshape(_policy_shape(n, m, k)))


@dataclass(frozen=True)
class RankPolicy:
    """Two-item ranking mechanism: accept decisions per reported order.

    ``per_rank_accept[rank]`` is a (2, m, m) 0/1 array over (item, s1, s2);
    ``aggregate[rank]`` is the (n, n) expected total acquisitions over true
    quality pairs, entries in [0, 2].
    """

    values: np.ndarray
    per_rank_accept: dict
    aggregate: dict


def ranking_mechanism(mi: MultiInstance) -> RankPolicy:
    """Ordinal two-item mechanism: acquire item i iff its posterior mean given
    both scores and the reported order clears the bar.

    Rank/score cells no quality pair can reach are rejected (an undefined
    posterior cannot certify the bar).
    """
    if mi.item_count != 2:
        raise ValueError("ranking mechanism is defined for exactly two items")
    inst = mi.base
    n, m = inst.n, inst.m
    d, R, t = inst.prior, inst.score_model, inst.bar
    values = inst.grid.values
    pairs = {
        "greater": [(a, b) for a in range(n) for b in range(n) if values[a] > values[b]],
        "equal": [(a, b) for a in range(n) for b in range(n) if values[a] == values[b]],
        "smaller": [(a, b) for a in range(n) for b in range(n) if values[a] < values[b]],
    }
    accept, aggregate = {}, {}
    for rank in RANK_CLASSES:
        members = pairs[rank]
        acc = np.zeros((2, m, m))
        if members:
            w_pair = np.array([d[a] * d[b] for a, b in members])
            r1 = np.array([R[a] for a, _ in members])    # (P, m)
            r2 = np.array([R[b] for _, b in members])
            v1 = np.array([values[a] for a, _ in members])
            v2 = np.array([values[b] for _, b in members])
            # cell weights w(pair, s1, s2) = d(a) d(b) r(a,s1) r(b,s2)
            w = w_pair[:, None, None] * r1[:, :, None] * r2[:, None, :]
            total = w.sum(axis=0)
            with np.errstate(invalid="ignore"):
                post1 = np.where(total > 0, (v1[:, None, None] * w).sum(0) / total, -np.inf)
                post2 = np.where(total > 0, (v2[:, None, None] * w).sum(0) / total, -np.inf)
            acc[0] = post1 >= t
            acc[1] = post2 >= t
        agg = np.zeros((n, n))
        both = acc[0] + acc[1]
        for a in range(n):
            for b in range(n):
                agg[a, b] = float(R[a] @ both @ R[b])
        accept[rank] = acc
        aggregate[rank] = agg
    return RankPolicy(values=np.array(values), per_rank_accept=accept,
                      aggregate=aggregate)


@dataclass(frozen=True)
class RmViolation:
    v1_index: int
    v2_index: int
    truthful_rank: str
    better_rank: str
    gain: float


def _truthful_rank(values: np.ndarray, a: int, b: int) -> str:
    if values[a] > values[b]:
        return "greater"
    if values[a] < values[b]:
        return "smaller"
    return "equal"


def rm_ic_audit(policy: RankPolicy, tol: float = 1e-9) -> list[RmViolation]:
    """All quality pairs where misreporting the order beats the truth."""
    n = policy.aggregate["greater"].shape[0]
    out = []
    for a in range(n):
        for b in range(n):
            truth = _truthful_rank(policy.values, a, b)
            honest = policy.aggregate[truth][a, b]
            for rank in RANK_CLASSES:
                if rank == truth:
                    continue
                gain = policy.aggregate[rank][a, b] - honest
                if gain > tol:
                    out.append(RmViolation(a, b, truth, rank, float(gain)))
    return out


@dataclass(frozen=True)
class UnionInputs:
    """The k single-item acquiring matrices a union mechanism is built from."""

    mechanisms: tuple[Mechanism, ...]


def union_compose(mi: MultiInstance, inputs: UnionInputs,
                  quality_indices: tuple[int, ...],
                  score_indices: tuple[int, ...]) -> np.ndarray:
    """Redistribute the pooled acquisition mass of one realized profile.

    Gamma = sum_i y_i(v_i, s_i) is reallocated greedily by quality: items
    strictly above the bracketing level v(q) get probability 1, items at
    v(q) split the remainder evenly, items below get 0.  Gamma = 0 has no
    bracketing level and returns all zeros (the only allocation with the
    right total).
    """
    k = mi.item_count
    values = mi.base.grid.values
    ys = [float(inputs.mechanisms[i].matrix[quality_indices[i], score_indices[i]])
          for i in range(k)]
    gamma = sum(ys)
    x = np.zeros(k)
    if gamma <= GAMMA_ZERO_TOL:
        return x
    vvals = [values[q] for q in quality_indices]
    for level in sorted(set(vvals), reverse=True):
        above = sum(1 for v in vvals if v > level)
        at_least = sum(1 for v in vvals if v >= level)
        if above < gamma <= at_least:
            share = (gamma - above) / (at_least - above)
            for i, v in enumerate(vvals):
                if v > level:
                    x[i] = 1.0
                elif v == level:
                    x[i] = share
            return x
    raise AssertionError(f"no bracketing level for gamma={gamma}")


def union_policy(mi: MultiInstance, inputs: UnionInputs,
                 size_budget: int | None = None) -> MultiPolicy:
    """Apply the union redistribution at every (quality, score) profile."""
    inst, k = mi.base, mi.item_count
    n, m = inst.n, inst.m
    _check_budget(k * n**k * m**k, size_budget)
    tensors = np.zeros(_policy_shape(n, m, k))
    for vt in itertools.product(range(n), repeat=k):
        for st in itertools.product(range(m), repeat=k):
            x = union_compose(mi, inputs, vt, st)
            for i in range(k):
                tensors[(i,) + vt + st] = x[i]
    return MultiPolicy(tensors)


def solve_umopt(mi: MultiInstance,
                size_budget: int | None = None) -> tuple[UnionInputs, MultiPolicy]:
    """Optimal union mechanism: jointly pick k IC monotone single-item
    matrices and the coupled per-profile allocation.

    The LP couples free tensors x_i to the components through
    ``sum_i x_i(v, s) = sum_i y_i(v_i, s_i)`` per profile and maximizes the
    joint reward.  The returned policy re-applies the greedy redistribution
    to the optimal components; per profile both allocate the same mass to
    maximize the acquired margin under unit caps, so the objective is
    unchanged.
    """
    inst, k = mi.base, mi.item_count
    n, m = inst.n, inst.m
    NV, NS = n**k, m**k
    nx = k * NV * NS
    ny = k * n * m
    _check_budget(nx + ny, size_budget)
    Rk, dk, vts, sts = _flat_products(mi)
    c = np.concatenate([_objective_coeffs(mi, Rk, dk, vts).ravel(), np.zeros(ny)])

    def xvar(i: int, a: int, b: int) -> int:
        return (i * NV + a) * NS + b

    def yvar(i: int, v: int, s: int) -> int:
        return nx + (i * n + v) * m + s

    rows_i, cols_i, data = [], [], []
    row_id = 0

    def add_row(cols, vals):
        nonlocal row_id
        rows_i.append(np.full(len(cols), row_id))
        cols_i.append(np.asarray(cols))
        data.append(np.asarray(vals, dtype=float))
        row_id += 1

    # mass coupling per profile, as a pair of <= rows
    for a, vt in enumerate(vts):
        for b, st in enumerate(sts):
            cols = [xvar(i, a, b) for i in range(k)] + \
                   [yvar(i, vt[i], st[i]) for i in range(k)]
            vals = [1.0] * k + [-1.0] * k
            add_row(cols, vals)
            add_row(cols, [-v for v in vals])
    # single-item IC and monotonicity on each component
    R = inst.score_model
    for i in range(k):
        for v in range(n):
            for vp in range(n):
                if v == vp:
                    continue
                cols = [yvar(i, vp, s) for s in range(m)] + \
                       [yvar(i, v, s) for s in range(m)]
                add_row(cols, np.concatenate([R[v], -R[v]]))
        for v in range(n):
            for s in range(1, m):
                add_row([yvar(i, v, s - 1), yvar(i, v, s)], [1.0, -1.0])

    A = sp.csr_matrix((np.concatenate(data),
                       (np.concatenate(rows_i), np.concatenate(cols_i))),
                      shape=(row_id, nx + ny))
    problem = LpProblem(c, A, np.zeros(row_id),
                        np.zeros(nx + ny), np.ones(nx + ny))
    sol = solve_lp(problem)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"UMOPT LP unexpectedly {sol.status}")
    ys = np.clip(sol.values[nx:], 0.0, 1.0).reshape(k, n, m)
    inputs = UnionInputs(tuple(
        Mechanism(ys[i], label=f"UMOPT-component-{i}") for i in range(k)))
    return inputs, union_policy(mi, inputs, size_budget=size_budget)
