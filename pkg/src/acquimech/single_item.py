"""Single-item mechanism synthesis.

Implements the score-only mechanism (SOM), the consistency test that makes it
optimal among deterministic incentive-compatible monotone mechanisms, a
brute-force threshold oracle, two-menu mechanisms (TMM) with exact optimal
parameter search, the LP-optimal mechanism OM1, and the menu-reduction map
that compresses an optimal mechanism to at most one row per above-bar quality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Instance, Mechanism
from .lp import LpProblem, LpSolution, OPTIMAL, solve_lp

#: Sentinel threshold meaning "no score triggers acquisition" (an all-zero row).
#: It sorts after every real score index.
NEVER: Optional[int] = None


def _margin(instance: Instance) -> np.ndarray:
    """Per-quality objective weight (v - t) d(v)."""
    return (instance.grid.values - instance.bar) * instance.prior


def _tail(score_model: np.ndarray, b: Optional[int]) -> np.ndarray:
    """Row sums of the noise model over scores >= b; zeros for NEVER."""
    if b is None:
        return np.zeros(score_model.shape[0])
    return score_model[:, b:].sum(axis=1)


def _reward(instance: Instance, matrix: np.ndarray) -> float:
    return float(np.sum(_margin(instance)[:, None] * matrix * instance.score_model))


def solve_som(instance: Instance) -> Mechanism:
    """Score-only mechanism: acquire on score s iff the posterior margin at s
    is nonnegative, regardless of the report.

    Column s is all-ones iff ``sum_v (v - t) d(v) r(v, s) >= 0`` (ties
    acquire); every row is identical, so the mechanism is trivially
    incentive compatible.
    """
    col = _margin(instance) @ instance.score_model
    row = (col >= 0.0).astype(float)
    return Mechanism(np.tile(row, (instance.n, 1)), label="SOM")


@dataclass(frozen=True)
class ScoreDiagnostic:
    score_index: int
    score: float
    reachable: bool
    posterior: Optional[float]
    ok: Optional[bool]   # None when the score is unreachable and skipped


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    diagnostics: tuple[ScoreDiagnostic, ...]


def check_consistency(instance: Instance) -> ConsistencyReport:
    """Noise model vs prior consistency: E[v|s] clears the bar iff s does.

    Unreachable scores (zero posterior denominator) are skipped but flagged
    in the diagnostics.
    """
    from .core import posterior_mean

    diags = []
    ok_all = True
    for s in range(instance.m):
        post = posterior_mean(instance, s)
        if post is None:
            diags.append(ScoreDiagnostic(s, float(instance.grid.scores[s]),
                                         False, None, None))
            continue
        ok = bool((post >= instance.bar) == (instance.grid.scores[s] >= instance.bar))
        ok_all &= ok
        diags.append(ScoreDiagnostic(s, float(instance.grid.scores[s]),
                                     True, post, ok))
    return ConsistencyReport(bool(ok_all), tuple(diags))


def best_threshold_mechanism(instance: Instance) -> tuple[Mechanism, float]:
    """Brute-force oracle over all m+1 single-threshold mechanisms.

    Every deterministic, incentive-compatible, monotone mechanism has one
    shared row of the form (0..0, 1..1), so enumerating the m real
    thresholds plus never-acquire and keeping the best reward is exact.
    """
    col = _margin(instance) @ instance.score_model
    best_reward, best_j = 0.0, instance.m   # start from never-acquire
    for j in range(instance.m - 1, -1, -1):
        r = float(col[j:].sum())
        if r > best_reward:
            best_reward, best_j = r, j
    row = np.zeros(instance.m)
    row[best_j:] = 1.0
    label = "never" if best_j == instance.m else f"threshold[{best_j}]"
    return Mechanism(np.tile(row, (instance.n, 1)), label=label), best_reward


@dataclass(frozen=True)
class TmmParams:
    """Two-menu parameters: lottery menu (prob alpha from score b1) vs sure
    menu (prob 1 from score b2), with the self-selection set V1.

    ``v1_set`` holds the quality indices that strictly prefer the lottery:
    ``alpha * sum_{s>=b1} r(v,s) > sum_{s>=b2} r(v,s)``.
    """

    b1_index: Optional[int]
    b2_index: Optional[int]
    alpha: float
    v1_set: frozenset[int]


def _check_menu_order(b1: Optional[int], b2: Optional[int], m: int) -> None:
    for name, b in (("b1", b1), ("b2", b2)):
        if b is not None and not 0 <= b < m:
            raise IndexError(f"{name} index {b} out of range [0, {m})")
    # NEVER sorts last, so b1 = NEVER forces b2 = NEVER
    if b1 is None and b2 is not None:
        raise ValueError("b1 <= b2 violated: NEVER sorts after every score")
    if b1 is not None and b2 is not None and b1 > b2:
        raise ValueError(f"b1 <= b2 violated: {b1} > {b2}")


def tmm_build(instance: Instance, b1_index: Optional[int], b2_index: Optional[int],
              alpha: float) -> tuple[TmmParams, Mechanism]:
    """Materialize the two-menu mechanism TMM(b1, b2, alpha).

    Rows in V1 read (0..0, alpha..alpha) from b1; the rest read
    (0..0, 1..1) from b2.  A NEVER threshold yields an all-zero pattern.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    _check_menu_order(b1_index, b2_index, instance.m)
    tail1 = _tail(instance.score_model, b1_index)
    tail2 = _tail(instance.score_model, b2_index)
    in_v1 = alpha * tail1 > tail2
    matrix = np.zeros((instance.n, instance.m))
    for v in range(instance.n):
        if in_v1[v]:
            if b1_index is not None:
                matrix[v, b1_index:] = alpha
        else:
            if b2_index is not None:
                matrix[v, b2_index:] = 1.0
    params = TmmParams(b1_index, b2_index, float(alpha),
                       frozenset(np.nonzero(in_v1)[0].tolist()))
    return params, Mechanism(matrix, label="TMM")


def tmm_optimal(instance: Instance) -> tuple[TmmParams, Mechanism, float]:
    """Exact search for the reward-maximizing two-menu mechanism.

    For each ordered pair (b1, b2) with b1 <= b2 (NEVER last), the reward is
    piecewise linear in alpha with breakpoints where some quality flips
    menus; at a breakpoint the flipping owner is indifferent and contributes
    the same reward either way, so the curve is continuous and evaluating
    {0, 1} plus all interior breakpoints cannot lose the supremum.  Both
    menu assignments adjacent to each breakpoint are scored anyway to guard
    the argmax against rounding in the membership test.
    """
    margin = _margin(instance)
    thresholds: list[Optional[int]] = list(range(instance.m)) + [NEVER]
    best = (-np.inf, NEVER, NEVER, 0.0)
    for i1, b1 in enumerate(thresholds):
        for b2 in thresholds[i1:]:
            tail1 = _tail(instance.score_model, b1)
            tail2 = _tail(instance.score_model, b2)
            cand = {0.0, 1.0}
            with np.errstate(divide="ignore", invalid="ignore"):
                breaks = np.where(tail1 > 0, tail2 / tail1, np.inf)
            cand.update(float(a) for a in breaks if 0.0 < a < 1.0)
            for alpha in sorted(cand):
                accept_lottery = alpha * tail1
                strict = accept_lottery > tail2
                loose = accept_lottery >= tail2
                for in_v1 in (strict, loose):
                    accept = np.where(in_v1, accept_lottery, tail2)
                    reward = float(margin @ accept)
                    if reward > best[0]:
                        best = (reward, b1, b2, alpha)
    _, b1, b2, alpha = best
    params, mech = tmm_build(instance, b1, b2, alpha)
    return params, mech, _reward(instance, mech.matrix)


def om1_problem(instance: Instance) -> LpProblem:
    """The optimal-mechanism LP: maximize expected margin over acquiring
    matrices subject to incentive compatibility and score monotonicity.

    Variables are x(v, s) in [0, 1], flattened row-major.  IC compares every
    ordered quality pair under the true-quality noise row; monotonicity is
    enforced on consecutive score columns.
    """
    n, m = instance.n, instance.m
    R = instance.score_model
    c = (_margin(instance)[:, None] * R).ravel()
    rows, rhs = [], []
    for v in range(n):
        for vp in range(n):
            if v == vp:
                continue
            row = np.zeros((n, m))
            row[vp] += R[v]
            row[v] -= R[v]
            rows.append(row.ravel())
            rhs.append(0.0)
    for v in range(n):
        for s in range(1, m):
            row = np.zeros((n, m))
            row[v, s - 1] = 1.0
            row[v, s] = -1.0
            rows.append(row.ravel())
            rhs.append(0.0)
    A = np.asarray(rows) if rows else None
    return LpProblem(c, A, np.asarray(rhs), np.zeros(n * m), np.ones(n * m))


def _solved(problem: LpProblem) -> LpSolution:
    sol = solve_lp(problem)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"optimal-mechanism LP unexpectedly {sol.status}")
    return sol


def solve_om1(instance: Instance) -> Mechanism:
    """LP-optimal incentive-compatible monotone mechanism."""
    sol = _solved(om1_problem(instance))
    # basic variables can sit a solver tolerance outside the box
    matrix = np.clip(sol.values.reshape(instance.n, instance.m), 0.0, 1.0)
    return Mechanism(matrix, label="OM1")


def om1_alternate_optimum(instance: Instance) -> Mechanism:
    """A second point of the OM1 optimal face, maximizing total acquiring mass.

    The optimum is often non-unique; re-solving with the objective pinned to
    the optimal value yields another representative (possibly the same
    vertex) for convexity diagnostics.
    """
    base = om1_problem(instance)
    z = _solved(base).objective_value
    A = np.vstack([base.constraint_matrix, -base.objective])
    rhs = np.concatenate([base.constraint_rhs, [-(z - 1e-9)]])
    stage2 = LpProblem(np.ones(base.num_variables), A, rhs, base.lower, base.upper)
    sol = _solved(stage2)
    matrix = np.clip(sol.values.reshape(instance.n, instance.m), 0.0, 1.0)
    return Mechanism(matrix, label="OM1-alt")


def reduce_menu(instance: Instance, mechanism: Mechanism) -> Mechanism:
    """Collapse below-bar rows onto their best above-bar row.

    Each quality v <= t is remapped to f(v), the above-bar row maximizing the
    owner's acquisition probability under v's noise (ties toward the smallest
    quality).  The caller guarantees the input is IC and monotone; the output
    then stays IC, monotone, and at least as profitable, with menu size at
    most |{v : v > t}|.  When no quality exceeds the bar the all-zero
    mechanism is returned.
    """
    values = instance.grid.values
    above = [v for v in range(instance.n) if values[v] > instance.bar]
    if not above:
        return Mechanism(np.zeros_like(mechanism.matrix), label="reduced")
    out = np.array(mechanism.matrix)
    for v in range(instance.n):
        if values[v] > instance.bar:
            continue
        best_val, best_row = -np.inf, above[0]
        for vb in above:
            acc = float(mechanism.matrix[vb] @ instance.score_model[v])
            if acc > best_val:
                best_val, best_row = acc, vb
        out[v] = mechanism.matrix[best_row]
    return Mechanism(out, label="reduced")


def menu_size(mechanism: Mechanism, tol: float = 1e-6) -> int:
    """Number of distinct rows (menus) up to entrywise tolerance."""
    reps: list[np.ndarray] = []
    for row in mechanism.matrix:
        if not any(np.allclose(row, rep, rtol=0.0, atol=tol) for rep in reps):
            reps.append(row)
    return len(reps)
