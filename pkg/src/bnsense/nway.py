"""n-way sensitivity analysis: multilinear coefficients of p(e) in n parameters.

Under proportional co-variation of n pairwise-independent parameters, the
evidence probability is multilinear — one coefficient per parameter subset.

Two routes compute the coefficients:

* when every parameter's family lives inside one clique, a single propagation
  suffices: each entry of that clique's potential is classified by which
  parameter contexts hold and which designated states it matches, and the
  2^n coefficients come out of signed local sums;
* in general, a linear system over the 2^n coefficients is assembled from
  whatever lower-order analyses are available plus full propagations at
  deterministic fresh parameter settings, extended until full rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (BnsenseError, CliqueMembershipError, DegenerateParameterError,
                     DependentParametersError, RankDeficiencyError)
from .functions import MultilinearFunction, evaluate_multilinear
from .jtree import JunctionTree, build_junction_tree
from .network import Evidence, Network, ParameterRef, apply_parameter
from .oneway import _component_scales, _extract_lines
from .propagation import evidence_probability, propagate_full

__all__ = ["check_independent", "same_clique_nway", "general_nway",
           "extra_propagation_budget", "NWayResult", "evaluate_multilinear"]


def check_independent(net: Network, params: list[ParameterRef]) -> bool:
    """Pairwise independence: distinct CPT rows, and neither parameter's
    variable is a parent of the other's (co-variation of one row must not
    interact with the other's conditioning context)."""
    for i in range(len(params)):
        for j in range(i + 1, len(params)):
            a, b = params[i], params[j]
            if a.variable == b.variable and a.parent_config == b.parent_config:
                return False
            if a.variable in net.parents[b.variable]:
                return False
            if b.variable in net.parents[a.variable]:
                return False
    return True


def _require_analyzable(net: Network, params: list[ParameterRef]) -> None:
    if not params:
        raise BnsenseError("no parameters given")
    if len(params) > len(_WEYL_PRIMES):
        raise BnsenseError(
            f"n-way analysis supports at most {len(_WEYL_PRIMES)} parameters")
    if not check_independent(net, params):
        raise DependentParametersError(
            "parameters are not pairwise independent (shared row, or one's "
            "variable is a parent of another's)")
    for ref in params:
        if net.parameter_value(ref) >= 1.0:
            raise DegenerateParameterError(
                "a parameter with value 1 cannot be co-varied")


# ---------------------------------------------------------------------------
# all families in one clique: one propagation


def _submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def same_clique_nway(tree: JunctionTree, params: list[ParameterRef],
                     evidence: Evidence | None = None) -> MultilinearFunction:
    """All 2^n coefficients from one propagation, read off one clique.

    Every entry of the clique potential carries each parameter's current row
    value as a factor exactly when that parameter's context (its parent
    configuration) holds in the entry.  Dividing the factor out and expanding
    the co-variation line per held context turns each entry into signed
    contributions to the coefficients of every subset between its matched
    parameters and its matched-plus-disagreeing ones.
    """
    net = tree.net
    _require_analyzable(net, params)
    needed = set()
    for ref in params:
        needed.update(net.family(ref.variable))
    home = tree.clique_containing(tuple(sorted(needed)))
    if home is None:
        raise CliqueMembershipError(
            "no single clique contains all the parameter families")

    propagate_full(tree, evidence, root=home)
    pot = tree.clique_potential(home)
    scale = _component_scales(tree)[tree.component_of[home]]

    members = pot.vars
    pos = {v: k for k, v in enumerate(members)}
    values = [net.parameter_value(ref) for ref in params]
    checks = []  # per param: (positions of parents, their required states, pos of var, state)
    for ref in params:
        par = net.parents[ref.variable]
        checks.append((tuple(pos[p] for p in par), ref.parent_config,
                       pos[ref.variable], ref.state))

    n = len(params)
    coeffs = {mask: 0.0 for mask in range(1 << n)}
    for idx, mass in np.ndenumerate(pot.table):
        if mass == 0.0:
            continue
        matched = 0
        disagreeing = 0
        weight = float(mass)
        for i, (ppos, pcfg, vpos, state) in enumerate(checks):
            if any(idx[k] != s for k, s in zip(ppos, pcfg)):
                continue  # context does not hold; entry is constant in this parameter
            if idx[vpos] == state:
                matched |= 1 << i
                weight /= values[i]
            else:
                disagreeing |= 1 << i
                weight /= (1.0 - values[i])
        for sub in _submasks(disagreeing):
            sign = -1.0 if bin(sub).count("1") % 2 else 1.0
            coeffs[matched | sub] += sign * weight

    return MultilinearFunction(tuple(params), {m: c * scale for m, c in coeffs.items()})


# ---------------------------------------------------------------------------
# the general case: a linear system over the 2^n coefficients


@dataclass
class NWayResult:
    function: MultilinearFunction
    budget: int                 # a-priori allocation of extra propagations
    extra_propagations: int     # actually performed beyond the initial one
    stats: tuple[int, int, int]  # summed (inward, outward, messages) over all trees


def extra_propagation_budget(n: int, m: int) -> int:
    """A-priori extra full propagations when m-way results already exist.

    One setting yields C(n,m)*2^m + 1 equations (each m-subset's coefficients
    plus the evidence-probability value); the budget covers the remaining
    2^n unknowns by that count.  It is an allocation, not a guarantee — the
    solver extends it whenever the system stays rank-deficient.
    """
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    per_setting = math.comb(n, m) * (1 << m) + 1
    missing = (1 << n) - per_setting
    if missing <= 0:
        return 0
    return -(-missing // per_setting)


_WEYL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _extension_setting(k: int, operating: np.ndarray) -> np.ndarray:
    """k-th deterministic fresh setting: each parameter moves a distinct
    fraction of its gap toward one.

    Collinear settings (every parameter moved by the same fraction) confine
    the value and slope equations to a low-dimensional span — at most 1 + n^2,
    below 2^n from n = 4 up — so the fractions must differ per parameter.
    Irrational rotations k*sqrt(prime) mod 1 spread the settings through the
    unit cube, keeping the system generically full-rank and well conditioned;
    the clamp keeps every parameter strictly inside (0, 1) and moving.
    """
    fractions = np.array([(k * math.sqrt(p)) % 1.0
                          for p in _WEYL_PRIMES[:len(operating)]])
    fractions = 0.05 + 0.9 * fractions
    return operating + fractions * (1.0 - operating)


def _value_row(n: int, setting: np.ndarray) -> np.ndarray:
    """Coefficient row of the evidence-probability value at a setting."""
    row = np.empty(1 << n)
    for mask in range(1 << n):
        prod = 1.0
        for i in range(n):
            if mask & (1 << i):
                prod *= setting[i]
        row[mask] = prod
    return row


def _line_rows(n: int, i: int, setting: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient rows for the slope and intercept of the line in parameter i
    when every other parameter is held at the setting."""
    slope = np.zeros(1 << n)
    intercept = np.zeros(1 << n)
    for mask in range(1 << n):
        prod = 1.0
        for j in range(n):
            if j != i and mask & (1 << j):
                prod *= setting[j]
        if mask & (1 << i):
            slope[mask] = prod
        else:
            intercept[mask] = prod
    return slope, intercept


def _mway_rows(n: int, indices: list[int], mf: MultilinearFunction,
               setting: np.ndarray):
    """Equations tying a lower-order analysis's coefficients to the unknowns.

    The fitted coefficient of subset Y within the analyzed tuple T equals the
    sum, over all global subsets Z with Z∩T = Y, of the unknown coefficient
    of Z times the setting values of Z's parameters outside T.
    """
    t_mask = 0
    for i in indices:
        t_mask |= 1 << i
    rows = []
    rhs = []
    for sub_mask, coeff in mf.coefficients.items():
        y_mask = 0
        for k, i in enumerate(indices):
            if sub_mask & (1 << k):
                y_mask |= 1 << i
        row = np.zeros(1 << n)
        for z in range(1 << n):
            if (z & t_mask) != y_mask:
                continue
            prod = 1.0
            rest = z & ~t_mask
            for j in range(n):
                if rest & (1 << j):
                    prod *= setting[j]
            row[z] = prod
        rows.append(row)
        rhs.append(coeff)
    return rows, rhs


def _eliminate(matrix: np.ndarray, rhs: np.ndarray, tol: float = 1e-10):
    """Row-echelon by partial pivoting; returns (rank, solution or None)."""
    a = matrix.astype(float).copy()
    b = rhs.astype(float).copy()
    m, ncols = a.shape
    pivot_cols = []
    row = 0
    for col in range(ncols):
        if row >= m:
            break
        lead = int(np.argmax(np.abs(a[row:, col]))) + row
        if abs(a[lead, col]) < tol:
            continue
        if lead != row:
            a[[row, lead]] = a[[lead, row]]
            b[[row, lead]] = b[[lead, row]]
        factors = a[row + 1:, col] / a[row, col]
        a[row + 1:] -= np.outer(factors, a[row])
        b[row + 1:] -= factors * b[row]
        pivot_cols.append(col)
        row += 1
    rank = len(pivot_cols)
    if rank < ncols:
        return rank, None
    x = np.zeros(ncols)
    for r in range(ncols - 1, -1, -1):
        col = pivot_cols[r]
        x[col] = (b[r] - a[r, col + 1:] @ x[col + 1:]) / a[r, col]
    return rank, x


def general_nway(net: Network, params: list[ParameterRef],
                 evidence: Evidence | None = None,
                 lower_order: list[MultilinearFunction] | None = None,
                 rank_tolerance: float = 1e-10) -> NWayResult:
    """Assemble and solve the coefficient system for arbitrary parameter sets.

    The initial propagation at the operating point contributes the evidence
    probability and every parameter's line there; given lower-order analyses
    contribute their coefficient equations.  While the system is
    rank-deficient, further full propagations run at deterministic fresh
    settings, up to a hard cap of 2^n, each adding its value and line
    equations.
    """
    _require_analyzable(net, params)
    n = len(params)
    cap = 1 << n
    operating = np.array([net.parameter_value(ref) for ref in params])

    index_of = {ref: i for i, ref in enumerate(params)}

    rows: list[np.ndarray] = []
    rhs: list[float] = []
    totals = np.zeros(3, dtype=int)

    def add_propagation(setting: np.ndarray, network: Network) -> None:
        tree = build_junction_tree(network)
        propagate_full(tree, evidence)
        totals[:] += tree.stats.snapshot()
        rows.append(_value_row(n, setting))
        rhs.append(evidence_probability(tree))
        lines, skipped = _extract_lines(tree, params)  # looks up current row values
        if skipped:
            raise DegenerateParameterError(
                "a parameter reached value 1 at an analysis setting")
        for i, ref in enumerate(params):
            slope_row, intercept_row = _line_rows(n, i, setting)
            line = lines[ref]
            rows.append(slope_row)
            rhs.append(line.slope)
            rows.append(intercept_row)
            rhs.append(line.intercept)

    add_propagation(operating, net)

    for mf in lower_order or []:
        indices = []
        for ref in mf.params:
            if ref not in index_of:
                raise BnsenseError(
                    "lower-order analysis mentions a parameter outside the requested set")
            indices.append(index_of[ref])
        extra_rows, extra_rhs = _mway_rows(n, indices, mf, operating)
        rows.extend(extra_rows)
        rhs.extend(extra_rhs)

    budget = extra_propagation_budget(n, len(lower_order[0].params)) if lower_order else (
        extra_propagation_budget(n, 1))
    extra = 0
    while True:
        rank, solution = _eliminate(np.array(rows), np.array(rhs), rank_tolerance)
        if solution is not None:
            break
        if extra >= cap:
            raise RankDeficiencyError(
                f"coefficient system stuck at rank {rank} of {1 << n} after "
                f"{extra} extra propagations")
        extra += 1
        setting = _extension_setting(extra, operating)
        network = net
        for i, ref in enumerate(params):
            network = apply_parameter(network, ref, float(setting[i]))
        add_propagation(setting, network)

    residual = float(np.max(np.abs(np.array(rows) @ solution - np.array(rhs))))
    if residual > 1e-6:
        raise BnsenseError(
            f"coefficient system is inconsistent (residual {residual:.3e}); "
            "were the lower-order analyses computed at the operating point?")

    coeffs = {mask: float(solution[mask]) for mask in range(1 << n)}
    return NWayResult(MultilinearFunction(tuple(params), coeffs), budget, extra,
                      tuple(int(t) for t in totals))
