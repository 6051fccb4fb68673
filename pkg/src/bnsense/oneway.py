"""One-way sensitivity analysis on a propagated junction tree.

The posterior of interest, as a function of a single CPT entry under
proportional co-variation, is a quotient of two lines.  Both lines are read
off clique potentials:

* the *local-extraction* route computes a line's slope and intercept directly
  from the parameter's family-clique potential (one potential read per
  parameter, after one inward and at most two outward propagations for every
  parameter at once);
* the *two-point* route propagates at a second parameter value and fits the
  line through the two evaluations (used when all posteriors for one
  parameter are wanted).

Both routes exist as public operations and must agree to high precision; the
tests hold them to the enumeration oracle as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BnsenseError
from .functions import LinearCoeffs, SensitivityFunction, derivative, evaluate
from .jtree import JunctionTree
from .network import (Evidence, Network, ParameterRef, QueryRef, covary_row,
                      enumerate_parameters)
from .potentials import Potential
from .propagation import (collect, distribute, enter_finding, evidence_probability,
                          marginal, propagate_full)

__all__ = ["relevant_parameters", "one_output_all_params_m1", "one_output_all_params_m2",
           "all_outputs_one_param", "OneWayAnalysis", "OneParamAnalysis",
           "evaluate", "derivative"]


@dataclass
class OneWayAnalysis:
    """Sensitivity functions for one posterior over many parameters."""

    query: QueryRef
    functions: dict[ParameterRef, SensitivityFunction]
    skipped: list[tuple[ParameterRef, str]] = field(default_factory=list)


@dataclass
class OneParamAnalysis:
    """Sensitivity functions for all states of all targets over one parameter."""

    parameter: ParameterRef
    functions: dict[int, tuple[SensitivityFunction, ...]]  # variable -> per-state
    denominator: LinearCoeffs


# ---------------------------------------------------------------------------
# relevance screening


def _descendant_closure(net: Network, roots: set[int]) -> set[int]:
    out = set(roots)
    frontier = list(roots)
    while frontier:
        v = frontier.pop()
        for c in net.children(v):
            if c not in out:
                out.add(c)
                frontier.append(c)
    return out


def _influenced_variables(net: Network, target: int, evidence_vars: set[int]) -> set[int]:
    """Variables whose CPT can influence p(target | evidence) — a sound superset.

    For each variable B, imagine an extra parent of B that selects among CPT
    rows; B's parameters can matter only if that parent is connected to the
    target by an active trail.  Findings are treated as observations of a
    dummy *child* of the finding variable (virtual evidence), so no real
    variable is conditioned on: chains and forks stay open everywhere, and a
    collider is open iff the junction variable has a finding on or below it.
    """
    has_observed_below = _ancestors_of_evidence(net, evidence_vars)
    relevant: set[int] = set()
    for b in range(net.n_variables):
        # ball starts at b, arriving from the imagined extra parent
        seen: set[tuple[int, bool]] = set()
        stack: list[tuple[int, bool]] = [(b, True)]  # (node, arrived-from-parent?)
        hit = False
        while stack:
            node, from_parent = stack.pop()
            if (node, from_parent) in seen:
                continue
            seen.add((node, from_parent))
            if node == target:
                hit = True
                break
            if from_parent:
                for c in net.children(node):
                    stack.append((c, True))
                if node in has_observed_below:  # collider opened by a finding at/below
                    for p in net.parents[node]:
                        stack.append((p, False))
            else:
                for p in net.parents[node]:
                    stack.append((p, False))
                for c in net.children(node):
                    stack.append((c, True))
        if hit:
            relevant.add(b)
    return relevant


def _ancestors_of_evidence(net: Network, evidence_vars: set[int]) -> set[int]:
    """Variables with a finding on themselves or on some descendant."""
    out = set(evidence_vars)
    for v in reversed(net.topological_order()):
        if v in out:
            continue
        if any(c in out for c in net.children(v)):
            out.add(v)
    return out


def relevant_parameters(net: Network, query: QueryRef,
                        evidence: Evidence | None = None) -> list[ParameterRef]:
    """Parameters that may influence the query — a sound superset, in CPT order."""
    evidence_vars = set(evidence.variables()) if evidence is not None else set()
    keep = _influenced_variables(net, query.variable, evidence_vars)
    return [p for p in enumerate_parameters(net) if p.variable in keep]


# ---------------------------------------------------------------------------
# local extraction of line coefficients from clique potentials


def _row_mass_by_state(tree: JunctionTree, pot: Potential, var: int,
                       parent_config: tuple[int, ...]) -> np.ndarray:
    """Sum of a clique potential over everything but the family, at one parent row."""
    fam = tree.net.family(var)
    marg = pot.marginalize(fam)
    assign = dict(zip(tree.net.parents[var], parent_config))
    idx = tuple(slice(None) if v == var else assign[v] for v in marg.vars)
    return np.asarray(marg.table[idx], dtype=float)


def _component_scales(tree: JunctionTree) -> dict[int, float]:
    """For each component, the product of the *other* components' masses."""
    comps = tree.component_roots
    scales = {}
    for comp in comps:
        s = 1.0
        for other in comps:
            if other != comp:
                s *= tree.component_mass[other]
        scales[comp] = s
    return scales


def _extract_lines(tree: JunctionTree, params: list[ParameterRef]):
    """Line coefficients of the tree's current total mass in each parameter.

    Requires a consistent tree.  For parameter p(b_i | pi) of variable B with
    family clique K, the potential rows at (B, pi) split the clique total into
    the part carrying the parameter, the part co-varying with it, and the
    rest; slope and intercept follow by dividing out the current row values.
    Degenerate parameters (value 1) are reported, not silently dropped.
    """
    lines: dict[ParameterRef, LinearCoeffs] = {}
    skipped: list[tuple[ParameterRef, str]] = []
    scales = _component_scales(tree)
    pot_cache: dict[int, Potential] = {}
    for ref in params:
        value = tree.net.parameter_value(ref)
        if value >= 1.0:
            skipped.append((ref, "parameter value is 1; co-variation undefined"))
            continue
        cid = tree.family_clique[ref.variable]
        pot = pot_cache.get(cid)
        if pot is None:
            pot = pot_cache[cid] = tree.clique_potential(cid)
        mass = _row_mass_by_state(tree, pot, ref.variable, ref.parent_config)
        total = pot.total()
        held = float(mass[ref.state])
        covaried = float(mass.sum()) - held
        rest = total - held - covaried
        direct = held / value if value > 0 else 0.0  # 0/0 := 0 (mass vanishes with value)
        shrink = covaried / (1.0 - value)
        scale = scales[tree.component_of[cid]]
        lines[ref] = LinearCoeffs((direct - shrink) * scale, (shrink + rest) * scale)
    return lines, skipped


# ---------------------------------------------------------------------------
# one output, all parameters


def _query_root(tree: JunctionTree, query: QueryRef) -> int:
    return tree.var_clique[query.variable]


def _indicator(tree: JunctionTree, query: QueryRef) -> np.ndarray:
    vec = np.zeros(tree.net.arity(query.variable))
    vec[query.state] = 1.0
    return vec


def one_output_all_params_m1(tree: JunctionTree, query: QueryRef,
                             evidence: Evidence | None = None,
                             params: list[ParameterRef] | None = None) -> OneWayAnalysis:
    """Local-extraction analysis: 1 inward + 2 outward propagations total.

    The evidence propagation yields every denominator line locally; injecting
    the query indicator at the query clique and replaying one outward pass
    yields every numerator line the same way.
    """
    if params is None:
        params = enumerate_parameters(tree.net)
    home = _query_root(tree, query)
    propagate_full(tree, evidence, root=home)
    den_lines, skipped = _extract_lines(tree, params)

    tree.inject_finding(home, query.variable, _indicator(tree, query))
    distribute(tree, home)
    num_lines, _ = _extract_lines(tree, params)

    functions = {
        ref: SensitivityFunction(ref, num_lines[ref], den_lines[ref])
        for ref in params if ref in den_lines
    }
    return OneWayAnalysis(query, functions, skipped)


def one_output_all_params_m2(tree: JunctionTree, query: QueryRef,
                             evidence: Evidence | None = None,
                             params: list[ParameterRef] | None = None) -> OneWayAnalysis:
    """Two-point analysis: 1 inward + 2 outward propagations total.

    One inward pass toward the query clique, one outward pass with the query
    indicator, one outward pass with the complementary finding.  Each pass
    evaluates p(target-or-complement, e) at the current parameter value and,
    by reweighting the family-clique potential with a co-varied row, at a
    second value; the two points fix the line.  Numerator lines come from the
    indicator pass, denominator lines are the sum over the two passes.
    """
    if params is None:
        params = enumerate_parameters(tree.net)
    home = _query_root(tree, query)
    tree.reset()
    if evidence is not None:
        for var, vec in evidence.items():
            enter_finding(tree, var, vec)
    collect(tree, home)

    tree.inject_finding(home, query.variable, _indicator(tree, query))
    distribute(tree, home)
    num_lines, skipped = _two_point_lines(tree, params)

    tree.inject_finding(home, query.variable, 1.0 - _indicator(tree, query))
    distribute(tree, home)
    rest_lines, _ = _two_point_lines(tree, params)

    functions = {}
    for ref in params:
        if ref not in num_lines:
            continue
        num = num_lines[ref]
        rest = rest_lines[ref]
        functions[ref] = SensitivityFunction(
            ref, num, LinearCoeffs(num.slope + rest.slope, num.intercept + rest.intercept))
    return OneWayAnalysis(query, functions, skipped)


def _second_value(x1: float) -> float:
    return (x1 + 1.0) / 2.0 if x1 < 0.5 else x1 / 2.0


def _two_point_lines(tree: JunctionTree, params: list[ParameterRef]):
    """Lines of the tree's current mass in each parameter via row reweighting.

    The clique potential carries the current row values; multiplying its
    (B, pi) slices by covaried-row / current-row ratios evaluates the mass at
    a second parameter value without touching the tree.
    """
    lines: dict[ParameterRef, LinearCoeffs] = {}
    skipped: list[tuple[ParameterRef, str]] = []
    scales = _component_scales(tree)
    pot_cache: dict[int, Potential] = {}
    mass_total = 1.0
    for comp in tree.component_roots:
        mass_total *= tree.component_mass[comp]
    for ref in params:
        x1 = tree.net.parameter_value(ref)
        if x1 >= 1.0:
            skipped.append((ref, "parameter value is 1; co-variation undefined"))
            continue
        x2 = _second_value(x1)
        cid = tree.family_clique[ref.variable]
        pot = pot_cache.get(cid)
        if pot is None:
            pot = pot_cache[cid] = tree.clique_potential(cid)
        mass = _row_mass_by_state(tree, pot, ref.variable, ref.parent_config)
        row1 = tree.net.row(ref.variable, ref.parent_config)
        row2 = covary_row(row1, ref.state, x2)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(row1 > 0, row2 / np.where(row1 > 0, row1, 1.0), 0.0)
        reweighted = float((mass * ratio).sum()) + (pot.total() - float(mass.sum()))
        scale = scales[tree.component_of[cid]]
        y1 = mass_total
        y2 = reweighted * scale
        lines[ref] = LinearCoeffs((y1 - y2) / (x1 - x2), (x1 * y2 - x2 * y1) / (x1 - x2))
    return lines, skipped


# ---------------------------------------------------------------------------
# all outputs, one parameter


def all_outputs_one_param(tree: JunctionTree, ref: ParameterRef,
                          evidence: Evidence | None = None,
                          targets: list[int] | None = None) -> OneParamAnalysis:
    """Every posterior's line pair in one parameter: 1 inward + 2 outward.

    Propagate at the current value, record all target marginals and p(e);
    co-vary the parameter's row to a second value, replay one outward pass
    from the family clique, record again; fit every line through its two
    points.
    """
    x1 = tree.net.parameter_value(ref)
    if x1 >= 1.0:
        raise BnsenseError("parameter value is 1; co-variation undefined")
    x2 = _second_value(x1)
    if targets is None:
        targets = list(range(tree.net.n_variables))

    home = tree.family_clique[ref.variable]
    propagate_full(tree, evidence, root=home)
    first = {var: marginal(tree, var).copy() for var in targets}
    pe1 = evidence_probability(tree)

    tree.set_parameter(ref, x2)
    distribute(tree, home)
    second = {var: marginal(tree, var).copy() for var in targets}
    pe2 = evidence_probability(tree)

    def two_point(y1: float, y2: float) -> LinearCoeffs:
        return LinearCoeffs((y1 - y2) / (x1 - x2), (x1 * y2 - x2 * y1) / (x1 - x2))

    den = two_point(pe1, pe2)
    functions = {
        var: tuple(
            SensitivityFunction(ref, two_point(float(first[var][s]), float(second[var][s])), den)
            for s in range(tree.net.arity(var)))
        for var in targets
    }
    return OneParamAnalysis(ref, functions, den)
