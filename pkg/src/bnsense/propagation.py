"""Message passing on a junction tree: collect, distribute, marginals, retraction.

Messages are directed: each sepset stores one potential per direction.  A
message out of a clique is the marginal, onto the sepset, of the clique's
charge times its attached finding vectors times the messages it received from
its *other* neighbors.  This is algebraically the classical flow (marginalize,
divide by the old sepset content, multiply into the receiver) with the
division cancelled symbolically — which is exactly what lets a replayed
outward pass retract a hard finding without dividing by zeros it created.

After collect + distribute with findings entered, every clique potential
equals p(members, e) and every sepset potential equals p(members, e); the
finding vectors attached at a clique are multiplied in lazily, so dropping one
vector from the registry and replaying a single outward pass from its
attachment clique yields the tree for the reduced evidence set.
"""

from __future__ import annotations

import numpy as np

from .errors import BnsenseError, ImpossibleEvidenceError, NetworkFormatError
from .jtree import JunctionTree, PropagationStats
from .network import Evidence

__all__ = ["PropagationStats", "enter_finding", "collect", "distribute",
           "propagate_full", "evidence_probability", "marginal", "retract_finding"]


def enter_finding(tree: JunctionTree, var: int, vector) -> None:
    """Register a finding vector for a variable, replacing any prior one.

    The vector is attached at the variable's family clique and folded into
    message computation lazily; the tree needs a propagation afterwards.
    """
    vec = np.asarray(vector, dtype=float)
    if vec.shape != (tree.net.arity(var),):
        raise NetworkFormatError(
            f"finding for variable {var} has length {vec.size}, "
            f"expected {tree.net.arity(var)}")
    if np.any(vec < 0) or not np.all(np.isfinite(vec)):
        raise NetworkFormatError(f"finding for variable {var} must be finite and nonnegative")
    if not np.any(vec > 0):
        raise ImpossibleEvidenceError(f"finding for variable {var} is all-zero")
    tree.findings[var] = vec
    tree.consistent = False


def _component_root(tree: JunctionTree, comp: int, chosen_root: int | None) -> int:
    if chosen_root is not None and tree.component_of[chosen_root] == comp:
        return chosen_root
    return comp  # component ids are their lowest clique id


def _bfs(tree: JunctionTree, root: int):
    """BFS order of the root's component plus each clique's (parent, sepset)."""
    order = [root]
    parent: dict[int, tuple[int, int]] = {}
    seen = {root}
    i = 0
    while i < len(order):
        cur = order[i]
        i += 1
        for nb, s_idx in tree.neighbors[cur]:
            if nb not in seen:
                seen.add(nb)
                parent[nb] = (cur, s_idx)
                order.append(nb)
    return order, parent


def _send(tree: JunctionTree, src: int, dst: int, s_idx: int) -> None:
    sep = tree.sepsets[s_idx]
    pot = tree.local_product(src, without=dst)
    tree.messages[(src, dst)] = pot.marginalize(sep.members)
    tree.stats.messages_passed += 1


def collect(tree: JunctionTree, root: int | None = None) -> None:
    """Pass messages leaf-to-root in every component; one inward propagation."""
    for comp in tree.component_roots:
        r = _component_root(tree, comp, root)
        order, parent = _bfs(tree, r)
        for cid in reversed(order[1:]):
            p, s_idx = parent[cid]
            _send(tree, cid, p, s_idx)
    tree.stats.inward_propagations += 1


def distribute(tree: JunctionTree, root: int | None = None) -> None:
    """Pass messages root-to-leaves in every component; one outward propagation.

    Also the replay primitive: after changing what is attached at (or assigned
    to) a clique, distributing from that clique rebuilds every message directed
    away from it, because messages directed toward it never depended on it.
    """
    for comp in tree.component_roots:
        r = _component_root(tree, comp, root)
        order, parent = _bfs(tree, r)
        for cid in order[1:]:
            p, s_idx = parent[cid]
            _send(tree, p, cid, s_idx)
        tree.component_mass[comp] = tree.clique_potential(r).total()
    tree.stats.outward_propagations += 1
    tree.consistent = True


def propagate_full(tree: JunctionTree, evidence: Evidence | None = None,
                   root: int | None = None) -> float:
    """Reset, enter the evidence, collect and distribute; returns p(e).

    Raises ImpossibleEvidenceError when the evidence has probability zero.
    """
    tree.reset()
    if evidence is not None:
        for var, vec in evidence.items():
            enter_finding(tree, var, vec)
    collect(tree, root)
    distribute(tree, root)
    pe = evidence_probability(tree)
    if pe <= 0.0:
        raise ImpossibleEvidenceError("the entered evidence has probability zero")
    return pe


def evidence_probability(tree: JunctionTree) -> float:
    """p(e) as the product over components of their root-clique totals."""
    if not tree.component_mass:
        raise BnsenseError("tree has not been propagated")
    pe = 1.0
    for comp in tree.component_roots:
        pe *= tree.component_mass[comp]
    return pe


def marginal(tree: JunctionTree, var: int) -> np.ndarray:
    """p(var, e) read from the lowest-id clique containing the variable."""
    if not tree.consistent:
        raise BnsenseError("tree is not consistent; propagate first")
    cid = tree.var_clique[var]
    vec = tree.clique_potential(cid).marginalize((var,)).table
    scale = 1.0
    comp = tree.component_of[cid]
    for other, mass in tree.component_mass.items():
        if other != comp:
            scale *= mass
    return vec * scale


def retract_finding(tree: JunctionTree, var: int) -> None:
    """Drop one variable's finding and restore consistency with one outward pass.

    The messages directed toward the finding's attachment clique never carried
    it, so replaying the outward half from that clique is enough — no inward
    propagation over the tree.  Raises ImpossibleEvidenceError if the retained
    evidence has probability zero.
    """
    if var not in tree.findings:
        raise BnsenseError(f"variable {var} has no finding to retract")
    if not tree.consistent:
        raise BnsenseError("tree is not consistent; propagate before retracting")
    del tree.findings[var]
    home = tree.family_clique[var]
    distribute(tree, home)
    if evidence_probability(tree) <= 0.0:
        raise ImpossibleEvidenceError(
            "retained evidence has probability zero after retraction")
