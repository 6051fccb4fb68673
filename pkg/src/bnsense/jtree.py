"""Junction tree construction: moralization, triangulation, cliques, sepsets.

The pipeline is the classical one — moralize the DAG, triangulate greedily by
minimum fill (lowest variable id on ties), read the maximal cliques off the
elimination, and connect them by a maximum-weight spanning tree over candidate
sepsets.  Every tie-break is fixed so that identical networks always produce
identical trees.

The tree also owns the mutable propagation state: per-clique charges (products
of assigned CPTs), a registry of per-variable finding vectors, and the two
directed messages per sepset.  Finding vectors are *not* folded into the
charges; they are multiplied in lazily when messages and clique potentials are
computed, which is what makes retracting a single finding cheap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BnsenseError, NetworkFormatError
from .network import Evidence, Network, ParameterRef, apply_parameter
from .potentials import Potential


@dataclass(frozen=True)
class Clique:
    id: int
    members: tuple[int, ...]             # sorted variable ids
    families: tuple[int, ...]            # variables whose CPT is assigned here


@dataclass(frozen=True)
class Sepset:
    cliques: tuple[int, int]             # (lower clique id, higher clique id)
    members: tuple[int, ...]             # sorted variable ids


@dataclass
class PropagationStats:
    """Counters for the work a tree has done (monotone within an analysis)."""

    inward_propagations: int = 0
    outward_propagations: int = 0
    messages_passed: int = 0

    def snapshot(self) -> tuple[int, int, int]:
        return (self.inward_propagations, self.outward_propagations, self.messages_passed)


# ---------------------------------------------------------------------------
# graph steps


def moralize(net: Network) -> dict[int, set[int]]:
    """Undirected adjacency: each family becomes a complete subgraph."""
    adj: dict[int, set[int]] = {v: set() for v in range(net.n_variables)}
    for v in range(net.n_variables):
        fam = (v,) + net.parents[v]
        for a in fam:
            for b in fam:
                if a != b:
                    adj[a].add(b)
    return adj


def triangulate(adj: dict[int, set[int]]) -> tuple[tuple[int, ...], set[frozenset[int]]]:
    """Greedy min-fill elimination; returns (order, fill edges added).

    Ties on fill count go to the lowest variable id, making the order (and
    everything downstream) deterministic.
    """
    work = {v: set(ns) for v, ns in adj.items()}
    order: list[int] = []
    fills: set[frozenset[int]] = set()
    remaining = sorted(work)
    while remaining:
        best, best_fill = None, None
        for v in remaining:
            ns = sorted(work[v])
            count = sum(1 for i, a in enumerate(ns) for b in ns[i + 1:]
                        if b not in work[a])
            if best_fill is None or count < best_fill:
                best, best_fill = v, count
        v = best
        ns = sorted(work[v])
        for i, a in enumerate(ns):
            for b in ns[i + 1:]:
                if b not in work[a]:
                    work[a].add(b)
                    work[b].add(a)
                    fills.add(frozenset((a, b)))
        for a in ns:
            work[a].discard(v)
        del work[v]
        remaining.remove(v)
        order.append(v)
    return tuple(order), fills


def _elimination_cliques(adj: dict[int, set[int]], order: tuple[int, ...],
                         fills: set[frozenset[int]]) -> list[tuple[int, ...]]:
    """Maximal cliques of the triangulated graph, sorted lexicographically."""
    work: dict[int, set[int]] = {v: set(ns) for v, ns in adj.items()}
    for edge in fills:
        a, b = tuple(edge)
        work[a].add(b)
        work[b].add(a)
    candidates: list[frozenset[int]] = []
    for v in order:
        candidates.append(frozenset({v} | work[v]))
        for a in work[v]:
            work[a].discard(v)
        del work[v]
    maximal: list[frozenset[int]] = []
    for c in sorted(set(candidates), key=len, reverse=True):
        if not any(c < kept for kept in maximal):
            maximal.append(c)
    return sorted(tuple(sorted(c)) for c in maximal)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def _spanning_sepsets(net: Network, members: list[tuple[int, ...]]) -> list[Sepset]:
    """Maximum-weight spanning forest over candidate sepsets.

    Weight is the number of shared variables; ties prefer the larger joint
    state space (mass), then the lexicographically smaller clique-id pair.
    """
    candidates = []
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            shared = tuple(sorted(set(members[i]) & set(members[j])))
            if not shared:
                continue
            mass = 1
            for v in shared:
                mass *= net.arity(v)
            candidates.append((-len(shared), -mass, i, j, shared))
    candidates.sort()
    uf = _UnionFind(len(members))
    sepsets = []
    for _, _, i, j, shared in candidates:
        if uf.union(i, j):
            sepsets.append(Sepset((i, j), shared))
    return sepsets


# ---------------------------------------------------------------------------
# the tree


class JunctionTree:
    def __init__(self, net: Network, cliques: list[Clique], sepsets: list[Sepset]):
        self.net = net
        self.cliques = cliques
        self.sepsets = sepsets
        self.neighbors: dict[int, list[tuple[int, int]]] = {c.id: [] for c in cliques}
        for s_idx, sep in enumerate(sepsets):
            a, b = sep.cliques
            self.neighbors[a].append((b, s_idx))
            self.neighbors[b].append((a, s_idx))
        for lst in self.neighbors.values():
            lst.sort()

        self.family_clique: dict[int, int] = {}
        for c in cliques:
            for v in c.families:
                self.family_clique[v] = c.id
        self.var_clique: dict[int, int] = {}
        for c in cliques:
            for v in c.members:
                self.var_clique.setdefault(v, c.id)

        # connected components of the clique forest, keyed by their lowest clique id
        uf = _UnionFind(len(cliques))
        for sep in sepsets:
            uf.union(*sep.cliques)
        self.component_of: dict[int, int] = {c.id: uf.find(c.id) for c in cliques}
        self.component_roots: tuple[int, ...] = tuple(sorted(set(self.component_of.values())))

        self._charges: list[Potential | None] = [None] * len(cliques)
        self.findings: dict[int, np.ndarray] = {}
        self.injected: dict[int, dict[int, np.ndarray]] = {}
        self.messages: dict[tuple[int, int], Potential] = {}
        self.component_mass: dict[int, float] = {}
        self.consistent = False
        self.stats = PropagationStats()

    # -- structure ---------------------------------------------------------

    def clique_containing(self, vars: tuple[int, ...]) -> int | None:
        """Lowest-id clique containing all the given variables, if any."""
        target = set(vars)
        for c in self.cliques:
            if target <= set(c.members):
                return c.id
        return None

    def charge(self, cid: int) -> Potential:
        """Evidence-free product of the CPTs assigned to the clique."""
        cached = self._charges[cid]
        if cached is None:
            pot = Potential.ones(self.net, self.cliques[cid].members)
            for v in self.cliques[cid].families:
                pot = pot.multiply(Potential.from_cpt(self.net, v))
            self._charges[cid] = cached = pot
        return cached

    def set_parameter(self, ref: ParameterRef, x: float) -> None:
        """Co-vary one CPT row in place; invalidates the family clique's charge."""
        self.net = apply_parameter(self.net, ref, x)
        self._charges[self.family_clique[ref.variable]] = None
        self.consistent = False

    # -- finding registry ----------------------------------------------------

    def attached_findings(self, cid: int):
        """(var, vector) pairs whose finding is multiplied in at this clique."""
        out = [(v, vec) for v, vec in sorted(self.findings.items())
               if self.family_clique[v] == cid]
        out.extend(sorted(self.injected.get(cid, {}).items()))
        return out

    def inject_finding(self, cid: int, var: int, vec: np.ndarray) -> None:
        """Attach an analysis-internal finding at a chosen clique (not the family one)."""
        if var not in self.cliques[cid].members:
            raise BnsenseError(f"variable {var} not in clique {cid}")
        self.injected.setdefault(cid, {})[var] = np.asarray(vec, dtype=float)
        self.consistent = False

    def clear_injected(self, cid: int, var: int) -> None:
        self.injected.get(cid, {}).pop(var, None)
        self.consistent = False

    # -- potential views -----------------------------------------------------

    def local_product(self, cid: int, *, without: int | None = None) -> Potential:
        """charge x attached findings x incoming messages (skip one neighbor)."""
        pot = self.charge(cid)
        for var, vec in self.attached_findings(cid):
            pot = pot.multiply_vector(var, vec)
        for nb, _ in self.neighbors[cid]:
            if nb == without:
                continue
            msg = self.messages.get((nb, cid))
            if msg is not None:
                pot = pot.multiply(msg)
        return pot

    def clique_potential(self, cid: int) -> Potential:
        """The clique's current table; equals p(members, e) after a full propagation."""
        return self.local_product(cid)

    def sepset_potential(self, s_idx: int) -> Potential:
        """Product of the two directed messages; equals p(members, e) when consistent."""
        sep = self.sepsets[s_idx]
        a, b = sep.cliques
        fwd = self.messages.get((a, b))
        bwd = self.messages.get((b, a))
        if fwd is None and bwd is None:
            return Potential.ones(self.net, sep.members)
        if fwd is None:
            return bwd.copy()
        if bwd is None:
            return fwd.copy()
        return fwd.multiply(bwd)

    # -- maintenance -----------------------------------------------------------

    def reset(self) -> None:
        """Back to the freshly built state (charges kept, counters kept)."""
        self.findings.clear()
        self.injected.clear()
        self.messages.clear()
        self.component_mass.clear()
        self.consistent = False

    def to_dict(self) -> dict:
        names = [v.name for v in self.net.variables]
        return {
            "cliques": [
                {"id": c.id,
                 "members": [names[v] for v in c.members],
                 "families": [names[v] for v in c.families]}
                for c in self.cliques
            ],
            "sepsets": [
                {"cliques": list(s.cliques), "members": [names[v] for v in s.members]}
                for s in self.sepsets
            ],
            "edges": [list(s.cliques) for s in self.sepsets],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def build_junction_tree(net: Network) -> JunctionTree:
    """Moralize, triangulate, extract cliques, connect, and assign families."""
    if net.n_variables == 0:
        raise NetworkFormatError("cannot build a junction tree for an empty network")
    adj = moralize(net)
    order, fills = triangulate(adj)
    members = _elimination_cliques(adj, order, fills)
    sepsets = _spanning_sepsets(net, members)

    families: list[list[int]] = [[] for _ in members]
    for v in range(net.n_variables):
        fam = set(net.family(v))
        for cid, mem in enumerate(members):
            if fam <= set(mem):
                families[cid].append(v)
                break
        else:  # unreachable: every family is completed by moralization
            raise BnsenseError(f"no clique contains the family of variable {v}")

    cliques = [Clique(cid, mem, tuple(fams)) for cid, (mem, fams) in
               enumerate(zip(members, families))]
    return JunctionTree(net, cliques, sepsets)
