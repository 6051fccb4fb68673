"""Discrete Bayesian network model: variables, CPTs, parameters, evidence.

A network is loaded from a JSON document of the form::

    {
      "variables": [{"name": "A", "states": ["yes", "no"]}, ...],
      "cpts": [
        {"variable": "A", "parents": [], "rows": [[0.2, 0.8]]},
        {"variable": "B", "parents": ["A"], "rows": [[0.9, 0.1], [0.3, 0.7]]}
      ]
    }

Each CPT row is the conditional distribution of the variable given one
configuration of its parents.  Rows are ordered with the *last listed parent
varying fastest* (C order over the listed parent axes); that ordering is part
of the parameter-reference contract, not an implementation detail.

Row sums may deviate from 1 by at most ROW_SUM_TOLERANCE and are renormalized;
anything worse is rejected with the offending variable and row index named.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateParameterError, ImpossibleEvidenceError, NetworkFormatError

ROW_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Variable:
    """A named discrete variable with an ordered tuple of state labels."""

    name: str
    states: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class ParameterRef:
    """One CPT entry p(variable = state | parents in parent_config).

    parent_config holds state indices of the variable's parents in their
    listed order.  initial_value is carried for convenience and excluded from
    equality: two refs naming the same entry compare equal across co-varied
    copies of a network.
    """

    variable: int
    state: int
    parent_config: tuple[int, ...]
    initial_value: float = field(compare=False)

    def __repr__(self) -> str:  # compact, index-based; use format_parameter for labels
        return (
            f"ParameterRef(var={self.variable}, state={self.state}, "
            f"config={self.parent_config}, value={self.initial_value!r})"
        )


class Network:
    """An immutable DAG of discrete variables with one CPT per variable."""

    def __init__(self, variables: list[Variable], parents: list[tuple[int, ...]],
                 cpts: list[np.ndarray]):
        self.variables: tuple[Variable, ...] = tuple(variables)
        self.parents: tuple[tuple[int, ...], ...] = tuple(tuple(p) for p in parents)
        tables = []
        for t in cpts:
            t = np.asarray(t, dtype=float).copy()
            t.setflags(write=False)
            tables.append(t)
        self.cpts: tuple[np.ndarray, ...] = tuple(tables)
        self._ids = {v.name: i for i, v in enumerate(self.variables)}
        self._order = _topological_order(len(self.variables), self.parents)

    # -- basic lookups ---------------------------------------------------

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def variable_id(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise NetworkFormatError(f"unknown variable {name!r}") from None

    def arity(self, var: int) -> int:
        return self.variables[var].arity

    def state_index(self, var: int, label: str) -> int:
        try:
            return self.variables[var].states.index(label)
        except ValueError:
            raise NetworkFormatError(
                f"variable {self.variables[var].name!r} has no state {label!r}"
            ) from None

    def family(self, var: int) -> tuple[int, ...]:
        """The variable together with its parents, sorted by id."""
        return tuple(sorted((var,) + self.parents[var]))

    def topological_order(self) -> tuple[int, ...]:
        return self._order

    def children(self, var: int) -> tuple[int, ...]:
        return tuple(v for v in range(self.n_variables) if var in self.parents[v])

    # -- CPT row addressing ----------------------------------------------

    def parent_arities(self, var: int) -> tuple[int, ...]:
        return tuple(self.arity(p) for p in self.parents[var])

    def n_rows(self, var: int) -> int:
        return int(np.prod(self.parent_arities(var), dtype=int)) if self.parents[var] else 1

    def row_index(self, var: int, parent_config: tuple[int, ...]) -> int:
        """Row number of a parent configuration (last listed parent fastest)."""
        pars = self.parents[var]
        if len(parent_config) != len(pars):
            raise NetworkFormatError(
                f"variable {self.variables[var].name!r}: parent config has "
                f"{len(parent_config)} entries, expected {len(pars)}")
        if not pars:
            return 0
        return int(np.ravel_multi_index(parent_config, self.parent_arities(var)))

    def parent_config_of_row(self, var: int, row: int) -> tuple[int, ...]:
        if not self.parents[var]:
            return ()
        return tuple(int(i) for i in np.unravel_index(row, self.parent_arities(var)))

    def row(self, var: int, parent_config: tuple[int, ...]) -> np.ndarray:
        return self.cpts[var][self.row_index(var, parent_config)]

    def parameter(self, var: int, state: int, parent_config: tuple[int, ...]) -> ParameterRef:
        value = float(self.row(var, parent_config)[state])
        return ParameterRef(var, state, tuple(parent_config), value)

    def parameter_value(self, ref: ParameterRef) -> float:
        return float(self.row(ref.variable, ref.parent_config)[ref.state])

    # -- derived quantities ------------------------------------------------

    def joint_state_bits(self) -> float:
        """log2 of the joint state-space size (enumeration guard)."""
        return float(sum(math.log2(v.arity) for v in self.variables))

    def with_cpt(self, var: int, table: np.ndarray) -> "Network":
        tables = list(self.cpts)
        tables[var] = np.asarray(table, dtype=float)
        return Network(list(self.variables), list(self.parents), tables)


def _topological_order(n: int, parents: tuple[tuple[int, ...], ...]) -> tuple[int, ...]:
    """Kahn's algorithm; raises on cycles naming the variables involved."""
    remaining_parents = {v: set(parents[v]) for v in range(n)}
    children: dict[int, list[int]] = {v: [] for v in range(n)}
    for v in range(n):
        for p in parents[v]:
            children[p].append(v)
    ready = sorted(v for v in range(n) if not remaining_parents[v])
    order: list[int] = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        freed = []
        for c in children[v]:
            remaining_parents[c].discard(v)
            if not remaining_parents[c]:
                freed.append(c)
        ready = sorted(ready + freed)
    if len(order) != n:
        stuck = sorted(set(range(n)) - set(order))
        raise NetworkFormatError(f"cycle detected among variable ids {stuck}")
    return tuple(order)


# ---------------------------------------------------------------------------
# loading / validation


def load_network(source) -> Network:
    """Build a validated Network from a path, a JSON string, or a dict."""
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        doc = json.loads(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    return network_from_dict(doc)


def network_from_dict(doc: dict) -> Network:
    if not isinstance(doc, dict):
        raise NetworkFormatError("network document must be a JSON object")
    for key in ("variables", "cpts"):
        if key not in doc or not isinstance(doc[key], list):
            raise NetworkFormatError(f"network document needs a {key!r} list")

    variables: list[Variable] = []
    seen_names: set[str] = set()
    for i, entry in enumerate(doc["variables"]):
        if not isinstance(entry, dict) or "name" not in entry or "states" not in entry:
            raise NetworkFormatError(f"variables[{i}]: expected an object with name and states")
        name = entry["name"]
        states = entry["states"]
        if not isinstance(name, str) or not name:
            raise NetworkFormatError(f"variables[{i}]: name must be a nonempty string")
        if name in seen_names:
            raise NetworkFormatError(f"duplicate variable name {name!r}")
        seen_names.add(name)
        if (not isinstance(states, list) or not states
                or any(not isinstance(s, str) for s in states)):
            raise NetworkFormatError(f"variable {name!r}: states must be a nonempty string list")
        if len(set(states)) != len(states):
            raise NetworkFormatError(f"variable {name!r}: duplicate state labels")
        variables.append(Variable(name, tuple(states)))

    ids = {v.name: i for i, v in enumerate(variables)}
    parents: list[tuple[int, ...] | None] = [None] * len(variables)
    tables: list[np.ndarray | None] = [None] * len(variables)

    for entry in doc["cpts"]:
        if not isinstance(entry, dict) or "variable" not in entry:
            raise NetworkFormatError("each cpt needs a variable name")
        name = entry["variable"]
        if name not in ids:
            raise NetworkFormatError(f"cpt references unknown variable {name!r}")
        var = ids[name]
        if tables[var] is not None:
            raise NetworkFormatError(f"variable {name!r} has more than one cpt")
        par_names = entry.get("parents", [])
        if not isinstance(par_names, list):
            raise NetworkFormatError(f"variable {name!r}: parents must be a list")
        par_ids = []
        for p in par_names:
            if p not in ids:
                raise NetworkFormatError(f"variable {name!r}: unknown parent {p!r}")
            if p == name:
                raise NetworkFormatError(f"variable {name!r} lists itself as a parent")
            par_ids.append(ids[p])
        if len(set(par_ids)) != len(par_ids):
            raise NetworkFormatError(f"variable {name!r}: duplicate parent")
        rows = entry.get("rows")
        arity = variables[var].arity
        expected_rows = 1
        for p in par_ids:
            expected_rows *= variables[p].arity
        if not isinstance(rows, list) or len(rows) != expected_rows:
            got = len(rows) if isinstance(rows, list) else "none"
            raise NetworkFormatError(
                f"variable {name!r}: expected {expected_rows} cpt rows, got {got}")
        table = np.empty((expected_rows, arity), dtype=float)
        for r, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != arity:
                raise NetworkFormatError(
                    f"variable {name!r}, row {r}: expected {arity} entries")
            vals = np.asarray(row, dtype=float)
            if np.any(vals < 0) or not np.all(np.isfinite(vals)):
                raise NetworkFormatError(
                    f"variable {name!r}, row {r}: entries must be finite and nonnegative")
            total = float(vals.sum())
            if abs(total - 1.0) > ROW_SUM_TOLERANCE:
                raise NetworkFormatError(
                    f"variable {name!r}, row {r}: sum {total!r} outside tolerance")
            table[r] = vals / total
        parents[var] = tuple(par_ids)
        tables[var] = table

    for var, t in enumerate(tables):
        if t is None:
            raise NetworkFormatError(f"variable {variables[var].name!r} has no cpt")

    return Network(variables, parents, tables)  # type: ignore[arg-type]


def network_to_dict(net: Network) -> dict:
    """Inverse of network_from_dict (rows as plain floats)."""
    return {
        "variables": [{"name": v.name, "states": list(v.states)} for v in net.variables],
        "cpts": [
            {
                "variable": net.variables[v].name,
                "parents": [net.variables[p].name for p in net.parents[v]],
                "rows": [[float(x) for x in row] for row in net.cpts[v]],
            }
            for v in range(net.n_variables)
        ],
    }


# ---------------------------------------------------------------------------
# parameters and proportional co-variation


def covary_row(row: np.ndarray, state: int, x: float) -> np.ndarray:
    """Set row[state] to x and scale the other entries to keep the sum at 1.

    The remaining entries keep their mutual proportions (each is multiplied by
    (1 - x) / (1 - row[state])).  A row with row[state] == 1 has no mass left
    to redistribute and is rejected as degenerate.
    """
    row = np.asarray(row, dtype=float)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"parameter value {x!r} outside [0, 1]")
    current = float(row[state])
    if current >= 1.0:
        raise DegenerateParameterError(
            f"row entry {state} already has value 1; co-variation undefined")
    out = row * ((1.0 - x) / (1.0 - current))
    out[state] = x
    return out


def apply_parameter(net: Network, ref: ParameterRef, x: float) -> Network:
    """Return a copy of the network with one CPT row co-varied to value x."""
    table = np.array(net.cpts[ref.variable], dtype=float)
    r = net.row_index(ref.variable, ref.parent_config)
    table[r] = covary_row(table[r], ref.state, x)
    return net.with_cpt(ref.variable, table)


def enumerate_parameters(net: Network) -> list[ParameterRef]:
    """Every CPT entry, ordered by variable id, then row, then state."""
    out: list[ParameterRef] = []
    for var in range(net.n_variables):
        for r in range(net.n_rows(var)):
            config = net.parent_config_of_row(var, r)
            for s in range(net.arity(var)):
                out.append(ParameterRef(var, s, config, float(net.cpts[var][r, s])))
    return out


def format_parameter(net: Network, ref: ParameterRef) -> str:
    """Stable text form: "B|A=yes;C=no:yes" (root variables: "A:yes")."""
    vname = net.variables[ref.variable].name
    state = net.variables[ref.variable].states[ref.state]
    if not ref.parent_config:
        return f"{vname}:{state}"
    pairs = ";".join(
        f"{net.variables[p].name}={net.variables[p].states[s]}"
        for p, s in zip(net.parents[ref.variable], ref.parent_config))
    return f"{vname}|{pairs}:{state}"


# ---------------------------------------------------------------------------
# evidence


class Evidence:
    """Per-variable likelihood vectors (findings).

    A hard finding is an indicator vector, a negative finding has a single
    zero at the excluded state, and a general likelihood vector may be any
    nonnegative vector with at least one positive entry.  Setting a finding
    for a variable that already has one replaces it.
    """

    def __init__(self, net: Network):
        self.net = net
        self._findings: dict[int, np.ndarray] = {}

    def copy(self) -> "Evidence":
        out = Evidence(self.net)
        out._findings = {v: vec.copy() for v, vec in self._findings.items()}
        return out

    def _resolve(self, var) -> int:
        return var if isinstance(var, int) else self.net.variable_id(var)

    def set_hard(self, var, state) -> "Evidence":
        v = self._resolve(var)
        s = state if isinstance(state, int) else self.net.state_index(v, state)
        vec = np.zeros(self.net.arity(v))
        vec[s] = 1.0
        return self.set_likelihood(v, vec)

    def set_negative(self, var, state) -> "Evidence":
        v = self._resolve(var)
        s = state if isinstance(state, int) else self.net.state_index(v, state)
        vec = np.ones(self.net.arity(v))
        vec[s] = 0.0
        return self.set_likelihood(v, vec)

    def set_likelihood(self, var, vector) -> "Evidence":
        v = self._resolve(var)
        vec = np.asarray(vector, dtype=float)
        if vec.shape != (self.net.arity(v),):
            raise NetworkFormatError(
                f"finding for {self.net.variables[v].name!r} has length {vec.size}, "
                f"expected {self.net.arity(v)}")
        if np.any(vec < 0) or not np.all(np.isfinite(vec)):
            raise NetworkFormatError(
                f"finding for {self.net.variables[v].name!r} must be finite and nonnegative")
        if not np.any(vec > 0):
            raise ImpossibleEvidenceError(
                f"finding for {self.net.variables[v].name!r} is all-zero")
        self._findings[v] = vec
        return self

    def remove(self, var) -> "Evidence":
        self._findings.pop(self._resolve(var), None)
        return self

    def variables(self) -> tuple[int, ...]:
        return tuple(sorted(self._findings))

    def items(self):
        return ((v, self._findings[v]) for v in sorted(self._findings))

    def vector(self, var) -> np.ndarray:
        return self._findings[self._resolve(var)]

    def __contains__(self, var) -> bool:
        return self._resolve(var) in self._findings

    def __len__(self) -> int:
        return len(self._findings)


@dataclass(frozen=True)
class QueryRef:
    """A posterior target p(variable = state | evidence)."""

    variable: int
    state: int


def all_assignments(net: Network, subset: tuple[int, ...] | None = None):
    """Iterate over joint state-index tuples of the given variables (all by default)."""
    order = subset if subset is not None else tuple(range(net.n_variables))
    return itertools.product(*(range(net.arity(v)) for v in order))
