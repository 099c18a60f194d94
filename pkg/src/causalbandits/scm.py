"""Discrete structural causal models: sampling, exact oracles and generators.

An :class:`Scm` couples a graph with conditional probability tables for the
observed nodes and marginal tables for one latent variable per bidirected
edge.  Values are immutable; sampling takes an explicit generator so
independent trials can run concurrently on disjoint streams.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

from .admg import Admg, graph_from_dict, graph_to_dict, load_graph
from .errors import (
    InvalidProbability,
    NonBinaryGraph,
    NonIntegerCosts,
    ParseError,
    StateSpaceTooLarge,
)

STATE_SPACE_CAP = 2 ** 24


# ---------------------------------------------------------------------------
# arms and costs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Arm:
    """Either the observational arm or an atomic intervention do(node=value).

    The observational arm is encoded with node=-1 so that sorting puts it
    first, followed by interventions ordered by (node, value).
    """

    node: int = -1
    value: int = 0

    @property
    def is_observe(self) -> bool:
        return self.node < 0

    @staticmethod
    def observe() -> "Arm":
        return Arm()

    @staticmethod
    def intervene(node: int, value: int) -> "Arm":
        if node < 0:
            raise ValueError("intervention node must be a node index")
        return Arm(node, value)

    def label(self, g: Admg) -> str:
        if self.is_observe:
            return "observe"
        return f"do({g.names[self.node]}={self.value})"


OBSERVE = Arm.observe()

_ARM_RE = re.compile(r"^do\((\w+)=(\d+)\)$")


def parse_arm_label(g: Admg, label: str) -> Arm:
    if label == "observe":
        return OBSERVE
    m = _ARM_RE.match(label)
    if not m:
        raise ValueError(f"bad arm label {label!r}")
    return Arm.intervene(g.index_of(m.group(1)), int(m.group(2)))


def arms_for(g: Admg) -> list[Arm]:
    """The action set: observe, then every (intervenable node, value) pair."""
    out = [OBSERVE]
    for i in g.intervenable:
        for x in range(g.domains[i]):
            out.append(Arm.intervene(i, x))
    return sorted(out)


@dataclass(frozen=True)
class CostSet:
    """Positive pull costs per arm; the observational arm always costs one."""

    costs: tuple[tuple[Arm, float], ...]

    def __post_init__(self):
        m = dict(self.costs)
        for arm, c in m.items():
            if not c > 0:
                raise ValueError(f"cost of {arm} must be positive")
        if m.get(OBSERVE, 1.0) != 1.0:
            raise ValueError("the observational arm's cost is fixed to one")

    @staticmethod
    def from_mapping(mapping: dict[Arm, float]) -> "CostSet":
        m = dict(mapping)
        m.setdefault(OBSERVE, 1.0)
        return CostSet(tuple(sorted(m.items())))

    @staticmethod
    def uniform(g: Admg, c: float) -> "CostSet":
        return CostSet.from_mapping(
            {a: (1.0 if a.is_observe else float(c)) for a in arms_for(g)}
        )

    def of(self, arm: Arm) -> float:
        return self.mapping[arm]

    @cached_property
    def mapping(self) -> dict[Arm, float]:
        return dict(self.costs)

    def array(self, arms: list[Arm]) -> np.ndarray:
        return np.array([self.of(a) for a in arms])

    def interventional_min(self) -> float:
        return min(c for a, c in self.costs if not a.is_observe)

    def interventional_total(self) -> float:
        return sum(c for a, c in self.costs if not a.is_observe)


# ---------------------------------------------------------------------------
# the model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Cpt:
    """Conditional table of one observed node.

    ``parents`` are combined-variable indices (observed node indices, then
    latent indices shifted by the observed count).  ``table`` has one row per
    mixed-radix parent assignment and one column per own-domain value.
    """

    parents: tuple[int, ...]
    table: np.ndarray


@dataclass(frozen=True, eq=False)
class Scm:
    graph: Admg
    cpts: tuple[Cpt, ...]
    latent_tables: tuple[np.ndarray, ...]  # aligned with sorted(graph.bidirected)
    seed: int = 0

    def __post_init__(self):
        g = self.graph
        if len(self.cpts) != g.n_nodes:
            raise ValueError("one CPT per observed node required")
        if len(self.latent_tables) != len(g.bidirected):
            raise ValueError("one latent table per bidirected edge required")
        doms = self.combined_domains
        for v, cpt in enumerate(self.cpts):
            allowed = set(g.parents[v]) | {
                g.n_nodes + k for k, e in enumerate(self.latent_edges) if v in e
            }
            if not set(cpt.parents) <= allowed:
                raise ValueError(
                    f"CPT of {g.names[v]} conditions on variables that are not "
                    "graph parents or incident latents"
                )
            rows = int(np.prod([doms[p] for p in cpt.parents])) if cpt.parents else 1
            if cpt.table.shape != (rows, g.domains[v]):
                raise ValueError(f"CPT of {g.names[v]} has shape {cpt.table.shape}, expected {(rows, g.domains[v])}")
            if np.abs(cpt.table.sum(axis=1) - 1.0).max() > 1e-12:
                raise InvalidProbability(f"CPT rows of {g.names[v]} do not sum to one")
            if (cpt.table < 0).any():
                raise InvalidProbability(f"CPT of {g.names[v]} has negative entries")
        for k, tab in enumerate(self.latent_tables):
            if abs(tab.sum() - 1.0) > 1e-12 or (tab < 0).any():
                raise InvalidProbability(f"latent table {k} is not a distribution")

    @cached_property
    def latent_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.graph.bidirected))

    @cached_property
    def combined_domains(self) -> tuple[int, ...]:
        return self.graph.domains + tuple(len(t) for t in self.latent_tables)

    @cached_property
    def n_combined(self) -> int:
        return self.graph.n_nodes + len(self.latent_tables)

    @cached_property
    def _plan(self):
        """Sampling order (latents first, then observed topologically) with
        per-node parent strides and cumulative tables."""
        g = self.graph
        doms = self.combined_domains
        order = list(range(g.n_nodes, self.n_combined)) + list(g.topological_order)
        steps = []
        for v in order:
            if v >= g.n_nodes:
                pars: tuple[int, ...] = ()
                table = self.latent_tables[v - g.n_nodes][None, :]
            else:
                pars = self.cpts[v].parents
                table = self.cpts[v].table
            strides = np.zeros(len(pars), dtype=np.int64)
            acc = 1
            for k in range(len(pars) - 1, -1, -1):
                strides[k] = acc
                acc *= doms[pars[k]]
            cum = np.cumsum(table, axis=1)
            steps.append((v, np.array(pars, dtype=np.int64), strides, table[:, 1] if doms[v] == 2 else None, cum))
        return steps

    def dependency_parents(self, v: int) -> tuple[int, ...]:
        """Combined-variable parents of v as read by its mechanism."""
        if v >= self.graph.n_nodes:
            return ()
        return self.cpts[v].parents


def sample_many(scm: Scm, arm: Arm, size: int, rng: np.random.Generator):
    """Draw ``size`` records under ``arm``; returns (observed values, rewards).

    Ancestral sampling in topological order; an intervened node is clamped and
    its table never read.  One uniform per (record, variable) is consumed in a
    fixed layout so streams do not depend on the arm or the tables.
    """
    g = scm.graph
    n = g.n_nodes
    vals = np.zeros((size, scm.n_combined), dtype=np.int64)
    steps = scm._plan
    u = rng.random((size, len(steps)))
    for pos, (v, pars, strides, p_one, cum) in enumerate(steps):
        if not arm.is_observe and v == arm.node:
            vals[:, v] = arm.value
            continue
        rows = vals[:, pars] @ strides if len(pars) else np.zeros(size, dtype=np.int64)
        if p_one is not None:
            vals[:, v] = u[:, pos] < p_one[rows]
        else:
            vals[:, v] = (u[:, pos, None] >= cum[rows]).sum(axis=1)
    observed = vals[:, :n]
    return observed, observed[:, g.reward].copy()


def sample(scm: Scm, arm: Arm, rng: np.random.Generator):
    """Single draw; returns (assignment over observed nodes, reward value)."""
    obs, rew = sample_many(scm, arm, 1, rng)
    return obs[0], int(rew[0])


# ---------------------------------------------------------------------------
# exact oracles
# ---------------------------------------------------------------------------


def _requirement_set(scm: Scm, clamped: int | None) -> list[int]:
    """Combined variables the reward's mechanism transitively depends on,
    not expanding the clamped node."""
    y = scm.graph.reward
    seen: set[int] = set()
    stack = list(scm.dependency_parents(y))
    while stack:
        v = stack.pop()
        if v in seen or v == clamped:
            if v == clamped:
                seen.add(v)
            continue
        seen.add(v)
        stack.extend(scm.dependency_parents(v))
    return sorted(seen)


def _mean_reward(scm: Scm, arm: Arm) -> float:
    g = scm.graph
    doms = scm.combined_domains
    clamped = None if arm.is_observe else arm.node
    req = _requirement_set(scm, clamped)
    free = [v for v in req if v != clamped]
    n_states = 1
    for v in free:
        n_states *= doms[v]
        if n_states > STATE_SPACE_CAP:
            raise StateSpaceTooLarge(
                f"exact oracle needs {n_states}+ joint states (cap {STATE_SPACE_CAP})"
            )
    total = 0.0
    y = g.reward
    for assign in itertools.product(*(range(doms[v]) for v in free)):
        env = dict(zip(free, assign))
        if clamped is not None:
            env[clamped] = arm.value
        w = 1.0
        for v in free:
            if v >= g.n_nodes:
                w *= scm.latent_tables[v - g.n_nodes][env[v]]
            else:
                cpt = scm.cpts[v]
                row = 0
                for p in cpt.parents:
                    row = row * doms[p] + env[p]
                w *= cpt.table[row, env[v]]
            if w == 0.0:
                break
        if w == 0.0:
            continue
        ycpt = scm.cpts[y]
        row = 0
        for p in ycpt.parents:
            row = row * doms[p] + env[p]
        # expected reward = P(Y=1) for binary; general domains use the value
        if g.domains[y] == 2:
            total += w * float(ycpt.table[row, 1])
        else:
            total += w * float(
                np.dot(ycpt.table[row], np.arange(g.domains[y]))
            )
    return float(total)


def oracle_means(scm: Scm) -> dict[Arm, float]:
    """Exact expected reward per arm by summing the truncated-factorization
    joint over every configuration the reward depends on."""
    return {arm: _mean_reward(scm, arm) for arm in arms_for(scm.graph)}


def optimal_value(means: dict[Arm, float], costs: CostSet, budget: float) -> float:
    """Best achievable total expected reward within the budget.

    Unbounded-knapsack dynamic program over integer costs; raises
    ``NonIntegerCosts`` otherwise.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    arm_list = sorted(means)
    c = []
    for a in arm_list:
        ca = costs.of(a)
        if abs(ca - round(ca)) > 1e-9:
            raise NonIntegerCosts(f"cost {ca} of {a} is not an integer")
        c.append(int(round(ca)))
    b_max = int(budget)
    dp = np.zeros(b_max + 1)
    mu = [means[a] for a in arm_list]
    for b in range(1, b_max + 1):
        best = dp[b - 1]
        for ca, m in zip(c, mu):
            if ca <= b:
                cand = dp[b - ca] + m
                if cand > best:
                    best = cand
        dp[b] = best
    return float(dp[b_max])


def ratio_best_arm(means: dict[Arm, float], costs: CostSet) -> Arm:
    """The arm maximizing expected reward per unit cost (ties: arm order)."""
    return max(sorted(means), key=lambda a: (means[a] / costs.of(a), ))


def reward_best_arm(means: dict[Arm, float]) -> Arm:
    """The arm maximizing expected reward (ties: arm order)."""
    best = None
    best_mu = -np.inf
    for a in sorted(means):
        if means[a] > best_mu:
            best, best_mu = a, means[a]
    return best


# ---------------------------------------------------------------------------
# model generators
# ---------------------------------------------------------------------------


def make_xor_model(g: Admg, rng: np.random.Generator) -> Scm:
    """Parity mechanisms on a binary graph.

    A node with at least one parent (hidden confounders included) equals the
    parity of its parents with probability 0.8 and the complement otherwise.
    A parentless node is Bernoulli(0.5 + 0.5*eps) with eps drawn uniformly
    once per node at construction.  Latents are fair coins.
    """
    if any(d != 2 for d in g.domains):
        raise NonBinaryGraph("parity mechanisms require binary nodes")
    latent_edges = tuple(sorted(g.bidirected))
    n = g.n_nodes
    cpts: list[Cpt] = []
    for v in range(n):
        pars = tuple(g.parents[v]) + tuple(
            n + k for k, e in enumerate(latent_edges) if v in e
        )
        if not pars:
            p1 = 0.5 + 0.5 * rng.uniform(0.0, 1.0)
            table = np.array([[1.0 - p1, p1]])
        else:
            rows = []
            for assign in itertools.product((0, 1), repeat=len(pars)):
                p1 = 0.8 if sum(assign) % 2 == 1 else 0.2
                rows.append([1.0 - p1, p1])
            table = np.array(rows)
        cpts.append(Cpt(pars, table))
    latents = tuple(np.array([0.5, 0.5]) for _ in latent_edges)
    return Scm(g, tuple(cpts), latents)


def parallel_graph(n: int) -> Admg:
    """n intervenable nodes, each a parent of the reward, no confounding."""
    names = [f"X{i + 1}" for i in range(n)] + ["Y"]
    return Admg.create(names, directed=[(f"X{i + 1}", "Y") for i in range(n)], reward="Y")


def make_parallel_model(
    n: int, p: list[float] | None = None, eps: float = 0.3
) -> Scm:
    """The benchmark parallel model.

    X_i ~ Bernoulli(p_i); the reward is Bernoulli(0.5 + eps) when X_1 = 1 and
    Bernoulli(0.5 - eps') otherwise, with eps' = p_1 * eps / (1 - p_1) so the
    observational mean is exactly one half.  Default marginals: 0.02 for the
    first two nodes, 0.5 for the rest.
    """
    if n < 1:
        raise ValueError("need at least one intervenable node")
    if p is None:
        p = [0.02 if i < 2 else 0.5 for i in range(n)]
    if len(p) != n:
        raise InvalidProbability(f"expected {n} marginals, got {len(p)}")
    if any(not 0.0 <= pi <= 1.0 for pi in p):
        raise InvalidProbability("node marginals must lie in [0, 1]")
    # the penalized branch is unreachable when the first node is always one
    eps_lo = p[0] * eps / (1.0 - p[0]) if p[0] < 1.0 else 0.0
    if not (0.0 <= 0.5 + eps <= 1.0 and 0.0 <= 0.5 - eps_lo <= 1.0):
        raise InvalidProbability(f"eps={eps} leaves a reward rate outside [0, 1]")
    g = parallel_graph(n)
    cpts = [Cpt((), np.array([[1.0 - pi, pi]])) for pi in p]
    y_table = np.array(
        [[0.5 + eps_lo, 0.5 - eps_lo], [0.5 - eps, 0.5 + eps]]
    )
    cpts.append(Cpt((0,), y_table))
    return Scm(g, tuple(cpts), ())


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------


def model_to_dict(scm: Scm) -> dict:
    g = scm.graph
    n = g.n_nodes

    def var_name(v: int) -> str:
        if v < n:
            return g.names[v]
        a, b = scm.latent_edges[v - n]
        return f"{g.names[a]}<->{g.names[b]}"

    cpts = {}
    for v, cpt in enumerate(scm.cpts):
        doms = [scm.combined_domains[p] for p in cpt.parents]
        rows = {}
        for r, assign in enumerate(itertools.product(*(range(d) for d in doms))):
            key = ",".join(str(x) for x in assign)
            rows[key] = [float(x) for x in cpt.table[r]]
        cpts[g.names[v]] = {
            "parents": [var_name(p) for p in cpt.parents],
            "rows": rows,
        }
    latents = [
        {"edge": f"{g.names[a]}<->{g.names[b]}", "p": [float(x) for x in tab]}
        for (a, b), tab in zip(scm.latent_edges, scm.latent_tables)
    ]
    return {"graph": graph_to_dict(g), "cpts": cpts, "latents": latents}


def model_from_dict(data: dict, base_dir: Path | None = None) -> Scm:
    if not isinstance(data, dict) or "graph" not in data or "cpts" not in data:
        raise ParseError("model file needs 'graph' and 'cpts' entries")
    graph_spec = data["graph"]
    if isinstance(graph_spec, str):
        path = Path(graph_spec)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        g = load_graph(path)
    else:
        g = graph_from_dict(graph_spec)
    n = g.n_nodes
    latent_edges = tuple(sorted(g.bidirected))
    latent_by_label = {
        f"{g.names[a]}<->{g.names[b]}": n + k for k, (a, b) in enumerate(latent_edges)
    }

    def var_index(name: str) -> int:
        if name in latent_by_label:
            return latent_by_label[name]
        return g.index_of(name)

    latent_tables = [np.array([0.5, 0.5])] * len(latent_edges)
    for entry in data.get("latents", []) or []:
        label = entry["edge"].replace(" ", "")
        if label not in latent_by_label:
            raise ParseError(f"latent entry for unknown bidirected edge {label!r}")
        latent_tables[latent_by_label[label] - n] = np.array(entry["p"], dtype=float)

    doms_all = tuple(g.domains) + tuple(len(t) for t in latent_tables)
    cpts: list[Cpt] = []
    for v in range(n):
        name = g.names[v]
        if name not in data["cpts"]:
            raise ParseError(f"missing CPT for node {name!r}")
        spec = data["cpts"][name]
        pars = tuple(var_index(str(x)) for x in spec.get("parents", []))
        doms = [doms_all[p] for p in pars]
        n_rows = int(np.prod(doms)) if pars else 1
        table = np.zeros((n_rows, g.domains[v]))
        seen_rows = set()
        for key, dist in spec["rows"].items():
            parts = [s for s in str(key).split(",") if s != ""]
            if len(parts) != len(pars):
                raise ParseError(f"CPT row key {key!r} of {name!r} has wrong arity")
            row = 0
            for part, d in zip(parts, doms):
                row = row * d + int(part)
            table[row] = np.array(dist, dtype=float)
            seen_rows.add(row)
        if len(seen_rows) != n_rows:
            raise ParseError(f"CPT of {name!r} is missing rows")
        cpts.append(Cpt(pars, table))
    return Scm(g, tuple(cpts), tuple(latent_tables))


def load_model(path) -> Scm:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ParseError(
            str(exc.problem or exc),
            line=None if mark is None else mark.line + 1,
            column=None if mark is None else mark.column + 1,
        ) from exc
    return model_from_dict(data, base_dir=path.parent)


def save_model(scm: Scm, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(model_to_dict(scm), fh, sort_keys=False)
