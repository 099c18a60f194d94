"""Acyclic directed mixed graphs and the structural algorithms built on them.

An :class:`Admg` stores observed nodes, directed edges and bidirected edges
(the latter standing for hidden common causes).  Everything downstream —
c-components, effective parents, backdoor checks, the identifiability test
and the latent projection — operates on immutable graph values, so all
functions here are pure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import yaml

from .errors import KeepSetInvalid, ParseError

NodeId = int


@dataclass(frozen=True)
class Admg:
    """Acyclic directed mixed graph over named, finite-domain nodes.

    Nodes are identified by their index into ``names``.  ``directed`` holds
    (parent, child) pairs, ``bidirected`` unordered pairs stored as
    (min, max).  ``reward`` is the index of the reward node Y and
    ``intervenable`` lists the nodes the learner may set.
    """

    names: tuple[str, ...]
    directed: frozenset[tuple[int, int]]
    bidirected: frozenset[tuple[int, int]]
    reward: int
    intervenable: tuple[int, ...]
    domains: tuple[int, ...]

    def __post_init__(self):
        n = len(self.names)
        if len(set(self.names)) != n:
            raise ValueError("node names must be unique")
        if len(self.domains) != n:
            raise ValueError("one domain size per node required")
        if any(d < 2 for d in self.domains):
            raise ValueError("domain sizes must be >= 2")
        if not 0 <= self.reward < n:
            raise ValueError("reward node out of range")
        for a, b in self.directed:
            if a == b:
                raise ValueError(f"self-loop on {self.names[a]}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError("directed edge out of range")
        for a, b in self.bidirected:
            if a == b:
                raise ValueError(f"bidirected self-loop on {self.names[a]}")
            if a > b:
                raise ValueError("bidirected pairs must be stored (min, max)")
            if not (0 <= a and b < n):
                raise ValueError("bidirected edge out of range")
        if self.reward in self.intervenable:
            raise ValueError("the reward node cannot be intervenable")
        if len(set(self.intervenable)) != len(self.intervenable):
            raise ValueError("duplicate intervenable nodes")
        self.topological_order  # acyclicity check

    @staticmethod
    def create(
        names: Sequence[str],
        directed: Iterable[tuple[str, str]] = (),
        bidirected: Iterable[tuple[str, str]] = (),
        reward: str | None = None,
        intervenable: Sequence[str] | None = None,
        domains: Sequence[int] | None = None,
    ) -> "Admg":
        """Build a graph from node names and name-pair edges.

        ``reward`` defaults to the last node; ``intervenable`` to every
        non-reward node; ``domains`` to binary.
        """
        names = tuple(names)
        idx = {name: i for i, name in enumerate(names)}

        def look(name: str) -> int:
            if name not in idx:
                raise ValueError(f"unknown node {name!r}")
            return idx[name]

        reward_i = idx[reward] if reward is not None else len(names) - 1
        if intervenable is None:
            interv = tuple(i for i in range(len(names)) if i != reward_i)
        else:
            interv = tuple(look(v) for v in intervenable)
        doms = tuple(domains) if domains is not None else (2,) * len(names)
        dir_edges = frozenset((look(a), look(b)) for a, b in directed)
        bi_edges = frozenset(
            (min(look(a), look(b)), max(look(a), look(b))) for a, b in bidirected
        )
        return Admg(names, dir_edges, bi_edges, reward_i, interv, doms)

    @property
    def n_nodes(self) -> int:
        return len(self.names)

    @cached_property
    def parents(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.names]
        for a, b in self.directed:
            out[b].append(a)
        return tuple(tuple(sorted(p)) for p in out)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.names]
        for a, b in self.directed:
            out[a].append(b)
        return tuple(tuple(sorted(c)) for c in out)

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        """Deterministic topological order (lowest index first among ready nodes)."""
        indeg = [0] * self.n_nodes
        for _, b in self.directed:
            indeg[b] += 1
        ready = sorted(v for v in range(self.n_nodes) if indeg[v] == 0)
        order: list[int] = []
        import heapq

        heap = list(ready)
        heapq.heapify(heap)
        while heap:
            v = heapq.heappop(heap)
            order.append(v)
            for c in self.children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(heap, c)
        if len(order) != self.n_nodes:
            raise ValueError("directed part of the graph has a cycle")
        return tuple(order)

    @cached_property
    def topo_rank(self) -> tuple[int, ...]:
        rank = [0] * self.n_nodes
        for r, v in enumerate(self.topological_order):
            rank[v] = r
        return tuple(rank)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValueError(f"unknown node {name!r}") from None


# ---------------------------------------------------------------------------
# c-components and parent sets
# ---------------------------------------------------------------------------


def c_components(g: Admg) -> list[frozenset[int]]:
    """Partition the nodes into maximal bidirected-connected components."""
    parent = list(range(g.n_nodes))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in g.bidirected:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict[int, set[int]] = {}
    for v in range(g.n_nodes):
        groups.setdefault(find(v), set()).add(v)
    return sorted((frozenset(s) for s in groups.values()), key=min)


def c_component_of(g: Admg, v: int) -> frozenset[int]:
    for comp in c_components(g):
        if v in comp:
            return comp
    raise ValueError(f"node {v} not in graph")


def effective_parents(g: Admg, j: int) -> frozenset[int]:
    """Union of the directed parents over j's c-component, plus the component, minus j."""
    comp = c_component_of(g, j)
    out: set[int] = set(comp)
    for k in comp:
        out.update(g.parents[k])
    out.discard(j)
    return frozenset(out)


def extended_parents(g: Admg, i: int) -> tuple[frozenset[int], int]:
    """Effective parents of an intervenable node plus its c-component size.

    The returned set drives the frequency stratification of the simple-regret
    policy; the component size is the exponent applied to the frequency
    estimate there.
    """
    if i not in g.intervenable:
        raise ValueError(f"{g.names[i]} is not intervenable")
    comp = c_component_of(g, i)
    return effective_parents(g, i), len(comp)


def factorization_parents(g: Admg, j: int) -> frozenset[int]:
    """Conditioning set of node j's factor in the c-component factorization.

    Same construction as :func:`effective_parents` but with the c-component
    taken in the subgraph induced on j and its topological predecessors.
    The full-component variant is not a valid conditioning set for the
    interventional factorization (it conditions on descendants), so every
    estimator in this package uses this restricted set.
    """
    rank = g.topo_rank
    allowed = {v for v in range(g.n_nodes) if rank[v] <= rank[j]}
    parent = {v: v for v in allowed}

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in g.bidirected:
        if a in allowed and b in allowed:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    comp = {v for v in allowed if find(v) == find(j)}
    out: set[int] = set(comp)
    for k in comp:
        out.update(g.parents[k])
    out.discard(j)
    return frozenset(out)


def descendants(g: Admg, v: int) -> frozenset[int]:
    """Nodes reachable from v along directed edges, excluding v."""
    seen: set[int] = set()
    stack = list(g.children[v])
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        stack.extend(g.children[u])
    seen.discard(v)
    return frozenset(seen)


def ancestors(g: Admg, v: int) -> frozenset[int]:
    """Nodes with a directed path to v, excluding v."""
    seen: set[int] = set()
    stack = list(g.parents[v])
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        stack.extend(g.parents[u])
    seen.discard(v)
    return frozenset(seen)


def identifiable_sufficient(g: Admg, i: int) -> bool:
    """True iff no child of X_i shares X_i's c-component.

    Sufficient condition for the interventional distribution of the reward
    under do(X_i) to be computable from observational data.
    """
    if i not in g.intervenable:
        raise ValueError(f"{g.names[i]} is not intervenable")
    comp = c_component_of(g, i)
    return not (set(g.children[i]) & comp)


# ---------------------------------------------------------------------------
# d-connection / backdoor
# ---------------------------------------------------------------------------


def _expanded_edges(g: Admg) -> tuple[int, list[tuple[int, int]]]:
    """Directed edges of the graph with each bidirected pair replaced by a
    fresh latent common cause.  Returns (total node count, edge list);
    latents get indices n_nodes..n_nodes+m-1."""
    edges = list(g.directed)
    nxt = g.n_nodes
    for a, b in sorted(g.bidirected):
        edges.append((nxt, a))
        edges.append((nxt, b))
        nxt += 1
    return nxt, edges


def has_unblocked_backdoor(
    g: Admg, i: int, conditioning: frozenset[int] = frozenset()
) -> bool:
    """True iff some path from X_i to the reward that starts with an edge
    into X_i is d-connecting given ``conditioning`` (default: the empty set).

    Bidirected edges are expanded into latent common causes before the path
    search, so a bidirected edge at X_i counts as an edge into X_i.
    """
    if i not in g.intervenable:
        raise ValueError(f"{g.names[i]} is not intervenable")
    y = g.reward
    total, edges = _expanded_edges(g)
    children: list[list[int]] = [[] for _ in range(total)]
    parents: list[list[int]] = [[] for _ in range(total)]
    for a, b in edges:
        children[a].append(b)
        parents[b].append(a)

    # ancestors-of-conditioning set, for the collider-opening rule
    opens = set(conditioning)
    stack = list(conditioning)
    while stack:
        u = stack.pop()
        for p in parents[u]:
            if p not in opens:
                opens.add(p)
                stack.append(p)

    cond = set(conditioning)
    # state = (node, entered_with_arrowhead); X_i removed after the first hop
    seen: set[tuple[int, bool]] = set()
    stack2: list[tuple[int, bool]] = []
    for p in parents[i]:
        if p != i:
            stack2.append((p, False))  # traversed X_i <- p, tail at p
    while stack2:
        node, head = stack2.pop()
        if node == y:
            return True
        if (node, head) in seen:
            continue
        seen.add((node, head))
        if head:
            if node not in cond:
                for c in children[node]:
                    if c != i:
                        stack2.append((c, True))
            if node in opens:
                for p in parents[node]:
                    if p != i:
                        stack2.append((p, False))
        else:
            if node not in cond:
                for c in children[node]:
                    if c != i:
                        stack2.append((c, True))
                for p in parents[node]:
                    if p != i:
                        stack2.append((p, False))
    return False


def is_no_backdoor(g: Admg) -> bool:
    """True iff no intervenable node has an unblocked backdoor path to the reward."""
    return not any(has_unblocked_backdoor(g, i) for i in g.intervenable)


# ---------------------------------------------------------------------------
# latent projection
# ---------------------------------------------------------------------------


def latent_project(g: Admg, keep: Iterable[int], reward: int | None = None) -> Admg:
    """Project the graph onto ``keep``, treating dropped nodes as hidden.

    Directed edge j -> k in the projection iff a direct edge exists or a
    directed path through dropped nodes only; bidirected edge iff some hidden
    node (a dropped observable or a latent behind an original bidirected
    edge) reaches both endpoints through hidden nodes only.
    """
    keep_set = set(keep)
    if not keep_set <= set(range(g.n_nodes)):
        raise KeepSetInvalid(f"keep set contains unknown nodes: {sorted(keep_set)}")
    if reward is None:
        if g.reward not in keep_set:
            raise KeepSetInvalid("reward dropped and no replacement given")
        reward = g.reward
    elif reward not in keep_set:
        raise KeepSetInvalid("replacement reward not in keep set")

    total, edges = _expanded_edges(g)
    children: list[list[int]] = [[] for _ in range(total)]
    for a, b in edges:
        children[a].append(b)
    hidden = set(range(g.n_nodes, total)) | (set(range(g.n_nodes)) - keep_set)

    def reach_through_hidden(start: int) -> set[int]:
        # kept nodes reachable from `start` by directed paths whose interior
        # nodes are all hidden
        out: set[int] = set()
        seen: set[int] = set()
        stack = list(children[start])
        while stack:
            u = stack.pop()
            if u in keep_set:
                out.add(u)
            elif u in hidden and u not in seen:
                seen.add(u)
                stack.extend(children[u])
        return out

    kept = sorted(keep_set)
    new_index = {v: i for i, v in enumerate(kept)}
    new_directed: set[tuple[int, int]] = set()
    for j in kept:
        for k in reach_through_hidden(j):
            if k != j:
                new_directed.add((new_index[j], new_index[k]))
    new_bidirected: set[tuple[int, int]] = set()
    for h in sorted(hidden):
        targets = sorted(reach_through_hidden(h))
        for a_pos in range(len(targets)):
            for b_pos in range(a_pos + 1, len(targets)):
                a, b = new_index[targets[a_pos]], new_index[targets[b_pos]]
                new_bidirected.add((min(a, b), max(a, b)))
    return Admg(
        names=tuple(g.names[v] for v in kept),
        directed=frozenset(new_directed),
        bidirected=frozenset(new_bidirected),
        reward=new_index[reward],
        intervenable=tuple(new_index[v] for v in g.intervenable if v in keep_set),
        domains=tuple(g.domains[v] for v in kept),
    )


def reduce_to_target_subgraph(g: Admg, i: int) -> Admg:
    """Project onto {X_i} ∪ extended_parents(X_i) ∪ {Y}.

    The resulting graph is the one the observational Bayes-net estimator for
    arm (i, ·) is learned on.
    """
    zpa, _ = extended_parents(g, i)
    keep = set(zpa) | {i, g.reward}
    return latent_project(g, keep)


# ---------------------------------------------------------------------------
# graph file format
# ---------------------------------------------------------------------------

_DIR_RE = re.compile(r"^\s*(\S+?)\s*->\s*(\S+?)\s*$")
_BI_RE = re.compile(r"^\s*(\S+?)\s*<->\s*(\S+?)\s*$")


def graph_from_dict(data: dict) -> Admg:
    """Build a graph from the parsed file structure (see :func:`load_graph`)."""
    if not isinstance(data, dict):
        raise ParseError("graph file must contain a mapping at top level")
    if "nodes" not in data:
        raise ParseError("graph file is missing the 'nodes' list")
    raw_nodes = data["nodes"]
    names: list[str] = []
    domains: list[int] = []
    for entry in raw_nodes:
        if isinstance(entry, str):
            names.append(entry)
            domains.append(2)
        elif isinstance(entry, dict) and len(entry) == 1:
            (name, dom), = entry.items()
            names.append(str(name))
            domains.append(int(dom))
        else:
            raise ParseError(f"bad node entry {entry!r}: expected a name or name: domain")

    def parse_edges(key: str, pattern: re.Pattern) -> list[tuple[str, str]]:
        out = []
        for s in data.get(key, []) or []:
            m = pattern.match(str(s))
            if not m:
                raise ParseError(f"bad {key} edge {s!r}")
            out.append((m.group(1), m.group(2)))
        return out

    if "reward" not in data:
        raise ParseError("graph file is missing the 'reward' node")
    try:
        return Admg.create(
            names=names,
            directed=parse_edges("directed", _DIR_RE),
            bidirected=parse_edges("bidirected", _BI_RE),
            reward=str(data["reward"]),
            intervenable=[str(v) for v in data["intervenable"]]
            if data.get("intervenable") is not None
            else None,
            domains=domains,
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def load_graph(path) -> Admg:
    """Load a graph file: keys nodes, directed (A->B), bidirected (A<->B),
    reward, intervenable (optional; default all non-reward)."""
    with open(path) as fh:
        text = fh.read()
    return parse_graph(text)


def parse_graph(text: str) -> Admg:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ParseError(
            str(exc.problem or exc),
            line=None if mark is None else mark.line + 1,
            column=None if mark is None else mark.column + 1,
        ) from exc
    return graph_from_dict(data)


def graph_to_dict(g: Admg) -> dict:
    """Serializable form of the graph; edge lists sorted alphabetically."""
    nodes: list = []
    for name, dom in zip(g.names, g.domains):
        nodes.append(name if dom == 2 else {name: dom})
    return {
        "nodes": nodes,
        "directed": sorted(f"{g.names[a]}->{g.names[b]}" for a, b in g.directed),
        "bidirected": sorted(f"{g.names[a]}<->{g.names[b]}" for a, b in g.bidirected),
        "reward": g.names[g.reward],
        "intervenable": sorted(g.names[v] for v in g.intervenable),
    }


def save_graph(g: Admg, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(graph_to_dict(g), fh, sort_keys=False)


# ---------------------------------------------------------------------------
# bundled reference graphs
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def example_graph(name: str) -> Admg:
    """Reference graphs used in the experiments and tests.

    ``confounded5``  five confounded nodes, reward X1 (used by the graph tests);
    ``chain6``       six-node fully observed DAG feeding the reward;
    ``chain6-hidden``six-node DAG with two hidden confounders;
    ``backdoor7``    seven intervenable nodes, two hidden confounders and open
                     backdoor paths;
    ``backdoor5``    smaller variant with one hidden confounder.
    """
    if name == "confounded5":
        return Admg.create(
            names=["X1", "X2", "X3", "X4", "X5"],
            directed=[
                ("X2", "X4"), ("X2", "X3"), ("X3", "X5"), ("X3", "X1"),
                ("X4", "X5"), ("X4", "X1"), ("X5", "X1"),
            ],
            bidirected=[("X2", "X5"), ("X3", "X1"), ("X2", "X1")],
            reward="X1",
        )
    if name == "chain6":
        return Admg.create(
            names=["X1", "X2", "X3", "X4", "X5", "X6", "Y"],
            directed=[
                ("X1", "X2"), ("X1", "X3"), ("X2", "X3"), ("X2", "X4"),
                ("X3", "X5"), ("X3", "X4"), ("X4", "X5"), ("X4", "X6"),
                ("X5", "X6"), ("X6", "Y"),
            ],
            reward="Y",
        )
    if name == "chain6-hidden":
        return Admg.create(
            names=["X1", "X2", "X3", "X4", "X5", "X6", "Y"],
            directed=[
                ("X1", "X3"), ("X2", "X3"), ("X2", "X4"), ("X3", "X4"),
                ("X3", "X5"), ("X3", "X6"), ("X4", "X5"), ("X5", "X6"),
                ("X6", "Y"),
            ],
            bidirected=[("X1", "X2"), ("X4", "X6")],
            reward="Y",
        )
    if name == "backdoor7":
        return Admg.create(
            names=["X1", "X2", "X3", "X4", "X5", "X6", "X7", "Y"],
            directed=[
                ("X1", "X2"), ("X1", "X3"), ("X2", "X4"), ("X2", "X3"),
                ("X3", "X4"), ("X3", "X5"), ("X3", "X6"), ("X4", "X5"),
                ("X4", "X6"), ("X5", "X7"), ("X6", "X7"), ("X7", "Y"),
            ],
            bidirected=[("X2", "X5"), ("X2", "X6")],
            reward="Y",
        )
    if name == "backdoor5":
        return Admg.create(
            names=["X1", "X2", "X3", "X4", "X5", "Y"],
            directed=[
                ("X1", "X3"), ("X1", "X4"), ("X1", "X2"), ("X2", "X3"),
                ("X2", "X4"), ("X3", "X5"), ("X4", "X5"), ("X5", "Y"),
            ],
            bidirected=[("X3", "X4")],
            reward="Y",
        )
    raise ValueError(f"unknown example graph {name!r}")
