"""Shared fixtures and independent brute-force oracles for the test suite.

Everything in here deliberately re-derives results from first principles
(explicit path enumeration, full joint enumeration, count-vector search)
so the tests never share a code path with the implementation they check.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from causalbandits.admg import Admg
from causalbandits.scm import Cpt, Scm


# ---------------------------------------------------------------------------
# graphs and models
# ---------------------------------------------------------------------------


def random_admg(rng: np.random.Generator, max_nodes: int = 7) -> Admg:
    """Random binary graph: topological directed edges, random bidirected
    pairs, reward drawn among the nodes, everything else intervenable."""
    n = int(rng.integers(2, max_nodes + 1))
    names = [f"V{k}" for k in range(n)]
    directed = []
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < 0.45:
                directed.append((names[a], names[b]))
    bidirected = []
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < 0.25:
                bidirected.append((names[a], names[b]))
    reward = names[int(rng.integers(n))]
    return Admg.create(names, directed, bidirected, reward=reward)


def random_scm(rng: np.random.Generator, g: Admg, lo: float = 0.1, hi: float = 0.9) -> Scm:
    """Random CPTs over the full graph-parent sets plus incident latents."""
    latent_edges = sorted(g.bidirected)
    n = g.n_nodes
    cpts = []
    for v in range(n):
        pars = tuple(g.parents[v]) + tuple(
            n + k for k, e in enumerate(latent_edges) if v in e
        )
        rows = max(1, 2 ** len(pars))
        p1 = rng.uniform(lo, hi, size=rows)
        cpts.append(Cpt(pars, np.stack([1.0 - p1, p1], axis=1)))
    latents = tuple(np.array([0.5, 0.5]) for _ in latent_edges)
    return Scm(g, tuple(cpts), latents)


@pytest.fixture
def confounded_chain() -> Scm:
    """Three observed nodes X1 -> X2 -> Y with a hidden X1--Y confounder.

    Both intervenable nodes satisfy the identifiability condition while X1's
    c-component is {X1, Y}, so the factorization machinery is exercised
    beyond the singleton case.
    """
    g = Admg.create(
        ["X1", "X2", "Y"],
        directed=[("X1", "X2"), ("X2", "Y")],
        bidirected=[("X1", "Y")],
        reward="Y",
    )
    cpts = (
        Cpt((3,), np.array([[0.8, 0.2], [0.2, 0.8]])),
        Cpt((0,), np.array([[0.7, 0.3], [0.3, 0.7]])),
        Cpt((1, 3), np.array([[0.9, 0.1], [0.5, 0.5], [0.6, 0.4], [0.1, 0.9]])),
    )
    return Scm(g, cpts, (np.array([0.5, 0.5]),))


# ---------------------------------------------------------------------------
# expanded-graph helpers
# ---------------------------------------------------------------------------


def expanded_edges(g: Admg) -> tuple[int, list[tuple[int, int]]]:
    """Directed edges with one fresh latent source per bidirected pair."""
    edges = list(g.directed)
    nxt = g.n_nodes
    for a, b in sorted(g.bidirected):
        edges.append((nxt, a))
        edges.append((nxt, b))
        nxt += 1
    return nxt, edges


def brute_force_backdoor(g: Admg, i: int) -> bool:
    """Enumerate every simple path from X_i to the reward that starts with an
    edge into X_i and test it for colliders (empty conditioning set)."""
    total, edges = expanded_edges(g)
    adj: dict[int, list[tuple[int, bool]]] = {v: [] for v in range(total)}
    for a, b in edges:
        adj[a].append((b, True))  # arrowhead at b
        adj[b].append((a, False))  # traversed against the arrow
    y = g.reward
    found = False

    def dfs(node: int, came_head: bool, visited: set[int]):
        nonlocal found
        if found:
            return
        if node == y:
            found = True
            return
        for nxt, head_at_next in adj[node]:
            if nxt in visited:
                continue
            # edge (node, nxt) has an arrowhead at `node` iff it points into
            # node (head_at_next False); with an empty conditioning set the
            # interior node blocks exactly when both marks at it are heads
            if came_head and not head_at_next:
                continue
            dfs(nxt, head_at_next, visited | {nxt})

    for nxt, head_at_next in adj[i]:
        if not head_at_next:
            # the first traversed edge points into X_i (nxt -> X_i)
            dfs(nxt, False, {i, nxt})
        if found:
            return True
    return found


def brute_force_project(g: Admg, keep: set[int]) -> tuple[set, set]:
    """Projection rules applied through explicit simple-path enumeration."""
    total, edges = expanded_edges(g)
    children: dict[int, list[int]] = {v: [] for v in range(total)}
    for a, b in edges:
        children[a].append(b)
    hidden = set(range(g.n_nodes, total)) | (set(range(g.n_nodes)) - keep)

    def hidden_interior_paths(start: int) -> set[int]:
        reached: set[int] = set()

        def dfs(node: int, visited: set[int]):
            for nxt in children[node]:
                if nxt in visited:
                    continue
                if nxt in keep:
                    reached.add(nxt)
                elif nxt in hidden:
                    dfs(nxt, visited | {nxt})

        dfs(start, {start})
        return reached

    directed = set()
    for j in keep:
        for k in hidden_interior_paths(j):
            if k != j:
                directed.add((j, k))
    bidirected = set()
    for h in hidden:
        targets = sorted(hidden_interior_paths(h))
        for a, b in itertools.combinations(targets, 2):
            bidirected.add((min(a, b), max(a, b)))
    return directed, bidirected


# ---------------------------------------------------------------------------
# exact references for models and budgets
# ---------------------------------------------------------------------------


def enumerate_joint(scm: Scm) -> dict[tuple, float]:
    """Full observational joint over observed assignments, latents summed out."""
    g = scm.graph
    doms = scm.combined_domains
    n = g.n_nodes
    out: dict[tuple, float] = {}
    for assign in itertools.product(*(range(d) for d in doms)):
        p = 1.0
        for k, tab in enumerate(scm.latent_tables):
            p *= tab[assign[n + k]]
        for v in range(n):
            cpt = scm.cpts[v]
            row = 0
            for par in cpt.parents:
                row = row * doms[par] + assign[par]
            p *= cpt.table[row, assign[v]]
        obs = assign[:n]
        out[obs] = out.get(obs, 0.0) + p
    return out


def brute_force_mean(scm: Scm, node: int | None, value: int = 0) -> float:
    """Interventional (or observational, node=None) reward mean by full
    enumeration of the latent-expanded joint."""
    g = scm.graph
    doms = scm.combined_domains
    n = g.n_nodes
    total = 0.0
    for assign in itertools.product(*(range(d) for d in doms)):
        if node is not None and assign[node] != value:
            continue
        p = 1.0
        for k, tab in enumerate(scm.latent_tables):
            p *= tab[assign[n + k]]
        for v in range(n):
            if v == node:
                continue
            cpt = scm.cpts[v]
            row = 0
            for par in cpt.parents:
                row = row * doms[par] + assign[par]
            p *= cpt.table[row, assign[v]]
        total += p * assign[g.reward]
    return total


def brute_force_optimal_value(mus: list[float], cs: list[int], budget: int) -> float:
    """Recursive search over all pull-count vectors within the budget."""
    best = 0.0

    def rec(k: int, rem: int, acc: float):
        nonlocal best
        if acc > best:
            best = acc
        if k == len(mus):
            return
        count = 0
        while count * cs[k] <= rem:
            rec(k + 1, rem - count * cs[k], acc + count * mus[k])
            count += 1

    rec(0, budget, 0.0)
    return best
