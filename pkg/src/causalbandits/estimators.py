"""Reward and frequency estimators.

Two routes to an interventional mean from observational data live here:

* the stratified factorization estimator, which partitions the observational
  log, buckets each partition by the conditioning set of one node's factor,
  and averages per-slice plug-in evaluations of the interventional
  factorization (pooled with interventional samples);
* the smoothed Bayes-net pipeline, which projects the graph onto the target's
  neighbourhood, fits add-one-smoothed conditional tables and marginalizes
  the reward exactly.

Frequency quantities (the per-arm observation rate, its cost-weighted
threshold and the unweighted baseline threshold) also live here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .admg import (
    Admg,
    c_component_of,
    extended_parents,
    factorization_parents,
    identifiable_sufficient,
    reduce_to_target_subgraph,
)
from .errors import (
    EmptySlice,
    NoEffectiveSamples,
    NoObservations,
    StateSpaceTooLarge,
    ZeroCount,
)
from .scm import OBSERVE, Arm

ENUMERATION_CAP = 2 ** 20


# ---------------------------------------------------------------------------
# logs
# ---------------------------------------------------------------------------


class ObsLog:
    """Ordered record of pulled arms, observed assignments and rewards."""

    def __init__(self, g: Admg, capacity: int = 64):
        self.g = g
        self._n = 0
        self._rounds = np.zeros(capacity, dtype=np.int64)
        self._arm_node = np.zeros(capacity, dtype=np.int64)
        self._arm_value = np.zeros(capacity, dtype=np.int64)
        self._values = np.zeros((capacity, g.n_nodes), dtype=np.int64)
        self._rewards = np.zeros(capacity, dtype=np.int64)

    def __len__(self) -> int:
        return self._n

    def _grow(self):
        cap = max(16, 2 * len(self._rounds))
        for name in ("_rounds", "_arm_node", "_arm_value", "_rewards"):
            arr = getattr(self, name)
            new = np.zeros(cap, dtype=arr.dtype)
            new[: self._n] = arr[: self._n]
            setattr(self, name, new)
        new_vals = np.zeros((cap, self._values.shape[1]), dtype=self._values.dtype)
        new_vals[: self._n] = self._values[: self._n]
        self._values = new_vals

    def append(self, t: int, arm: Arm, values, reward: int):
        if self._n == len(self._rounds):
            self._grow()
        k = self._n
        self._rounds[k] = t
        self._arm_node[k] = arm.node
        self._arm_value[k] = arm.value
        self._values[k] = values
        self._rewards[k] = reward
        self._n += 1

    def append_batch(self, t0: int, arm: Arm, values, rewards):
        for k in range(len(rewards)):
            self.append(t0 + k, arm, values[k], int(rewards[k]))

    @property
    def values(self) -> np.ndarray:
        return self._values[: self._n]

    @property
    def rewards(self) -> np.ndarray:
        return self._rewards[: self._n]

    def arm_mask(self, arm: Arm) -> np.ndarray:
        return (self._arm_node[: self._n] == arm.node) & (
            self._arm_value[: self._n] == arm.value
        )

    def observations(self) -> np.ndarray:
        """Assignment matrix of the observational rounds, in log order."""
        return self.values[self.arm_mask(OBSERVE)]

    def observation_rewards(self) -> np.ndarray:
        return self.rewards[self.arm_mask(OBSERVE)]

    def count(self, arm: Arm) -> int:
        return int(self.arm_mask(arm).sum())

    def reward_sum(self, arm: Arm) -> int:
        return int(self.rewards[self.arm_mask(arm)].sum())


def update_mu0(log: ObsLog) -> float:
    """Empirical success rate of the observational arm."""
    rewards = log.observation_rewards()
    if len(rewards) == 0:
        raise NoObservations("no observational rounds in the log")
    return float((rewards == 1).mean())


def ucb_index(mu_hat: float, effective_count: int, t: int) -> float:
    """Point estimate plus the sqrt(2 ln t / n) exploration bonus."""
    if effective_count < 1:
        raise ZeroCount("UCB index needs at least one effective sample")
    if t < 1:
        raise ValueError("round index must be at least one")
    return mu_hat + math.sqrt(2.0 * math.log(t) / effective_count)


# ---------------------------------------------------------------------------
# factorization bookkeeping shared by both estimator routes
# ---------------------------------------------------------------------------


def _mixed_radix_strides(domains: list[int]) -> np.ndarray:
    strides = np.zeros(len(domains), dtype=np.int64)
    acc = 1
    for k in range(len(domains) - 1, -1, -1):
        strides[k] = acc
        acc *= domains[k]
    return strides


@dataclass(frozen=True, eq=False)
class GraphFactorIndex:
    """Per-node conditioning sets of the factorization, with flat bucket ids."""

    g: Admg
    z_sets: tuple[tuple[int, ...], ...]
    strides: tuple[np.ndarray, ...]
    n_keys: tuple[int, ...]
    base: tuple[int, ...]
    n_buckets: int
    max_domain: int

    def record_bucket(self, j: int, values) -> int:
        """Flat bucket id of one assignment for node j's factor."""
        z = self.z_sets[j]
        if not z:
            return self.base[j]
        return self.base[j] + int(values[list(z)] @ self.strides[j])

    def record_buckets_batch(self, j: int, values: np.ndarray) -> np.ndarray:
        z = self.z_sets[j]
        if not z:
            return np.full(len(values), self.base[j], dtype=np.int64)
        return self.base[j] + values[:, list(z)] @ self.strides[j]


@lru_cache(maxsize=256)
def graph_factor_index(g: Admg) -> GraphFactorIndex:
    z_sets = []
    strides = []
    n_keys = []
    base = []
    total = 0
    for j in range(g.n_nodes):
        z = tuple(sorted(factorization_parents(g, j)))
        doms = [g.domains[v] for v in z]
        z_sets.append(z)
        strides.append(_mixed_radix_strides(doms))
        keys = int(np.prod(doms)) if z else 1
        n_keys.append(keys)
        base.append(total)
        total += keys
    return GraphFactorIndex(
        g=g,
        z_sets=tuple(z_sets),
        strides=tuple(strides),
        n_keys=tuple(n_keys),
        base=tuple(base),
        n_buckets=total,
        max_domain=max(g.domains),
    )


@dataclass(frozen=True, eq=False)
class FactorizationPlan:
    """Enumeration tables for the interventional factorization of one arm.

    Rows of ``assignments`` run over every joint configuration with the
    reward pinned to one; the hidden sum over the target's own value is the
    sweep of column ``i``.  ``keys[j, e]`` is the flat bucket the e-th
    assignment reads for node j's factor (with the target column replaced by
    the intervened value for nodes outside the target's c-component);
    ``vals[j, e]`` is node j's own value there.
    """

    g: Admg
    i: int
    x: int
    index: GraphFactorIndex
    assignments: np.ndarray
    keys: np.ndarray
    vals: np.ndarray
    in_component: np.ndarray
    required: np.ndarray  # bool mask over flat buckets


@lru_cache(maxsize=512)
def factorization_plan(g: Admg, i: int, x: int) -> FactorizationPlan:
    n = g.n_nodes
    y = g.reward
    if g.domains[y] != 2:
        raise ValueError("the factorization estimator assumes a binary reward")
    n_enum = 1
    for v in range(n):
        if v != y:
            n_enum *= g.domains[v]
            if n_enum > ENUMERATION_CAP:
                raise StateSpaceTooLarge(
                    f"factorization enumeration needs {n_enum}+ assignments"
                )
    ranges = [range(g.domains[v]) if v != y else (1,) for v in range(n)]
    assignments = np.array(list(itertools.product(*ranges)), dtype=np.int64)
    index = graph_factor_index(g)
    comp = c_component_of(g, i)
    clamped = assignments.copy()
    clamped[:, i] = x
    keys = np.zeros((n, len(assignments)), dtype=np.int64)
    vals = np.zeros((n, len(assignments)), dtype=np.int64)
    in_comp = np.zeros(n, dtype=bool)
    required = np.zeros(index.n_buckets, dtype=bool)
    for j in range(n):
        in_comp[j] = j in comp
        source = assignments if in_comp[j] else clamped
        keys[j] = index.record_buckets_batch(j, source)
        vals[j] = assignments[:, j]
        required[np.unique(keys[j])] = True
    return FactorizationPlan(
        g=g,
        i=i,
        x=x,
        index=index,
        assignments=assignments,
        keys=keys,
        vals=vals,
        in_component=in_comp,
        required=required,
    )


def _bucket_offset(bucket: int, n_slices: int, salt: int) -> int:
    """Deterministic slice offset; re-drawn whenever the slice count changes."""
    h = (bucket + 1) * 0x9E3779B97F4A7C15 ^ (n_slices * 0xC2B2AE3D27D4EB4F) ^ salt
    h &= (1 << 64) - 1
    h ^= h >> 31
    return h % n_slices


# ---------------------------------------------------------------------------
# strata over the observational log
# ---------------------------------------------------------------------------


class _TargetStrata:
    """Per-target slice state inside a :class:`SharedObservationStrata`."""

    __slots__ = (
        "plan", "seed", "n_slices", "_n_at_min", "hits", "totals",
        "slice_estimates", "estimate_sum", "required", "required_ids",
    )

    def __init__(self, plan: FactorizationPlan, seed: int):
        self.plan = plan
        self.seed = int(seed)
        self.required = plan.required
        self.required_ids = np.flatnonzero(plan.required)
        self.n_slices = 0
        self._n_at_min = int(len(self.required_ids))
        self.hits: np.ndarray | None = None
        self.totals: np.ndarray | None = None
        self.slice_estimates = np.zeros(0)
        self.estimate_sum = 0.0


class SharedObservationStrata:
    """Incremental strata over a growing observational log, shared by targets.

    Observations are dealt round-robin (over one seeded node permutation)
    into one subset per graph node; within a subset each record is bucketed
    by the realization of that node's conditioning set.  Buckets are common
    to every target; per target, the slice count is the smallest count over
    the buckets its factorization queries.  Whenever a target's slice count
    changes its slices are re-dealt from scratch, otherwise only the slice
    receiving the new record is recomputed.
    """

    def __init__(self, g: Admg, targets: list[tuple[int, int]], seed: int):
        self.g = g
        self.seed = int(seed)
        self.index = graph_factor_index(g)
        rng = np.random.default_rng(self.seed)
        self.subset_perm = rng.permutation(g.n_nodes)
        nb = self.index.n_buckets
        self.bucket_values: list[list[int]] = [[] for _ in range(nb)]
        self.bucket_counts = np.zeros(nb, dtype=np.int64)
        self.n_obs = 0
        self.targets: dict[tuple[int, int], _TargetStrata] = {}
        for i, x in targets:
            self.targets[(i, x)] = _TargetStrata(
                factorization_plan(g, i, x), seed=self.seed
            )

    def add_observation(self, values: np.ndarray) -> None:
        j = int(self.subset_perm[self.n_obs % self.g.n_nodes])
        self.n_obs += 1
        b = self.index.record_bucket(j, values)
        pos = int(self.bucket_counts[b])
        self.bucket_counts[b] = pos + 1
        v = int(values[j])
        self.bucket_values[b].append(v)
        for state in self.targets.values():
            if state.required[b]:
                self._update_target(state, b, v, pos)

    def _update_target(self, state: _TargetStrata, b: int, v: int, pos: int) -> None:
        if pos == state.n_slices and state._n_at_min > 0:
            state._n_at_min -= 1
            if state._n_at_min == 0:
                counts = self.bucket_counts[state.required_ids]
                state.n_slices = int(counts.min())
                state._n_at_min = int((counts == state.n_slices).sum())
                self._redeal(state)
                return
        if state.n_slices >= 1:
            # counts of required buckets never sit below the current minimum
            s = (pos + _bucket_offset(b, state.n_slices, state.seed)) % state.n_slices
            state.hits[b, v, s] += 1
            state.totals[b, s] += 1
            self._refresh_slice(state, s)

    def _redeal(self, state: _TargetStrata) -> None:
        s_count = state.n_slices
        if s_count == 0:
            state.hits = None
            state.totals = None
            state.slice_estimates = np.zeros(0)
            state.estimate_sum = 0.0
            return
        nb = self.index.n_buckets
        dom = self.index.max_domain
        state.hits = np.zeros((nb, dom, s_count))
        state.totals = np.zeros((nb, s_count))
        for b in state.required_ids:
            vals = np.asarray(self.bucket_values[b], dtype=np.int64)
            off = _bucket_offset(int(b), s_count, state.seed)
            slices = (np.arange(len(vals)) + off) % s_count
            state.hits[b] = np.bincount(
                vals * s_count + slices, minlength=dom * s_count
            ).reshape(dom, s_count)
            state.totals[b] = np.bincount(slices, minlength=s_count)
        probs = state.hits / np.maximum(state.totals, 1.0)[:, None, :]
        state.slice_estimates = np.asarray(
            kernels.factorization_sum_batch(state.plan.keys, state.plan.vals, probs)
        )
        state.estimate_sum = float(state.slice_estimates.sum())

    def _refresh_slice(self, state: _TargetStrata, s: int) -> None:
        prob = state.hits[:, :, s] / np.maximum(state.totals[:, s], 1.0)[:, None]
        new = kernels.factorization_sum(state.plan.keys, state.plan.vals, prob)
        state.estimate_sum += float(new) - float(state.slice_estimates[s])
        state.slice_estimates[s] = new


class StrataTracker:
    """Strata of a single target arm (one-target view of the shared engine)."""

    def __init__(self, g: Admg, i: int, x: int, seed: int):
        self.g = g
        self.i = i
        self.x = x
        self.seed = int(seed)
        self._shared = SharedObservationStrata(g, [(i, x)], seed)
        self._state = self._shared.targets[(i, x)]
        self.plan = self._state.plan
        self.index = self._shared.index

    @property
    def subset_perm(self) -> np.ndarray:
        return self._shared.subset_perm

    @property
    def n_obs(self) -> int:
        return self._shared.n_obs

    @property
    def n_slices(self) -> int:
        return self._state.n_slices

    @property
    def estimate_sum(self) -> float:
        return self._state.estimate_sum

    @property
    def bucket_counts(self) -> np.ndarray:
        return self._shared.bucket_counts

    def add_observation(self, values: np.ndarray) -> None:
        self._shared.add_observation(values)

    def slice_estimate(self, s: int) -> float:
        if not 0 <= s < self.n_slices:
            raise EmptySlice(f"slice {s} outside the {self.n_slices} available slices")
        return float(self._state.slice_estimates[s])

    def per_node_minima(self) -> dict[int, int]:
        """Smallest queried-bucket count per node's subset."""
        out = {}
        for j in range(self.g.n_nodes):
            ids = np.unique(self.plan.keys[j])
            out[j] = int(self._shared.bucket_counts[ids].min()) if len(ids) else 0
        return out


@dataclass(eq=False)
class StrataIndex:
    """Snapshot of the strata of one target arm (see :class:`StrataTracker`)."""

    g: Admg
    i: int
    x: int
    n_obs: int
    n_slices: int
    subset_perm: np.ndarray
    tracker: StrataTracker = field(repr=False)

    @property
    def slice_count(self) -> int:
        return self.n_slices

    def per_node_minima(self) -> dict[int, int]:
        return self.tracker.per_node_minima()


def build_strata(log: ObsLog, g: Admg, i: int, x: int, rng: np.random.Generator) -> StrataIndex:
    """Partition the log's observational rounds for target arm (i, x)."""
    tracker = StrataTracker(g, i, x, seed=int(rng.integers(2 ** 63)))
    for row in log.observations():
        tracker.add_observation(row)
    return StrataIndex(
        g=g,
        i=i,
        x=x,
        n_obs=tracker.n_obs,
        n_slices=tracker.n_slices,
        subset_perm=tracker.subset_perm,
        tracker=tracker,
    )


def factorized_stratum_estimate(strata: StrataIndex, g: Admg, i: int, x: int, s: int) -> float:
    """Plug-in factorization value from the per-slice empirical conditionals."""
    if (strata.g, strata.i, strata.x) != (g, i, x):
        raise ValueError("strata were built for a different target")
    return strata.tracker.slice_estimate(s)


def estimate_mu_ix(log: ObsLog, strata: StrataIndex, i: int, x: int) -> float:
    """Pooled interventional + observational estimate of one arm's mean."""
    arm = Arm.intervene(i, x)
    n = log.count(arm)
    s_count = strata.n_slices
    if n + s_count < 1:
        raise NoEffectiveSamples(f"no samples available for {arm}")
    hits = log.reward_sum(arm)
    return (hits + strata.tracker.estimate_sum) / (n + s_count)


# ---------------------------------------------------------------------------
# frequency profile and exploration thresholds
# ---------------------------------------------------------------------------


def estimate_q_hat(
    log: ObsLog,
    g: Admg,
    i: int,
    x: int,
    budget: float,
    no_backdoor: bool = False,
) -> float:
    """Scaled minimum stratum count of (X_i = x, extended parents = z).

    With ``no_backdoor`` the stratification is dropped and the plain count of
    X_i = x is scaled instead.
    """
    obs = log.observations()
    match = obs[:, i] == x if len(obs) else np.zeros(0, dtype=bool)
    if no_backdoor:
        return 2.0 * float(match.sum()) / budget
    zpa, _ = extended_parents(g, i)
    z = sorted(zpa)
    if not z:
        return 2.0 * float(match.sum()) / budget
    doms = [g.domains[v] for v in z]
    n_keys = int(np.prod(doms))
    strides = _mixed_radix_strides(doms)
    if len(obs) == 0:
        return 0.0
    keys = obs[match][:, z] @ strides
    counts = np.bincount(keys, minlength=n_keys)
    return 2.0 * float(counts.min()) / budget


@dataclass(frozen=True, eq=False)
class FrequencyProfile:
    """Per-arm frequency estimates and c-component sizes."""

    arms: tuple[Arm, ...]
    q: np.ndarray
    k: np.ndarray

    @staticmethod
    def from_log(
        log: ObsLog, g: Admg, budget: float, no_backdoor: bool = False
    ) -> "FrequencyProfile":
        arms = []
        qs = []
        ks = []
        for i in g.intervenable:
            _, k_i = extended_parents(g, i)
            for x in range(g.domains[i]):
                arms.append(Arm.intervene(i, x))
                qs.append(estimate_q_hat(log, g, i, x, budget, no_backdoor))
                ks.append(1 if no_backdoor else k_i)
        return FrequencyProfile(tuple(arms), np.array(qs), np.array(ks, dtype=np.int64))


def compute_n_of_q(profile: FrequencyProfile, costs) -> int:
    """Smallest integer tau whose cost-weighted infrequent-arm mass fits under it."""
    c = np.array([costs.of(a) for a in profile.arms])
    hi = max(1, math.ceil(float(c.sum())))
    for tau in range(1, hi + 1):
        infrequent = profile.q < (1.0 / tau) ** (1.0 / profile.k)
        if float(c[infrequent].sum()) <= tau:
            return tau
    return hi


def compute_m_prime(profile: FrequencyProfile) -> int:
    """Unweighted predecessor of the threshold: counts instead of costs."""
    hi = max(1, len(profile.arms))
    for tau in range(1, hi + 1):
        if int((profile.q < 1.0 / tau).sum()) <= tau:
            return tau
    return hi


# ---------------------------------------------------------------------------
# smoothed Bayes-net estimator
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BayesNet:
    """Learned conditional tables over a reduced graph, one per node."""

    g: Admg
    tables: tuple[np.ndarray, ...]  # tables[j]: (n_keys_j, domain_j)

    def flat_tables(self) -> tuple[np.ndarray, GraphFactorIndex]:
        index = graph_factor_index(self.g)
        prob = np.zeros((index.n_buckets, index.max_domain))
        for j, tab in enumerate(self.tables):
            prob[index.base[j] : index.base[j] + index.n_keys[j], : tab.shape[1]] = tab
        return prob, index


def _log_columns_for(log_or_values, h: Admg) -> np.ndarray:
    if isinstance(log_or_values, ObsLog):
        src = log_or_values.g
        cols = [src.index_of(name) for name in h.names]
        return log_or_values.observations()[:, cols]
    return np.asarray(log_or_values)


def learn_bayes_net(
    log_or_values,
    h: Admg,
    i: int,
    x: int,
    smoothing_threshold: int,
) -> BayesNet:
    """Fit add-one-smoothed conditional tables on the reduced graph.

    Nodes in the target's c-component are always smoothed; other nodes fall
    back to the uninformative uniform row when their conditioning cell
    (with the target clamped to ``x`` where it appears) has fewer than
    ``smoothing_threshold`` samples.

    ``log_or_values`` is either an :class:`ObsLog` (columns are matched to
    ``h`` by node name) or an assignment matrix aligned with ``h``.
    """
    samples = _log_columns_for(log_or_values, h)
    index = graph_factor_index(h)
    comp = c_component_of(h, i)
    tables: list[np.ndarray] = []
    n_samples = len(samples)
    for j in range(h.n_nodes):
        dom = h.domains[j]
        n_keys = index.n_keys[j]
        if n_samples:
            keys = index.record_buckets_batch(j, samples) - index.base[j]
            flat = keys * dom + samples[:, j]
            counts = np.bincount(flat, minlength=n_keys * dom).reshape(n_keys, dom)
        else:
            counts = np.zeros((n_keys, dom))
        totals = counts.sum(axis=1)
        smoothed = (counts + 1.0) / (totals + dom)[:, None]
        if j in comp:
            tables.append(smoothed)
            continue
        table = np.full((n_keys, dom), 1.0 / dom)
        ok = totals >= smoothing_threshold
        z = index.z_sets[j]
        if i in z:
            pos = z.index(i)
            stride = int(index.strides[j][pos])
            key_digits = (np.arange(n_keys) // stride) % h.domains[i]
            ok &= key_digits == x
        table[ok] = smoothed[ok]
        tables.append(table)
    return BayesNet(h, tuple(tables))


def mu_from_bayes_net(d: BayesNet, h: Admg, i: int, x: int) -> float:
    """Exact marginal reward rate of the learned factorization under do(X_i=x)."""
    if d.g is not h and d.g != h:
        raise ValueError("tables were learned on a different graph")
    plan = factorization_plan(h, i, x)
    prob, _ = d.flat_tables()
    return float(kernels.factorization_sum(plan.keys, plan.vals, prob))


def estimate_mu_via_reduction(
    log: ObsLog, g: Admg, i: int, x: int, smoothing_threshold: int
) -> float:
    """Full observational pipeline: reduce, fit tables, marginalize."""
    h = reduce_to_target_subgraph(g, i)
    hi = h.index_of(g.names[i])
    d = learn_bayes_net(log, h, hi, x, smoothing_threshold)
    return mu_from_bayes_net(d, h, hi, x)


# ---------------------------------------------------------------------------
# pooled per-arm estimates for the adaptive cumulative policy
# ---------------------------------------------------------------------------


class RewardState:
    """All per-arm point estimates for one adaptive run.

    Interventional sums are exact counters; observational contributions come
    from one shared strata engine covering every identifiable arm.  Arms that
    fail the identifiability check keep a zero slice count and fall back to
    their own interventional samples (the caller logs a warning).
    """

    def __init__(self, g: Admg, arms: list[Arm], seed: int):
        self.g = g
        self.arms = list(arms)
        self.arm_pos = {a: k for k, a in enumerate(self.arms)}
        n_arms = len(self.arms)
        self.interv_n = np.zeros(n_arms, dtype=np.int64)
        self.interv_sum = np.zeros(n_arms)
        self.obs_n = 0
        self.obs_sum = 0.0
        self.skipped: list[Arm] = []
        targets = []
        self._tracked: list[tuple[int, tuple[int, int]]] = []
        for a in self.arms:
            if a.is_observe:
                continue
            if identifiable_sufficient(g, a.node):
                targets.append((a.node, a.value))
                self._tracked.append((self.arm_pos[a], (a.node, a.value)))
            else:
                self.skipped.append(a)
        self.strata = SharedObservationStrata(g, targets, seed)
        self._strata_sum = np.zeros(n_arms)
        self._strata_n = np.zeros(n_arms, dtype=np.int64)
        self._obs_pos = self.arm_pos.get(OBSERVE)

    def record(self, arm: Arm, values: np.ndarray, reward: int) -> None:
        if arm.is_observe:
            self.obs_n += 1
            self.obs_sum += 1.0 if reward == 1 else 0.0
            self.strata.add_observation(values)
            for pos, key in self._tracked:
                state = self.strata.targets[key]
                self._strata_sum[pos] = state.estimate_sum
                self._strata_n[pos] = state.n_slices
        else:
            pos = self.arm_pos[arm]
            self.interv_n[pos] += 1
            self.interv_sum[pos] += 1.0 if reward == 1 else 0.0

    def effective_counts(self) -> np.ndarray:
        n = self.interv_n + self._strata_n
        if self._obs_pos is not None:
            n[self._obs_pos] = self.obs_n
        return n

    def mu_array(self) -> np.ndarray:
        n = self.effective_counts()
        total = self.interv_sum + self._strata_sum
        if self._obs_pos is not None:
            total[self._obs_pos] = self.obs_sum
        return np.divide(total, n, out=np.zeros(len(n)), where=n > 0)

    def effective_count(self, arm: Arm) -> int:
        if arm.is_observe:
            return self.obs_n
        pos = self.arm_pos[arm]
        return int(self.interv_n[pos] + self._strata_n[pos])

    def mu_hat(self, arm: Arm) -> float:
        if arm.is_observe:
            if self.obs_n == 0:
                raise NoObservations("observational arm not pulled yet")
            return self.obs_sum / self.obs_n
        n_eff = self.effective_count(arm)
        if n_eff == 0:
            raise NoEffectiveSamples(f"no samples for {arm}")
        pos = self.arm_pos[arm]
        return (self.interv_sum[pos] + self._strata_sum[pos]) / n_eff

    def ucb(self, arm: Arm, t: int) -> float:
        return ucb_index(self.mu_hat(arm), self.effective_count(arm), t)
