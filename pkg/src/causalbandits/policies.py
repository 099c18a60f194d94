"""Bandit policies: the budgeted UCB policy, the two-phase best-arm policy,
their no-backdoor specializations, and the comparison baselines."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .admg import Admg, is_no_backdoor
from .errors import (
    GraphHasHiddenConfounders,
    GraphNotNoBackdoor,
    InsufficientBudget,
    NonUniformCost,
)
from .estimators import (
    FrequencyProfile,
    ObsLog,
    RewardState,
    build_strata,
    compute_m_prime,
    compute_n_of_q,
    estimate_mu_ix,
    estimate_mu_via_reduction,
)
from .scm import OBSERVE, Arm, CostSet, Scm, arms_for, parse_arm_label, sample, sample_many

log = logging.getLogger(__name__)

UNINFORMATIVE_MEAN = 0.5  # fallback when an arm has no usable samples at all


@dataclass(frozen=True)
class PolicyConfig:
    """Everything a policy run needs besides the environment.

    ``cost_normalized_index`` switches the exploitation index of the
    cumulative policy between reward-per-cost (default, matching the
    regret analysis) and the plain upper confidence bound.
    ``estimator_path`` selects how the two-phase policy turns observations
    into reward estimates.  ``bn_threshold`` is the smoothing threshold of
    the Bayes-net tables (default: sqrt of the observation count).
    """

    kind: str
    budget: float
    costs: CostSet
    seed: int = 0
    cost_normalized_index: bool = True
    no_backdoor_q: bool = False
    estimator_path: str = "bayes-net"  # bayes-net | factorized
    bn_threshold: int | None = None
    snapshot_every: int = 0

    def digest(self) -> str:
        payload = {
            "kind": self.kind,
            "budget": self.budget,
            "costs": [[a.node, a.value, c] for a, c in self.costs.costs],
            "seed": self.seed,
            "cost_normalized_index": self.cost_normalized_index,
            "no_backdoor_q": self.no_backdoor_q,
            "estimator_path": self.estimator_path,
            "bn_threshold": self.bn_threshold,
        }
        return hashlib.sha1(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


@dataclass
class GuardRecord:
    """Decision-time inputs of one adaptive round, for invariant replay."""

    t: int
    obs_count_before: int
    beta_before: float
    remaining_before: float
    min_interv_cost: float
    exploited: bool


@dataclass
class PolicyTrace:
    """Per-round account of one policy run."""

    kind: str
    seed: int
    budget: float
    config_digest: str
    rounds_t: list[int] = field(default_factory=list)
    rounds_arm: list[Arm] = field(default_factory=list)
    rounds_cost: list[float] = field(default_factory=list)
    rounds_reward: list[int] = field(default_factory=list)
    rounds_remaining: list[float] = field(default_factory=list)
    chosen: Arm | None = None
    guards: list[GuardRecord] = field(default_factory=list)
    snapshots: list[dict] = field(default_factory=list)

    def record(self, t: int, arm: Arm, cost: float, reward: int, remaining: float):
        self.rounds_t.append(t)
        self.rounds_arm.append(arm)
        self.rounds_cost.append(cost)
        self.rounds_reward.append(reward)
        self.rounds_remaining.append(remaining)

    def __len__(self) -> int:
        return len(self.rounds_t)

    def total_cost(self) -> float:
        return float(sum(self.rounds_cost))

    def serialize(self, g: Admg) -> str:
        lines = [
            f"# policy={self.kind} seed={self.seed} budget={self.budget!r} "
            f"config={self.config_digest}",
            "t,arm,cost,reward,remaining",
        ]
        for t, arm, cost, reward, rem in zip(
            self.rounds_t, self.rounds_arm, self.rounds_cost,
            self.rounds_reward, self.rounds_remaining,
        ):
            lines.append(f"{t},{arm.label(g)},{cost!r},{reward},{rem!r}")
        if self.chosen is not None:
            lines.append(f"# chosen={self.chosen.label(g)}")
        return "\n".join(lines) + "\n"


def parse_trace(g: Admg, text: str) -> PolicyTrace:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = dict(part.split("=", 1) for part in lines[0][2:].split())
    trace = PolicyTrace(
        kind=head["policy"],
        seed=int(head["seed"]),
        budget=float(head["budget"]),
        config_digest=head["config"],
    )
    for ln in lines[2:]:
        if ln.startswith("# chosen="):
            trace.chosen = parse_arm_label(g, ln.split("=", 1)[1])
            continue
        t, arm, cost, reward, rem = ln.split(",")
        trace.record(int(t), parse_arm_label(g, arm), float(cost), int(reward), float(rem))
    return trace


# ---------------------------------------------------------------------------
# cumulative-regret UCB family
# ---------------------------------------------------------------------------


def _argmax_arm(arms, score) -> Arm:
    best = None
    best_val = -math.inf
    for a in arms:
        v = score(a)
        if v > best_val:
            best, best_val = a, v
    return best


def _cumulative_engine(
    scm: Scm,
    g: Admg,
    config: PolicyConfig,
    index_is_normalized: bool,
    beta_uses_unit_costs: bool,
) -> PolicyTrace:
    """Shared loop of the cumulative-regret family.

    ``index_is_normalized`` divides the exploitation index by the arm cost;
    ``beta_uses_unit_costs`` makes the reinvestment threshold track the plain
    reward leader instead of the reward-per-cost leader (the fully-observable
    baseline treats every cost as one in both places)."""
    arms = arms_for(g)
    costs = config.costs
    init_cost = sum(costs.of(a) for a in arms)
    if config.budget < init_cost:
        raise InsufficientBudget(
            f"budget {config.budget} cannot cover one pull of every arm ({init_cost})"
        )
    rng = np.random.default_rng(config.seed)
    state = RewardState(g, arms, seed=int(rng.integers(2 ** 63)))
    if state.skipped:
        log.warning(
            "%s: arms %s lack the identifiability condition; their estimates "
            "use interventional samples only",
            config.kind,
            [a.label(g) for a in state.skipped],
        )
    trace = PolicyTrace(config.kind, config.seed, config.budget, config.digest())

    cost_arr = np.array([costs.of(a) for a in arms])
    index_cost_arr = cost_arr if index_is_normalized else np.ones(len(arms))
    beta_cost_arr = np.ones(len(arms)) if beta_uses_unit_costs else cost_arr

    t = 0
    b_rem = float(config.budget)
    for arm in arms:
        t += 1
        values, reward = sample(scm, arm, rng)
        state.record(arm, values, reward)
        b_rem -= costs.of(arm)
        trace.record(t, arm, costs.of(arm), reward, b_rem)
    beta = 1.0
    min_interv = costs.interventional_min()
    while b_rem >= 1.0:
        t += 1
        obs_before = state.obs_n
        beta_before = beta
        rem_before = b_rem
        if obs_before < beta * beta * math.log(t) or b_rem < min_interv:
            arm = OBSERVE
            exploited = False
        else:
            mu = state.mu_array()
            upper = mu + np.sqrt(2.0 * math.log(t - 1) / state.effective_counts())
            index = upper / index_cost_arr
            index[cost_arr > b_rem] = -math.inf
            arm = arms[int(np.argmax(index))]  # first max: lowest arm wins ties
            exploited = True
        values, reward = sample(scm, arm, rng)
        state.record(arm, values, reward)
        mu = state.mu_array()
        tilde_ratio = float((mu / beta_cost_arr).max())
        mu0 = float(mu[0])
        if mu0 < tilde_ratio:
            beta = min(2.0 * math.sqrt(2.0) / (tilde_ratio - mu0), math.sqrt(math.log(t)))
        b_rem -= costs.of(arm)
        trace.record(t, arm, costs.of(arm), reward, b_rem)
        trace.guards.append(
            GuardRecord(t, obs_before, beta_before, rem_before, min_interv, exploited)
        )
        if config.snapshot_every and t % config.snapshot_every == 0:
            trace.snapshots.append(
                {
                    "t": t,
                    "arms": {
                        a.label(g): {
                            "mu_hat": state.mu_hat(a),
                            "ucb": state.ucb(a, t),
                            "effective_count": state.effective_count(a),
                        }
                        for a in arms
                    },
                }
            )
    return trace


def run_cumulative_ucb(scm: Scm, g: Admg, config: PolicyConfig) -> PolicyTrace:
    """Adaptive budgeted UCB on general graphs.

    Pulls every arm once, then alternates forced observation (while the
    observation count trails beta^2 log t, or nothing else is affordable)
    with pulling the best upper-confidence index among affordable arms.
    The index is cost-normalized by default; a config flag restores the
    unnormalized variant (the reinvestment threshold beta tracks the
    reward-per-cost leader either way).
    """
    return _cumulative_engine(
        scm, g, config,
        index_is_normalized=config.cost_normalized_index,
        beta_uses_unit_costs=False,
    )


def run_uniform_cost_causal_ucb(scm: Scm, g: Admg, config: PolicyConfig) -> PolicyTrace:
    """Comparison baseline: the cumulative policy with costs treated as one
    inside the index and the reinvestment threshold, while the budget is
    charged the true costs.  Scoped to fully observable graphs."""
    if g.bidirected:
        raise GraphHasHiddenConfounders(
            "the uniform-cost baseline assumes a graph without bidirected edges"
        )
    return _cumulative_engine(
        scm, g, config, index_is_normalized=False, beta_uses_unit_costs=True
    )


def run_budgeted_kube(scm: Scm, config: PolicyConfig) -> PolicyTrace:
    """Budgeted UCB baseline without causal sharing: each arm is estimated
    from its own pulls and the index is reward-per-cost."""
    g = scm.graph
    arms = arms_for(g)
    costs = config.costs
    init_cost = sum(costs.of(a) for a in arms)
    if config.budget < init_cost:
        raise InsufficientBudget(
            f"budget {config.budget} cannot cover one pull of every arm ({init_cost})"
        )
    rng = np.random.default_rng(config.seed)
    trace = PolicyTrace(config.kind, config.seed, config.budget, config.digest())
    n = {a: 0 for a in arms}
    s = {a: 0.0 for a in arms}
    t = 0
    b_rem = float(config.budget)
    for arm in arms:
        t += 1
        _, reward = sample(scm, arm, rng)
        n[arm] += 1
        s[arm] += 1.0 if reward == 1 else 0.0
        b_rem -= costs.of(arm)
        trace.record(t, arm, costs.of(arm), reward, b_rem)
    while b_rem >= 1.0:
        t += 1
        affordable = [a for a in arms if costs.of(a) <= b_rem]
        arm = _argmax_arm(
            affordable,
            lambda a: (s[a] / n[a] + math.sqrt(2.0 * math.log(t - 1) / n[a])) / costs.of(a),
        )
        _, reward = sample(scm, arm, rng)
        n[arm] += 1
        s[arm] += 1.0 if reward == 1 else 0.0
        b_rem -= costs.of(arm)
        trace.record(t, arm, costs.of(arm), reward, b_rem)
    return trace


# ---------------------------------------------------------------------------
# simple-regret family
# ---------------------------------------------------------------------------


def _conditional_means(obs: np.ndarray, rewards: np.ndarray, g: Admg) -> dict[Arm, float]:
    """Reward rate conditional on each (node, value); 1/2 when unobserved."""
    out: dict[Arm, float] = {}
    ok = rewards == 1
    for i in g.intervenable:
        for x in range(g.domains[i]):
            mask = obs[:, i] == x
            cnt = int(mask.sum())
            out[Arm.intervene(i, x)] = (
                float(ok[mask].sum()) / cnt if cnt else UNINFORMATIVE_MEAN
            )
    return out


def _observational_estimates(
    log: ObsLog, g: Admg, config: PolicyConfig, rng: np.random.Generator
) -> dict[Arm, float]:
    n_obs = len(log.observations())
    threshold = config.bn_threshold
    if threshold is None:
        threshold = max(1, int(math.isqrt(n_obs)))
    mu: dict[Arm, float] = {}
    for i in g.intervenable:
        for x in range(g.domains[i]):
            arm = Arm.intervene(i, x)
            if config.estimator_path == "factorized":
                strata = build_strata(log, g, i, x, rng)
                if strata.n_slices == 0:
                    mu[arm] = UNINFORMATIVE_MEAN
                else:
                    mu[arm] = estimate_mu_ix(log, strata, i, x)
            else:
                mu[arm] = estimate_mu_via_reduction(log, g, i, x, threshold)
    return mu


def _explore_allocation(
    candidates: list[Arm], costs: CostSet, budget: float, remaining: float
) -> dict[Arm, int]:
    """Equal pull counts from half the budget, with the leftover dealt
    round-robin in cost-ascending order while affordable."""
    total_cost = sum(costs.of(a) for a in candidates)
    base = int(budget // (2.0 * total_cost))
    alloc = {a: base for a in candidates}
    leftover = remaining - base * total_cost
    order = sorted(candidates, key=lambda a: (costs.of(a), a))
    while True:
        progressed = False
        for a in order:
            c = costs.of(a)
            if leftover >= c:
                alloc[a] += 1
                leftover -= c
                progressed = True
        if not progressed:
            break
    return alloc


def _simple_skeleton(
    scm: Scm,
    g: Admg,
    config: PolicyConfig,
    estimate_initial,
    select_candidates,
) -> PolicyTrace:
    """Common two-phase structure: observe half the budget, estimate, then
    either explore the selected arms with the other half or keep observing."""
    if config.budget < 2:
        raise InsufficientBudget("the two-phase policy needs budget at least two")
    arms = arms_for(g)
    costs = config.costs
    rng = np.random.default_rng(config.seed)
    budget = float(config.budget)
    trace = PolicyTrace(config.kind, config.seed, config.budget, config.digest())

    n_obs = int(budget // 2)
    obs_values, obs_rewards = sample_many(scm, OBSERVE, n_obs, rng)
    logbook = ObsLog(g, capacity=n_obs + 16)
    b_rem = budget
    for k in range(n_obs):
        logbook.append(k + 1, OBSERVE, obs_values[k], int(obs_rewards[k]))
        b_rem -= 1.0
        trace.record(k + 1, OBSERVE, 1.0, int(obs_rewards[k]), b_rem)
    t = n_obs

    mu: dict[Arm, float] = {OBSERVE: 2.0 * float((obs_rewards == 1).sum()) / budget}
    mu.update(estimate_initial(logbook, rng))
    candidates = select_candidates(logbook, mu)

    if not candidates:
        extra = int(b_rem)
        if extra > 0:
            more_values, more_rewards = sample_many(scm, OBSERVE, extra, rng)
            for k in range(extra):
                t += 1
                logbook.append(t, OBSERVE, more_values[k], int(more_rewards[k]))
                b_rem -= 1.0
                trace.record(t, OBSERVE, 1.0, int(more_rewards[k]), b_rem)
        mu[OBSERVE] = float((logbook.observation_rewards() == 1).sum()) / budget
        mu.update(estimate_initial(logbook, rng))
    else:
        alloc = _explore_allocation(candidates, costs, budget, b_rem)
        for arm in sorted(candidates):
            pulls = alloc[arm]
            if pulls == 0:
                continue
            values, rewards = sample_many(scm, arm, pulls, rng)
            for k in range(pulls):
                t += 1
                logbook.append(t, arm, values[k], int(rewards[k]))
                b_rem -= costs.of(arm)
                trace.record(t, arm, costs.of(arm), int(rewards[k]), b_rem)
            mu[arm] = float((rewards == 1).mean())

    trace.chosen = _argmax_arm(arms, lambda a: mu[a])
    return trace


def run_simple_budgeted(scm: Scm, g: Admg, config: PolicyConfig) -> PolicyTrace:
    """Two-phase best-arm policy on general graphs.

    Half the budget observes; reward estimates come from the observational
    pipeline and each arm's observation frequency is stratified by its
    extended parent set.  Arms whose frequency (raised to the c-component
    size) falls below the reciprocal cost-weighted threshold are explored
    with the second half, and the best estimate wins.
    """

    def estimate_initial(logbook, rng):
        return _observational_estimates(logbook, g, config, rng)

    def select_candidates(logbook, mu):
        profile = FrequencyProfile.from_log(
            logbook, g, config.budget, no_backdoor=config.no_backdoor_q
        )
        n_q = compute_n_of_q(profile, config.costs)
        return [
            arm
            for arm, q, k in zip(profile.arms, profile.q, profile.k)
            if q ** k <= 1.0 / n_q
        ]

    return _simple_skeleton(scm, g, config, estimate_initial, select_candidates)


def run_simple_nobackdoor(scm: Scm, g: Admg, config: PolicyConfig) -> PolicyTrace:
    """No-backdoor specialization: conditional means as reward estimates
    and the unstratified observation frequency with unit exponents."""
    if not is_no_backdoor(g):
        raise GraphNotNoBackdoor("an intervenable node has an open backdoor path")

    def estimate_initial(logbook, rng):
        return _conditional_means(logbook.observations(), logbook.observation_rewards(), g)

    def select_candidates(logbook, mu):
        profile = FrequencyProfile.from_log(logbook, g, config.budget, no_backdoor=True)
        n_q = compute_n_of_q(profile, config.costs)
        return [
            arm for arm, q in zip(profile.arms, profile.q) if q <= 1.0 / n_q
        ]

    return _simple_skeleton(scm, g, config, estimate_initial, select_candidates)


def run_gamma_nb(scm: Scm, g: Admg, config: PolicyConfig) -> PolicyTrace:
    """Baseline with the unweighted infrequency threshold.

    Identical skeleton to the no-backdoor policy, but an arm is explored when
    its raw frequency is below 1/m' with m' cost-free; requires a uniform
    interventional cost."""
    if not is_no_backdoor(g):
        raise GraphNotNoBackdoor("an intervenable node has an open backdoor path")
    interv_costs = {config.costs.of(a) for a in arms_for(g) if not a.is_observe}
    if len(interv_costs) > 1:
        raise NonUniformCost(f"baseline needs one interventional cost, got {sorted(interv_costs)}")

    def estimate_initial(logbook, rng):
        return _conditional_means(logbook.observations(), logbook.observation_rewards(), g)

    def select_candidates(logbook, mu):
        profile = FrequencyProfile.from_log(logbook, g, config.budget, no_backdoor=True)
        m_prime = compute_m_prime(profile)
        return [arm for arm, q in zip(profile.arms, profile.q) if q < 1.0 / m_prime]

    return _simple_skeleton(scm, g, config, estimate_initial, select_candidates)


def run_successive_rejects(scm: Scm, config: PolicyConfig) -> PolicyTrace:
    """Classic phased best-arm baseline, budget-adapted.

    The horizon is the budget divided by the mean arm cost; each phase pulls
    the survivors up to the schedule and drops the worst empirical mean.
    Pulls are charged their true cost and the run truncates when the next
    pull is unaffordable."""
    g = scm.graph
    arms = arms_for(g)
    costs = config.costs
    k_arms = len(arms)
    if k_arms < 2:
        raise ValueError("need at least two arms")
    mean_cost = sum(costs.of(a) for a in arms) / k_arms
    horizon = int(config.budget // mean_cost)
    if horizon <= k_arms:
        raise InsufficientBudget(
            f"budget {config.budget} gives horizon {horizon} <= number of arms {k_arms}"
        )
    log_bar = 0.5 + sum(1.0 / i for i in range(2, k_arms + 1))
    rng = np.random.default_rng(config.seed)
    trace = PolicyTrace(config.kind, config.seed, config.budget, config.digest())
    survivors = list(arms)
    n = {a: 0 for a in arms}
    s = {a: 0.0 for a in arms}
    b_rem = float(config.budget)
    t = 0
    prev_quota = 0
    exhausted = False
    for phase in range(1, k_arms):
        quota = math.ceil((horizon - k_arms) / (log_bar * (k_arms + 1 - phase)))
        pulls_each = max(0, quota - prev_quota)
        prev_quota = max(prev_quota, quota)
        for arm in survivors:
            for _ in range(pulls_each):
                if costs.of(arm) > b_rem:
                    exhausted = True
                    break
                t += 1
                _, reward = sample(scm, arm, rng)
                n[arm] += 1
                s[arm] += 1.0 if reward == 1 else 0.0
                b_rem -= costs.of(arm)
                trace.record(t, arm, costs.of(arm), reward, b_rem)
            if exhausted:
                break
        if exhausted:
            break
        worst = None
        worst_val = math.inf
        for arm in survivors:
            val = s[arm] / n[arm] if n[arm] else -math.inf
            if val < worst_val:
                worst, worst_val = arm, val
        survivors.remove(worst)
    trace.chosen = _argmax_arm(
        survivors, lambda a: s[a] / n[a] if n[a] else -math.inf
    )
    return trace


POLICY_RUNNERS = {
    "cumulative-ucb": run_cumulative_ucb,
    "uniform-cost-ucb": run_uniform_cost_causal_ucb,
    "budgeted-kube": lambda scm, g, config: run_budgeted_kube(scm, config),
    "simple-budgeted": run_simple_budgeted,
    "simple-nobackdoor": run_simple_nobackdoor,
    "gamma-nb": run_gamma_nb,
    "successive-rejects": lambda scm, g, config: run_successive_rejects(scm, config),
}


def run_policy(scm: Scm, g: Admg, config: PolicyConfig) -> PolicyTrace:
    if config.kind not in POLICY_RUNNERS:
        raise ValueError(f"unknown policy kind {config.kind!r}")
    return POLICY_RUNNERS[config.kind](scm, g, config)
