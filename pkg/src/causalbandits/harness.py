"""Reproducible experiment runner.

A declarative :class:`ExperimentConfig` names a model (generator or file),
a list of policies, a cost rule, one sweep axis (budgets at fixed costs, or
a uniform interventional cost at fixed budget) and a trial count.  The
runner executes every (sweep point, trial, policy) cell with seeds derived
from the base seed, scores each run against the exact oracle, and writes a
CSV of means and standard errors plus a JSON sidecar with the full context.

Seed pairing: the model and the drawn costs depend only on the trial index,
and the policy stream only on (point, trial), so at every sweep point all
policies face the identical environment.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import math
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .admg import Admg, example_graph, load_graph
from .errors import ConfigInvalid, NonIntegerCosts, ParseError
from .policies import PolicyConfig, PolicyTrace, run_policy
from .scm import (
    Arm,
    CostSet,
    Scm,
    arms_for,
    load_model,
    make_parallel_model,
    make_xor_model,
    optimal_value,
    oracle_means,
    ratio_best_arm,
    reward_best_arm,
)


def _derive_seed(*parts: int) -> int:
    ss = np.random.SeedSequence(list(parts))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """Where the environment comes from: a generator or a model file."""

    kind: str  # parallel | xor | file
    n: int | None = None
    p: tuple[float, ...] | None = None
    eps: float = 0.3
    graph: str | None = None  # xor: named example graph or a graph file path
    path: str | None = None  # file models
    base_dir: str | None = None

    def resolve_graph(self) -> Admg:
        if self.graph is None:
            raise ConfigInvalid("generator needs a 'graph' entry")
        try:
            return example_graph(self.graph)
        except ValueError:
            pass
        path = Path(self.graph)
        if self.base_dir and not path.is_absolute():
            path = Path(self.base_dir) / path
        if not path.exists():
            raise ConfigInvalid(f"graph {self.graph!r} is neither a known name nor a file")
        return load_graph(path)

    @property
    def redraws_per_trial(self) -> bool:
        return self.kind == "xor"

    def build(self, seed: int) -> Scm:
        if self.kind == "parallel":
            if self.n is None:
                raise ConfigInvalid("parallel generator needs 'n'")
            return make_parallel_model(self.n, list(self.p) if self.p else None, self.eps)
        if self.kind == "xor":
            return make_xor_model(self.resolve_graph(), np.random.default_rng(seed))
        if self.kind == "file":
            if self.path is None:
                raise ConfigInvalid("file model needs 'path'")
            path = Path(self.path)
            if self.base_dir and not path.is_absolute():
                path = Path(self.base_dir) / path
            return load_model(path)
        raise ConfigInvalid(f"unknown model kind {self.kind!r}")


@dataclass(frozen=True)
class CostSpec:
    """How interventional costs are assigned (the observational cost is one)."""

    kind: str  # uniform | random_choice | explicit
    c: float | None = None
    values: tuple[float, ...] | None = None
    per_arm: tuple[tuple[str, float], ...] | None = None

    def realize(self, g: Admg, seed: int) -> CostSet:
        arms = arms_for(g)
        if self.kind == "uniform":
            if self.c is None:
                raise ConfigInvalid("uniform costs need 'c'")
            return CostSet.uniform(g, self.c)
        if self.kind == "random_choice":
            if not self.values:
                raise ConfigInvalid("random_choice costs need 'values'")
            rng = np.random.default_rng(seed)
            draws = rng.choice(len(self.values), size=len(arms))
            mapping = {}
            for arm, d in zip(arms, draws):
                mapping[arm] = 1.0 if arm.is_observe else float(self.values[int(d)])
            return CostSet.from_mapping(mapping)
        if self.kind == "explicit":
            if not self.per_arm:
                raise ConfigInvalid("explicit costs need 'per_arm'")
            from .scm import parse_arm_label

            mapping = {parse_arm_label(g, lbl): float(c) for lbl, c in self.per_arm}
            missing = [a for a in arms if a not in mapping and not a.is_observe]
            if missing:
                raise ConfigInvalid(f"explicit costs missing arms {missing}")
            return CostSet.from_mapping(mapping)
        raise ConfigInvalid(f"unknown cost kind {self.kind!r}")


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    name: str | None = None
    cost_normalized_index: bool = True
    no_backdoor_q: bool = False
    estimator_path: str = "bayes-net"
    bn_threshold: int | None = None

    @property
    def label(self) -> str:
        return self.name or self.kind

    def to_config(self, budget: float, costs: CostSet, seed: int) -> PolicyConfig:
        return PolicyConfig(
            kind=self.kind,
            budget=budget,
            costs=costs,
            seed=seed,
            cost_normalized_index=self.cost_normalized_index,
            no_backdoor_q=self.no_backdoor_q,
            estimator_path=self.estimator_path,
            bn_threshold=self.bn_threshold,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    policies: tuple[PolicySpec, ...]
    costs: CostSpec
    trials: int
    base_seed: int
    budgets: tuple[float, ...] | None = None
    cost_sweep: tuple[float, ...] | None = None
    fixed_budget: float | None = None
    regret: str = "both"  # simple | cumulative | both
    output: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigInvalid("trials must be at least one")
        if (self.budgets is None) == (self.cost_sweep is None):
            raise ConfigInvalid("exactly one sweep axis required: budgets xor cost_sweep")
        if self.cost_sweep is not None and self.fixed_budget is None:
            raise ConfigInvalid("a cost sweep needs 'budget' for the fixed budget")
        if self.regret not in ("simple", "cumulative", "both"):
            raise ConfigInvalid(f"unknown regret kind {self.regret!r}")
        if not self.policies:
            raise ConfigInvalid("at least one policy required")
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ConfigInvalid("policy labels must be unique")

    @property
    def sweep_axis(self) -> str:
        return "budget" if self.budgets is not None else "cost"

    @property
    def sweep_values(self) -> tuple[float, ...]:
        return self.budgets if self.budgets is not None else self.cost_sweep


def config_from_dict(data: dict, base_dir: str | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigInvalid("config must be a mapping")
    try:
        model_raw = dict(data["model"])
        kind = model_raw.pop("kind", None)
        if kind is None:
            if "path" in model_raw:
                kind = "file"
            else:
                raise ConfigInvalid("model needs 'kind'")
        p = model_raw.pop("p", None)
        model = ModelSpec(
            kind=kind,
            n=model_raw.pop("n", None),
            p=tuple(p) if p is not None else None,
            eps=model_raw.pop("eps", 0.3),
            graph=model_raw.pop("graph", None),
            path=model_raw.pop("path", None),
            base_dir=base_dir,
        )
        if model_raw:
            raise ConfigInvalid(f"unknown model entries {sorted(model_raw)}")

        policies = []
        for entry in data["policies"]:
            entry = dict(entry)
            policies.append(
                PolicySpec(
                    kind=entry.pop("kind"),
                    name=entry.pop("name", None),
                    cost_normalized_index=entry.pop("cost_normalized_index", True),
                    no_backdoor_q=entry.pop("no_backdoor_q", False),
                    estimator_path=entry.pop("estimator_path", "bayes-net"),
                    bn_threshold=entry.pop("bn_threshold", None),
                )
            )
            if entry:
                raise ConfigInvalid(f"unknown policy entries {sorted(entry)}")

        cost_raw = dict(data.get("costs", {"kind": "uniform", "c": 1}))
        costs = CostSpec(
            kind=cost_raw.pop("kind"),
            c=cost_raw.pop("c", None),
            values=tuple(cost_raw["values"]) if "values" in cost_raw else None,
            per_arm=tuple(
                (str(k), float(v)) for k, v in cost_raw["per_arm"].items()
            )
            if "per_arm" in cost_raw
            else None,
        )
        cost_raw.pop("values", None)
        cost_raw.pop("per_arm", None)
        cost_raw.pop("seed", None)  # cost draws derive from the base seed
        if cost_raw:
            raise ConfigInvalid(f"unknown cost entries {sorted(cost_raw)}")

        budgets = data.get("budgets")
        cost_sweep = data.get("cost_sweep")
        return ExperimentConfig(
            model=model,
            policies=tuple(policies),
            costs=costs,
            trials=int(data.get("trials", 1)),
            base_seed=int(data.get("base_seed", 0)),
            budgets=tuple(float(b) for b in budgets) if budgets is not None else None,
            cost_sweep=tuple(float(c) for c in cost_sweep) if cost_sweep is not None else None,
            fixed_budget=float(data["budget"]) if "budget" in data else None,
            regret=data.get("regret", "both"),
            output=data.get("output"),
            jobs=int(data.get("jobs", 1)),
        )
    except KeyError as exc:
        raise ConfigInvalid(f"missing config entry {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
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
    return config_from_dict(data, base_dir=str(path.parent))


# ---------------------------------------------------------------------------
# trials and sweeps
# ---------------------------------------------------------------------------


def _check_integer_costs(costs: CostSet) -> None:
    for arm, c in costs.costs:
        if abs(c - round(c)) > 1e-9:
            raise NonIntegerCosts(f"harness requires integer costs, got {c} for {arm}")


def run_trial(
    scm: Scm,
    g: Admg,
    policy_config: PolicyConfig,
    seed: int | None = None,
    means: dict[Arm, float] | None = None,
) -> tuple[PolicyTrace, float | None, float]:
    """Run one policy once and score it against the exact oracle.

    Returns (trace, simple regret or None, cumulative regret), both regrets
    in expectation: the simple regret compares oracle means of the best and
    the chosen arm, the cumulative regret compares the knapsack optimum with
    the sum of oracle means of the pulled arms.
    """
    if seed is not None:
        policy_config = replace(policy_config, seed=seed)
    _check_integer_costs(policy_config.costs)
    if means is None:
        means = oracle_means(scm)
    trace = run_policy(scm, g, policy_config)
    simple = None
    if trace.chosen is not None:
        best = reward_best_arm(means)
        simple = means[best] - means[trace.chosen]
    rstar = optimal_value(means, policy_config.costs, policy_config.budget)
    gained = math.fsum(means[a] for a in trace.rounds_arm)
    cumulative = rstar - gained
    return trace, simple, cumulative


@dataclass
class ReportCell:
    policy: str
    sweep_value: float
    regret_kind: str
    trials: int
    mean: float
    stderr: float


@dataclass
class RegretReport:
    sweep_axis: str
    cells: list[ReportCell]
    oracle: dict
    config_echo: dict
    version: str
    wallclock_seconds: float

    def cell(self, policy: str, sweep_value: float, kind: str) -> ReportCell:
        for c in self.cells:
            if (
                c.policy == policy
                and c.regret_kind == kind
                and math.isclose(c.sweep_value, sweep_value)
            ):
                return c
        raise KeyError((policy, sweep_value, kind))


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _point_environment(config: ExperimentConfig, point_idx: int, trial: int):
    """Model, costs and oracle means shared by every policy of one cell."""
    model_seed = _derive_seed(config.base_seed, 1, trial)
    scm = config.model.build(model_seed)
    g = scm.graph
    if config.sweep_axis == "budget":
        cost_seed = _derive_seed(config.base_seed, 2, trial)
        costs = config.costs.realize(g, cost_seed)
        budget = config.sweep_values[point_idx]
    else:
        costs = CostSet.uniform(g, config.sweep_values[point_idx])
        budget = config.fixed_budget
    means = oracle_means(scm)
    return scm, g, costs, budget, means


def _run_cell(config: ExperimentConfig, point_idx: int, trial: int) -> dict:
    scm, g, costs, budget, means = _point_environment(config, point_idx, trial)
    run_seed = _derive_seed(config.base_seed, 3, point_idx, trial)
    out = {}
    for spec in config.policies:
        pc = spec.to_config(budget, costs, run_seed)
        _, simple, cumulative = run_trial(scm, g, pc, means=means)
        out[spec.label] = (simple, cumulative)
    return out


def run_sweep(config: ExperimentConfig) -> RegretReport:
    """Execute the full sweep and aggregate mean regrets with standard errors."""
    start = time.monotonic()
    points = list(range(len(config.sweep_values)))
    results: dict[tuple[int, int], dict] = {}
    tasks = [(p, t) for p in points for t in range(config.trials)]
    if config.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = {
                pool.submit(_run_cell, config, p, t): (p, t) for p, t in tasks
            }
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()
    else:
        for p, t in tasks:
            results[(p, t)] = _run_cell(config, p, t)

    kinds = ["simple", "cumulative"] if config.regret == "both" else [config.regret]
    cells: list[ReportCell] = []
    for spec in config.policies:
        for kind in kinds:
            for p in points:
                vals = []
                for t in range(config.trials):
                    simple, cumulative = results[(p, t)][spec.label]
                    v = simple if kind == "simple" else cumulative
                    if v is None:
                        raise ConfigInvalid(
                            f"policy {spec.label!r} returns no chosen arm; "
                            "it cannot be scored on simple regret"
                        )
                    vals.append(v)
                mean, stderr = _mean_stderr(vals)
                cells.append(
                    ReportCell(
                        policy=spec.label,
                        sweep_value=float(config.sweep_values[p]),
                        regret_kind=kind,
                        trials=config.trials,
                        mean=mean,
                        stderr=stderr,
                    )
                )

    scm, g, costs, budget, means = _point_environment(config, 0, 0)
    best_ratio = ratio_best_arm(means, costs)
    deltas = {
        a.label(g): means[best_ratio] / costs.of(best_ratio) - means[a] / costs.of(a)
        for a in sorted(means)
    }
    if config.sweep_axis == "budget":
        rstar = {f"{b:g}": optimal_value(means, costs, b) for b in config.sweep_values}
    else:
        rstar = {f"{budget:g}": optimal_value(means, costs, budget)}
    oracle = {
        "means": {a.label(g): means[a] for a in sorted(means)},
        "ratio_best_arm": best_ratio.label(g),
        "reward_best_arm": reward_best_arm(means).label(g),
        "delta": deltas,
        "rstar": rstar,
        "note": "computed from the trial-0 model and costs at the first sweep point",
    }
    return RegretReport(
        sweep_axis=config.sweep_axis,
        cells=cells,
        oracle=oracle,
        config_echo=_echo(config),
        version=f"causalbandits {__version__}",
        wallclock_seconds=time.monotonic() - start,
    )


def _echo(config: ExperimentConfig) -> dict:
    def plain(obj):
        if hasattr(obj, "__dict__"):
            return {k: plain(v) for k, v in obj.__dict__.items()}
        if isinstance(obj, (list, tuple)):
            return [plain(v) for v in obj]
        return obj

    return plain(config)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

CSV_COLUMNS = ["policy", "sweep_axis", "sweep_value", "trials", "mean_regret", "stderr", "regret_kind"]


def report_csv_text(report: RegretReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for c in sorted(
        report.cells, key=lambda c: (c.policy, c.regret_kind, c.sweep_value)
    ):
        writer.writerow(
            [c.policy, report.sweep_axis, repr(c.sweep_value), c.trials,
             repr(c.mean), repr(c.stderr), c.regret_kind]
        )
    return buf.getvalue()


def write_report(report: RegretReport, path) -> tuple[Path, Path]:
    """Write the CSV (byte-stable given identical inputs) and a JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    csv_path = path.with_suffix(".csv")
    json_path = path.with_suffix(".json")
    csv_path.write_text(report_csv_text(report))
    sidecar = {
        "config": report.config_echo,
        "oracle": report.oracle,
        "version": report.version,
        "wallclock_seconds": report.wallclock_seconds,
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def read_report_csv(path) -> RegretReport:
    """Parse a report CSV back into its representable fields."""
    cells = []
    axis = "budget"
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            axis = row["sweep_axis"]
            cells.append(
                ReportCell(
                    policy=row["policy"],
                    sweep_value=float(row["sweep_value"]),
                    regret_kind=row["regret_kind"],
                    trials=int(row["trials"]),
                    mean=float(row["mean_regret"]),
                    stderr=float(row["stderr"]),
                )
            )
    return RegretReport(
        sweep_axis=axis,
        cells=cells,
        oracle={},
        config_echo={},
        version="",
        wallclock_seconds=0.0,
    )
