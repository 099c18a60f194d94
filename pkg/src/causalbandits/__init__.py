"""Budgeted multi-armed bandits on causal graphs with hidden confounders."""

__version__ = "0.1.0"

from .admg import (  # noqa: F401
    Admg,
    c_components,
    descendants,
    effective_parents,
    example_graph,
    extended_parents,
    has_unblocked_backdoor,
    identifiable_sufficient,
    latent_project,
    load_graph,
    reduce_to_target_subgraph,
)
from .scm import (  # noqa: F401
    OBSERVE,
    Arm,
    CostSet,
    Scm,
    arms_for,
    load_model,
    make_parallel_model,
    make_xor_model,
    optimal_value,
    oracle_means,
    sample,
    sample_many,
)
from .estimators import (  # noqa: F401
    BayesNet,
    FrequencyProfile,
    ObsLog,
    build_strata,
    compute_m_prime,
    compute_n_of_q,
    estimate_mu_ix,
    estimate_mu_via_reduction,
    estimate_q_hat,
    factorized_stratum_estimate,
    learn_bayes_net,
    mu_from_bayes_net,
    ucb_index,
    update_mu0,
)
from .policies import (  # noqa: F401
    PolicyConfig,
    PolicyTrace,
    run_budgeted_kube,
    run_cumulative_ucb,
    run_gamma_nb,
    run_policy,
    run_simple_budgeted,
    run_simple_nobackdoor,
    run_successive_rejects,
    run_uniform_cost_causal_ucb,
)
from .harness import (  # noqa: F401
    ExperimentConfig,
    RegretReport,
    load_config,
    run_sweep,
    run_trial,
    write_report,
)
