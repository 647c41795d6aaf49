"""Thompson sampling with mixture priors for linear bandits and tabular MDPs.

The package implements the mixture-prior sampling agent (sample a latent
component, sample parameters from that component's conjugate posterior, act
greedily, reweight components by posterior predictive likelihood), together
with baselines, closed-form regret-bound evaluators, latent-state
diagnostics, an offline GMM prior-fitting pipeline, and a deterministic
experiment harness with a CSV contract.
"""

from .baselines import (
    CorralExp4Agent,
    Exp4Agent,
    Exp4State,
    exp4_action_distribution,
    exp4_defaults,
    exp4_init,
    exp4_step,
    psrl_agent,
    unimodal_ts_agent,
)
from .bounds import (
    BoundInputsLinear,
    BoundInputsMDP,
    theorem1_bound,
    theorem2_bound,
)
from .diagnostics import (
    MDP_ETA,
    LatentDiagnostics,
    bandit_eta,
    confidence_set,
    record_bandit_round,
    record_mdp_episode,
)
from .envs import (
    FeatureBanditEnv,
    FeatureTable,
    SyntheticLinearInstance,
    draw_mdp_instance,
    feature_file_env,
    load_feature_file,
    synthesize_feature_table,
    synthetic_component_means,
    synthetic_linear_env,
    write_feature_file,
)
from .errors import ConfigError, DegenerateWeightsError, NumericalError
from .harness import (
    AggregateRow,
    ExperimentConfig,
    RegretRecord,
    aggregate,
    config_from_dict,
    csv_rows,
    load_config,
    read_csv,
    run_experiment,
    run_to_csv,
    write_csv,
)
from .linear import (
    ActionSet,
    GaussianMixturePrior,
    LinearMixturePosterior,
    MixtureTSAgent,
    confidence_width,
    posterior_init,
    posterior_update,
    predictive_loglik,
    sample_model,
    select_action,
)
from .mixture import (
    MixtureWeights,
    RngStream,
    derive_stream_id,
    normalize,
    sample_categorical,
)
from .priors import (
    GMMConfig,
    GMMFit,
    OfflineDataset,
    build_mixture_prior,
    fit_gmm,
    fit_linear_model,
    load_prior,
    save_prior,
)
from .tabular import (
    MDPMixturePosterior,
    MDPMixturePrior,
    MixtureTSMDPAgent,
    Policy,
    TabularMDP,
    mdp_confidence_widths,
    mdp_posterior_init,
    plan,
    policy_value,
    posterior_update_step,
    riverswim_prior,
    sample_mdp,
)

__version__ = "0.1.0"

__all__ = [
    "ActionSet",
    "AggregateRow",
    "BoundInputsLinear",
    "BoundInputsMDP",
    "ConfigError",
    "CorralExp4Agent",
    "DegenerateWeightsError",
    "Exp4Agent",
    "Exp4State",
    "ExperimentConfig",
    "FeatureBanditEnv",
    "FeatureTable",
    "GMMConfig",
    "GMMFit",
    "GaussianMixturePrior",
    "LatentDiagnostics",
    "LinearMixturePosterior",
    "MDPMixturePosterior",
    "MDPMixturePrior",
    "MDP_ETA",
    "MixtureTSAgent",
    "MixtureTSMDPAgent",
    "MixtureWeights",
    "NumericalError",
    "OfflineDataset",
    "Policy",
    "RegretRecord",
    "RngStream",
    "SyntheticLinearInstance",
    "TabularMDP",
    "aggregate",
    "bandit_eta",
    "build_mixture_prior",
    "confidence_set",
    "confidence_width",
    "config_from_dict",
    "csv_rows",
    "derive_stream_id",
    "draw_mdp_instance",
    "exp4_action_distribution",
    "exp4_defaults",
    "exp4_init",
    "exp4_step",
    "feature_file_env",
    "fit_gmm",
    "fit_linear_model",
    "load_config",
    "load_feature_file",
    "load_prior",
    "mdp_confidence_widths",
    "mdp_posterior_init",
    "normalize",
    "plan",
    "policy_value",
    "posterior_init",
    "posterior_update",
    "posterior_update_step",
    "predictive_loglik",
    "psrl_agent",
    "read_csv",
    "record_bandit_round",
    "record_mdp_episode",
    "riverswim_prior",
    "run_experiment",
    "run_to_csv",
    "sample_categorical",
    "sample_mdp",
    "sample_model",
    "save_prior",
    "select_action",
    "synthesize_feature_table",
    "synthetic_component_means",
    "synthetic_linear_env",
    "theorem1_bound",
    "theorem2_bound",
    "unimodal_ts_agent",
    "write_csv",
    "write_feature_file",
]
