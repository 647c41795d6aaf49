"""Experiment harness: replication management, regret accounting, CSV emission.

Configs are JSON objects with the shape::

    {
      "setting": "linear" | "mdp",
      "env": {"kind": "synthetic", "d": 10, "L": 10, "sigma0": 0.1, "sigma": 0.1}
           | {"kind": "features", "path": "emb.csv", "k_actions": 10,
              "reward_hi": 0.9, "reward_lo": 0.1, "sigma": 0.5, "prior": "p.json"}
           | {"kind": "riverswim", "num_states": 10, "horizon": 20, "scale": 10.0},
      "agents": [{"kind": "mix-ts"}, {"kind": "psrl", "label": "psrl"}],
      "n": 1000, "reps": 200, "seed": 7,
      "sweep": {"param": "sigma0", "values": [0.01, 0.05]},   # optional
      "out": "records.csv", "diagnostics": false,
      "emit_reward": false, "workers": 1
    }

Seeds: every replication derives independent streams from
(seed, sweep index, replication index, purpose/agent tag), so the same
replication faces the same environment draw across compared agents and
output bytes do not depend on the worker count.

CSV schema: header `sweep,rep,agent,t,inst_regret,cum_regret` plus optional
`inst_reward,cum_reward` and optional `G_0..G_{L-1},in_C` groups; floats with
17 significant digits; LF line endings.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .baselines import CorralExp4Agent, Exp4Agent, psrl_agent, unimodal_ts_agent
from .diagnostics import (
    LatentDiagnostics,
    confidence_set,
    record_bandit_round,
    record_mdp_episode,
)
from .envs import (
    FeatureBanditEnv,
    draw_mdp_instance,
    load_feature_file,
    synthetic_linear_env,
)
from .errors import ConfigError
from .linear import MixtureTSAgent, confidence_width
from .mixture import RngStream, derive_stream_id
from .priors import load_prior
from .tabular import (
    MixtureTSMDPAgent,
    TabularMDP,
    mdp_confidence_widths,
    plan,
    policy_value,
    riverswim_prior,
)

LINEAR_AGENT_KINDS = ("mix-ts", "ts", "uni-ts", "exp4", "corral-exp4", "oracle")
MDP_AGENT_KINDS = ("mix-ts", "psrl")
SWEEP_PARAMS = ("sigma0", "L")

_CONFIG_KEYS = {
    "setting",
    "env",
    "agents",
    "n",
    "reps",
    "seed",
    "sweep",
    "out",
    "diagnostics",
    "emit_reward",
    "workers",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, immutable description of one experiment."""

    setting: str
    env: tuple
    agents: tuple
    n: int
    reps: int
    seed: int
    sweep_param: str | None = None
    sweep_values: tuple = ()
    out: str | None = None
    diagnostics: bool = False
    emit_reward: bool = False
    workers: int = 1

    def env_dict(self) -> dict:
        return dict(self.env)

    def agent_dicts(self) -> list[dict]:
        return [dict(a) for a in self.agents]

    @property
    def num_sweeps(self) -> int:
        return max(1, len(self.sweep_values))


@dataclass(frozen=True, slots=True)
class RegretRecord:
    """One (sweep, replication, agent, round) regret row."""

    sweep: float
    rep: int
    agent: str
    t: int
    inst_regret: float
    cum_regret: float
    inst_reward: float | None = None
    cum_reward: float | None = None
    G: tuple | None = None
    in_C: int | None = None


@dataclass(frozen=True)
class AggregateRow:
    sweep: float
    agent: str
    t: int
    mean: float
    stderr: float
    reps: int


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a raw config mapping and freeze it."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("setting", "env", "agents", "n", "reps", "seed"):
        if key not in raw:
            raise ConfigError(f"config is missing required key '{key}'")
    setting = raw["setting"]
    if setting not in ("linear", "mdp"):
        raise ConfigError("setting must be 'linear' or 'mdp'")
    env = raw["env"]
    if not isinstance(env, dict) or "kind" not in env:
        raise ConfigError("env must be an object with a 'kind'")
    agents = raw["agents"]
    if not isinstance(agents, list) or not agents:
        raise ConfigError("agents must be a nonempty list")
    n = int(raw["n"])
    reps = int(raw["reps"])
    if n < 1 or reps < 1:
        raise ConfigError("n and reps must be at least 1")
    seed = int(raw["seed"])
    sweep = raw.get("sweep")
    sweep_param, sweep_values = None, ()
    if sweep is not None:
        if not isinstance(sweep, dict) or "param" not in sweep or "values" not in sweep:
            raise ConfigError("sweep must carry 'param' and 'values'")
        sweep_param = sweep["param"]
        values = sweep["values"]
        if sweep_param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep param must be one of {SWEEP_PARAMS}")
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep values must be a nonempty list")
        if sweep_param == "sigma0" and any(v <= 0 for v in values):
            raise ConfigError("sigma0 sweep values must be positive")
        if sweep_param == "L" and any(int(v) != v or v < 1 for v in values):
            raise ConfigError("L sweep values must be positive integers")
        sweep_values = tuple(float(v) for v in values)
    workers = int(raw.get("workers", 1))
    if workers < 0:
        raise ConfigError("workers must be nonnegative")
    cfg = ExperimentConfig(
        setting=setting,
        env=tuple(sorted(env.items())),
        agents=tuple(tuple(sorted(a.items())) for a in agents),
        n=n,
        reps=reps,
        seed=seed,
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        out=raw.get("out"),
        diagnostics=bool(raw.get("diagnostics", False)),
        emit_reward=bool(raw.get("emit_reward", False)),
        workers=max(workers, 1),
    )
    _validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


def _validate(cfg: ExperimentConfig) -> None:
    env = cfg.env_dict()
    kind = env.get("kind")
    agent_specs = cfg.agent_dicts()
    labels = [spec.get("label", spec.get("kind")) for spec in agent_specs]
    if len(set(labels)) != len(labels):
        raise ConfigError("agent labels must be unique")
    for spec in agent_specs:
        if "kind" not in spec:
            raise ConfigError("every agent needs a 'kind'")
    if cfg.setting == "linear":
        if kind not in ("synthetic", "features"):
            raise ConfigError("linear env kind must be 'synthetic' or 'features'")
        for spec in agent_specs:
            if spec["kind"] not in LINEAR_AGENT_KINDS:
                raise ConfigError(f"unknown linear agent kind '{spec['kind']}'")
        if kind == "synthetic":
            d, L = int(env.get("d", 0)), int(env.get("L", 0))
            if d < 1 or L < 1 or L > d:
                raise ConfigError("synthetic env needs 1 <= L <= d")
            if cfg.sweep_param == "L" and any(v > d for v in cfg.sweep_values):
                raise ConfigError("L sweep values must not exceed d")
            if float(env.get("sigma", 0.0)) <= 0:
                raise ConfigError("synthetic env needs sigma > 0")
            if cfg.sweep_param != "sigma0" and float(env.get("sigma0", -1.0)) < 0:
                raise ConfigError("synthetic env needs sigma0 >= 0")
        else:
            if cfg.sweep_param is not None:
                raise ConfigError("sweeps apply only to the synthetic environment")
            if "path" not in env:
                raise ConfigError("features env needs a 'path'")
            for spec in agent_specs:
                if spec["kind"] in ("mix-ts", "uni-ts", "exp4", "corral-exp4"):
                    if "prior" not in spec and "prior" not in env:
                        raise ConfigError(
                            f"agent '{spec['kind']}' needs a prior file in the features env"
                        )
    else:
        if kind != "riverswim":
            raise ConfigError("mdp env kind must be 'riverswim'")
        if cfg.sweep_param is not None:
            raise ConfigError("sweeps apply only to the synthetic environment")
        for spec in agent_specs:
            if spec["kind"] not in MDP_AGENT_KINDS:
                raise ConfigError(f"unknown mdp agent kind '{spec['kind']}'")
    if cfg.diagnostics:
        allowed = {"mix-ts", "ts", "uni-ts"} if cfg.setting == "linear" else set(MDP_AGENT_KINDS)
        for spec in agent_specs:
            if spec["kind"] not in allowed:
                raise ConfigError(
                    f"diagnostics requires posterior-tracking agents; '{spec['kind']}' is not"
                )
        # the G_0..G_{L-1} columns are fixed per file, so every task must
        # produce the same component count
        if cfg.sweep_param == "L":
            raise ConfigError("diagnostics columns cannot vary with an L sweep")
        counts = set()
        for spec in agent_specs:
            if spec["kind"] in ("ts", "uni-ts"):
                counts.add(1)
            elif spec["kind"] == "psrl":
                counts.add(1)
            elif spec["kind"] == "mix-ts":
                if cfg.setting == "mdp":
                    counts.add(2)
                elif kind == "synthetic" and "prior" not in spec:
                    counts.add(int(env.get("L", 0)))
        if len(counts) > 1:
            raise ConfigError(
                "diagnostics requires agents that share one component count"
            )


def _sweep_env(cfg: ExperimentConfig, sweep_index: int) -> tuple[float, dict]:
    """Sweep column value and the env dict with the sweep applied."""
    env = cfg.env_dict()
    if not cfg.sweep_values:
        return 0.0, env
    value = cfg.sweep_values[sweep_index]
    if cfg.sweep_param == "L":
        env["L"] = int(value)
    else:
        env[cfg.sweep_param] = value
    return value, env


class _OracleAgent:
    """Plays the true-mean-optimal action; for harness tests."""

    def __init__(self, instance):
        self.instance = instance
        self.t = 0

    def act(self, actions) -> int:
        del actions
        idx = int(np.argmax(self.instance.true_means(self.t)))
        self.t += 1
        return idx

    def observe(self, action_index, action, reward) -> None:
        pass


def _build_linear_agent(spec: dict, cfg: ExperimentConfig, env: dict, instance, rng):
    kind = spec["kind"]
    num_actions = instance.num_actions if hasattr(instance, "num_actions") else None
    if num_actions is None:
        num_actions = int(env.get("k_actions", 10))
    # Bernoulli rewards have sd <= 1/2; that is the default model sd here
    sigma = float(env.get("sigma", 0.5))

    def spec_prior():
        path = spec.get("prior", env.get("prior"))
        if path is None:
            return instance.agent_prior()
        prior = load_prior(path)
        d = instance.round_actions(0).shape[1]
        if prior.dim != d:
            raise ConfigError(f"prior dimension {prior.dim} does not match features ({d})")
        return prior

    if kind == "mix-ts":
        return MixtureTSAgent(spec_prior(), rng)
    if kind == "ts":
        d = instance.round_actions(0).shape[1]
        return unimodal_ts_agent(np.zeros(d), np.eye(d), sigma, rng)
    if kind == "uni-ts":
        prior = spec_prior()
        if prior.num_components != 1:
            raise ConfigError("uni-ts needs a single-component prior file")
        return unimodal_ts_agent(prior.means[0], prior.covs[0], prior.sigma, rng)
    if kind == "exp4":
        return Exp4Agent(
            spec_prior().means,
            cfg.n,
            num_actions,
            rng,
            learning_rate=spec.get("learning_rate"),
            gamma=spec.get("gamma"),
        )
    if kind == "corral-exp4":
        return CorralExp4Agent(
            spec_prior(),
            cfg.n,
            num_actions,
            rng,
            learning_rate=spec.get("learning_rate"),
            gamma=spec.get("gamma"),
        )
    if kind == "oracle":
        return _OracleAgent(instance)
    raise ConfigError(f"unknown linear agent kind '{kind}'")


def _agent_rngs(cfg: ExperimentConfig, sweep_index: int, rep: int, tag: str):
    agent_rng = RngStream(
        cfg.seed, derive_stream_id("agent", sweep_index, rep, tag)
    ).generator()
    noise_rng = RngStream(
        cfg.seed, derive_stream_id("noise", sweep_index, rep, tag)
    ).generator()
    return agent_rng, noise_rng


def _run_linear_task(cfg: ExperimentConfig, sweep_index: int, rep: int) -> list[RegretRecord]:
    sweep_value, env = _sweep_env(cfg, sweep_index)
    env_rng = RngStream(cfg.seed, derive_stream_id("env", sweep_index, rep)).generator()
    if env["kind"] == "synthetic":
        instance, s_star, _ = synthetic_linear_env(
            int(env["d"]), int(env["L"]), float(env["sigma0"]), float(env["sigma"]), env_rng
        )
        sigma_diag = float(env["sigma"])
    else:
        table = load_feature_file(str(env["path"]))
        bandit = FeatureBanditEnv(
            table,
            float(env.get("reward_hi", 0.9)),
            float(env.get("reward_lo", 0.1)),
            int(env.get("k_actions", 10)),
            env_rng,
        )
        instance = bandit.draw_instance(cfg.n)
        s_star = instance.s_star
        sigma_diag = float(env.get("sigma", 0.5))

    records: list[RegretRecord] = []
    for spec in cfg.agent_dicts():
        tag = spec.get("label", spec["kind"])
        agent_rng, noise_rng = _agent_rngs(cfg, sweep_index, rep, tag)
        agent = _build_linear_agent(spec, cfg, env, instance, agent_rng)
        diag = None
        if cfg.diagnostics:
            post = agent.posterior
            diag = LatentDiagnostics.for_bandit(
                post.prior.num_components, cfg.n, post.prior.dim
            )
        cum_regret = 0.0
        cum_reward = 0.0
        for t in range(1, cfg.n + 1):
            actions = instance.round_actions(t - 1)
            idx = agent.act(actions)
            true_means = instance.true_means(t - 1)
            mean_chosen = float(true_means[idx])
            regret = float(true_means.max()) - mean_chosen
            reward = instance.sample_reward(mean_chosen, noise_rng)
            g_cols, in_c = None, None
            if diag is not None:
                post = agent.posterior
                s = agent.last_latent
                chosen = actions[idx]
                mu_bar = float(post.theta_bar[s] @ chosen)
                width = confidence_width(post, s, chosen, cfg.n)
                diag = record_bandit_round(diag, s, mu_bar, width, reward)
                in_c = int(s_star in confidence_set(diag, "bandit", sigma_diag))
                g_cols = tuple(diag.G.tolist())
            agent.observe(idx, actions[idx], reward)
            cum_regret += regret
            cum_reward += reward
            records.append(
                RegretRecord(
                    sweep=sweep_value,
                    rep=rep,
                    agent=tag,
                    t=t,
                    inst_regret=regret,
                    cum_regret=cum_regret,
                    inst_reward=reward if cfg.emit_reward else None,
                    cum_reward=cum_reward if cfg.emit_reward else None,
                    G=g_cols,
                    in_C=in_c,
                )
            )
    return records


def _posterior_mean_mdp(post, s: int) -> TabularMDP:
    ar = post.effective_alpha_r(s)
    at = post.effective_alpha_t(s)
    return TabularMDP(
        rewards=ar[..., 1] / ar.sum(axis=-1),
        transitions=at / at.sum(axis=-1, keepdims=True),
        horizon=post.prior.horizon,
        start=post.prior.start,
    )


def _sample_from(dist: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(dist)
    idx = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), dist.size - 1)
    while dist[idx] == 0.0:
        idx -= 1
    return idx


def _run_mdp_task(cfg: ExperimentConfig, sweep_index: int, rep: int) -> list[RegretRecord]:
    sweep_value, env = _sweep_env(cfg, sweep_index)
    num_states = int(env.get("num_states", 10))
    horizon = int(env.get("horizon", 20))
    scale = float(env.get("scale", 10.0))
    prior, _ = riverswim_prior(num_states, scale, horizon=horizon)
    env_rng = RngStream(cfg.seed, derive_stream_id("env", sweep_index, rep)).generator()
    s_star, true_mdp = draw_mdp_instance(prior, env_rng)
    pi_star = plan(true_mdp)
    v_star = policy_value(true_mdp, pi_star)

    records: list[RegretRecord] = []
    for spec in cfg.agent_dicts():
        tag = spec.get("label", spec["kind"])
        agent_rng, noise_rng = _agent_rngs(cfg, sweep_index, rep, tag)
        if spec["kind"] == "mix-ts":
            agent = MixtureTSMDPAgent(prior, agent_rng)
        else:
            agent = psrl_agent(num_states, 2, horizon, agent_rng)
        diag = None
        if cfg.diagnostics:
            diag = LatentDiagnostics.for_mdp(
                agent.posterior.prior.num_components, cfg.n
            )
        cum_regret = 0.0
        cum_reward = 0.0
        for t in range(1, cfg.n + 1):
            policy = agent.begin_episode()
            regret = v_star - policy_value(true_mdp, policy)
            widths = None
            if diag is not None:
                post = agent.posterior
                s = agent.last_latent
                c, phi = mdp_confidence_widths(post, s, cfg.n)
                widths = c + phi
                vbar = policy_value(_posterior_mean_mdp(post, s), policy)
            x = _sample_from(true_mdp.start, noise_rng)
            episode_return = 0.0
            width_sum = 0.0
            for i in range(horizon):
                a = int(policy.actions[i, x])
                r = int(noise_rng.random() < true_mdp.rewards[x, a])
                x_next = _sample_from(true_mdp.transitions[x, a], noise_rng)
                if widths is not None:
                    width_sum += float(widths[x, a])
                agent.observe(x, a, r, x_next)
                episode_return += r
                x = x_next
            g_cols, in_c = None, None
            if diag is not None:
                diag = record_mdp_episode(
                    diag, agent.last_latent, vbar, width_sum, episode_return, horizon
                )
                in_c = int(s_star in confidence_set(diag, "mdp", horizon))
                g_cols = tuple(diag.G.tolist())
            cum_regret += regret
            cum_reward += episode_return
            records.append(
                RegretRecord(
                    sweep=sweep_value,
                    rep=rep,
                    agent=tag,
                    t=t,
                    inst_regret=regret,
                    cum_regret=cum_regret,
                    inst_reward=episode_return if cfg.emit_reward else None,
                    cum_reward=cum_reward if cfg.emit_reward else None,
                    G=g_cols,
                    in_C=in_c,
                )
            )
    return records


def _run_task(args: tuple) -> list[RegretRecord]:
    cfg, sweep_index, rep = args
    if cfg.setting == "linear":
        return _run_linear_task(cfg, sweep_index, rep)
    return _run_mdp_task(cfg, sweep_index, rep)


def run_experiment(cfg: ExperimentConfig) -> Iterator[RegretRecord]:
    """Run every (sweep value, replication) and yield records in deterministic
    order: sweep-major, then replication, then agents in config order, then t.
    Output is identical for any worker count."""
    _validate(cfg)
    tasks = [
        (cfg, sweep_index, rep)
        for sweep_index in range(cfg.num_sweeps)
        for rep in range(cfg.reps)
    ]
    if cfg.workers <= 1:
        for task in tasks:
            yield from _run_task(task)
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
            for batch in executor.map(_run_task, tasks, chunksize=1):
                yield from batch


def aggregate(records: Iterable[RegretRecord], value: str = "cum_regret") -> list[AggregateRow]:
    """Per-(sweep, agent, t) mean and standard error of the chosen field.

    stderr is the sample standard deviation over replications divided by
    sqrt(reps); a single replication yields stderr 0 by convention (reps
    column flags it).
    """
    groups: dict[tuple, list[float]] = {}
    for record in records:
        val = getattr(record, value)
        if val is None:
            raise ValueError(f"records carry no '{value}' field")
        groups.setdefault((record.sweep, record.agent, record.t), []).append(float(val))
    rows = []
    for (sweep, agent, t), vals in groups.items():
        k = len(vals)
        mean = math.fsum(vals) / k
        var = math.fsum((v - mean) ** 2 for v in vals) / (k - 1) if k > 1 else 0.0
        rows.append(
            AggregateRow(
                sweep=sweep, agent=agent, t=t, mean=mean, stderr=math.sqrt(var / k), reps=k
            )
        )
    return rows


def _format_float(x: float) -> str:
    return format(float(x), ".17g")


def csv_rows(records: Iterable[RegretRecord]) -> Iterator[str]:
    """Header plus one line per record; raises on heterogeneous records."""
    iterator = iter(records)
    try:
        first = next(iterator)
    except StopIteration:
        yield "sweep,rep,agent,t,inst_regret,cum_regret"
        return
    header = ["sweep", "rep", "agent", "t", "inst_regret", "cum_regret"]
    has_reward = first.inst_reward is not None
    num_g = len(first.G) if first.G is not None else 0
    if has_reward:
        header += ["inst_reward", "cum_reward"]
    if num_g:
        header += [f"G_{s}" for s in range(num_g)] + ["in_C"]
    yield ",".join(header)
    for record in itertools.chain([first], iterator):
        if (record.inst_reward is not None) != has_reward or (
            len(record.G) if record.G is not None else 0
        ) != num_g:
            raise ValueError("records have inconsistent optional columns")
        parts = [
            _format_float(record.sweep),
            str(record.rep),
            record.agent,
            str(record.t),
            _format_float(record.inst_regret),
            _format_float(record.cum_regret),
        ]
        if has_reward:
            parts += [_format_float(record.inst_reward), _format_float(record.cum_reward)]
        if num_g:
            parts += [_format_float(g) for g in record.G]
            parts.append(str(int(record.in_C)))
        yield ",".join(parts)


def write_csv(path, records: Iterable[RegretRecord]) -> int:
    """Write records as CSV with LF endings; returns the number of data rows."""
    count = -1  # header line does not count
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for count, line in enumerate(csv_rows(records)):
            fh.write(line + "\n")
    return count


def read_csv(path) -> list[RegretRecord]:
    """Parse a harness CSV back into records (the inverse of write_csv)."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ConfigError(f"{path} is empty")
    header = lines[0].split(",")
    base = ["sweep", "rep", "agent", "t", "inst_regret", "cum_regret"]
    if header[: len(base)] != base:
        raise ConfigError(f"{path} does not start with the harness columns")
    rest = header[len(base) :]
    has_reward = rest[:2] == ["inst_reward", "cum_reward"]
    if has_reward:
        rest = rest[2:]
    num_g = 0
    if rest:
        if rest[-1] != "in_C" or any(col != f"G_{i}" for i, col in enumerate(rest[:-1])):
            raise ConfigError(f"{path} has unrecognized trailing columns {rest}")
        num_g = len(rest) - 1
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        pos = 6
        inst_reward = cum_reward = None
        if has_reward:
            inst_reward, cum_reward = float(parts[6]), float(parts[7])
            pos = 8
        g_cols, in_c = None, None
        if num_g:
            g_cols = tuple(float(v) for v in parts[pos : pos + num_g])
            in_c = int(parts[pos + num_g])
        records.append(
            RegretRecord(
                sweep=float(parts[0]),
                rep=int(parts[1]),
                agent=parts[2],
                t=int(parts[3]),
                inst_regret=float(parts[4]),
                cum_regret=float(parts[5]),
                inst_reward=inst_reward,
                cum_reward=cum_reward,
                G=g_cols,
                in_C=in_c,
            )
        )
    return records


def run_to_csv(cfg: ExperimentConfig) -> int:
    """Run the experiment and write cfg.out; returns the data-row count."""
    if not cfg.out:
        raise ConfigError("config needs an 'out' path to write CSV")
    return write_csv(cfg.out, run_experiment(cfg))
