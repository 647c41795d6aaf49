"""Experiment harness: configs, replication runs, aggregation, CSV contract."""

import dataclasses
import json
import math

import mpmath as mp
import numpy as np
import pytest

from mixprior import (
    ConfigError,
    RegretRecord,
    RngStream,
    aggregate,
    config_from_dict,
    csv_rows,
    derive_stream_id,
    load_config,
    read_csv,
    run_experiment,
    run_to_csv,
    synthetic_linear_env,
    write_csv,
)

mp.mp.dps = 50


def linear_raw(**overrides):
    raw = {
        "setting": "linear",
        "env": {"kind": "synthetic", "d": 3, "L": 2, "sigma0": 0.1, "sigma": 0.2},
        "agents": [{"kind": "mix-ts"}, {"kind": "oracle"}],
        "n": 15,
        "reps": 2,
        "seed": 7,
    }
    raw.update(overrides)
    return raw


def mdp_raw(**overrides):
    raw = {
        "setting": "mdp",
        "env": {"kind": "riverswim", "num_states": 4, "horizon": 5, "scale": 10.0},
        "agents": [{"kind": "mix-ts"}, {"kind": "psrl"}],
        "n": 6,
        "reps": 2,
        "seed": 11,
    }
    raw.update(overrides)
    return raw


class TestConfigValidation:
    def test_minimal_config_accepted(self):
        cfg = config_from_dict(linear_raw())
        assert cfg.setting == "linear" and cfg.num_sweeps == 1
        assert cfg.env_dict()["d"] == 3
        assert [a["kind"] for a in cfg.agent_dicts()] == ["mix-ts", "oracle"]

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            config_from_dict(linear_raw(extra=1))

    def test_missing_required_key(self):
        raw = linear_raw()
        del raw["seed"]
        with pytest.raises(ConfigError, match="seed"):
            config_from_dict(raw)

    def test_bad_setting(self):
        with pytest.raises(ConfigError, match="setting"):
            config_from_dict(linear_raw(setting="bandit"))

    def test_empty_agents(self):
        with pytest.raises(ConfigError, match="agents"):
            config_from_dict(linear_raw(agents=[]))

    def test_duplicate_labels(self):
        agents = [{"kind": "mix-ts", "label": "a"}, {"kind": "ts", "label": "a"}]
        with pytest.raises(ConfigError, match="unique"):
            config_from_dict(linear_raw(agents=agents))

    def test_wrong_agent_kind_for_setting(self):
        with pytest.raises(ConfigError, match="mdp agent"):
            config_from_dict(mdp_raw(agents=[{"kind": "exp4"}]))
        with pytest.raises(ConfigError, match="linear agent"):
            config_from_dict(linear_raw(agents=[{"kind": "psrl"}]))

    def test_synthetic_env_shape_limits(self):
        raw = linear_raw()
        raw["env"]["L"] = 5
        with pytest.raises(ConfigError, match="L <= d"):
            config_from_dict(raw)

    def test_sweep_allowed_only_on_synthetic(self):
        sweep = {"param": "sigma0", "values": [0.05, 0.1]}
        cfg = config_from_dict(linear_raw(sweep=sweep))
        assert cfg.sweep_values == (0.05, 0.1)
        with pytest.raises(ConfigError, match="synthetic"):
            config_from_dict(mdp_raw(sweep=sweep))

    def test_sweep_value_validation(self):
        with pytest.raises(ConfigError, match="positive"):
            config_from_dict(linear_raw(sweep={"param": "sigma0", "values": [0.0]}))
        with pytest.raises(ConfigError, match="integers"):
            config_from_dict(linear_raw(sweep={"param": "L", "values": [1.5]}))
        with pytest.raises(ConfigError, match="exceed"):
            config_from_dict(linear_raw(sweep={"param": "L", "values": [2, 9]}))
        with pytest.raises(ConfigError, match="param"):
            config_from_dict(linear_raw(sweep={"param": "sigma", "values": [0.1]}))

    def test_diagnostics_needs_posterior_agents(self):
        raw = linear_raw(diagnostics=True, agents=[{"kind": "exp4"}])
        with pytest.raises(ConfigError, match="posterior-tracking"):
            config_from_dict(raw)

    def test_diagnostics_needs_shared_component_count(self):
        raw = linear_raw(diagnostics=True, agents=[{"kind": "mix-ts"}, {"kind": "ts"}])
        with pytest.raises(ConfigError, match="component count"):
            config_from_dict(raw)
        with pytest.raises(ConfigError, match="component count"):
            config_from_dict(mdp_raw(diagnostics=True))

    def test_diagnostics_incompatible_with_l_sweep(self):
        raw = linear_raw(
            diagnostics=True,
            agents=[{"kind": "mix-ts"}],
            sweep={"param": "L", "values": [1, 2]},
        )
        with pytest.raises(ConfigError, match="L sweep"):
            config_from_dict(raw)

    def test_features_env_needs_path_and_prior(self):
        raw = linear_raw()
        raw["env"] = {"kind": "features"}
        raw["agents"] = [{"kind": "ts"}]
        with pytest.raises(ConfigError, match="path"):
            config_from_dict(raw)
        raw["env"] = {"kind": "features", "path": "emb.csv"}
        raw["agents"] = [{"kind": "mix-ts"}]
        with pytest.raises(ConfigError, match="prior"):
            config_from_dict(raw)

    def test_load_config_errors(self, tmp_path):
        missing = tmp_path / "nope.json"
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(missing)
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(bad)
        good = tmp_path / "good.json"
        good.write_text(json.dumps(linear_raw()))
        assert load_config(good).n == 15


class TestLinearRuns:
    def test_oracle_has_zero_regret(self):
        cfg = config_from_dict(linear_raw())
        records = list(run_experiment(cfg))
        oracle = [r for r in records if r.agent == "oracle"]
        assert len(oracle) == 15 * 2
        assert all(r.inst_regret == 0.0 and r.cum_regret == 0.0 for r in oracle)

    def test_cumulative_is_prefix_sum_and_nonnegative(self):
        cfg = config_from_dict(linear_raw(n=25))
        groups = {}
        for r in run_experiment(cfg):
            assert r.inst_regret >= 0.0
            groups.setdefault((r.sweep, r.rep, r.agent), []).append(r)
        for rows in groups.values():
            assert [r.t for r in rows] == list(range(1, 26))
            total = 0.0
            for r in rows:
                total += r.inst_regret
                assert r.cum_regret == total

    def test_regret_values_replay_from_env_stream(self):
        cfg = config_from_dict(linear_raw(reps=3))
        by_rep = {}
        for r in run_experiment(cfg):
            if r.agent == "mix-ts":
                by_rep.setdefault(r.rep, []).append(r.inst_regret)
        for rep, regrets in by_rep.items():
            env_rng = RngStream(7, derive_stream_id("env", 0, rep)).generator()
            _, _, theta = synthetic_linear_env(3, 2, 0.1, 0.2, env_rng)
            gaps = {float(theta.max()) - float(v) for v in theta}
            assert set(regrets) <= gaps

    def test_sweep_produces_one_block_per_value(self):
        sweep = {"param": "sigma0", "values": [0.05, 0.2]}
        cfg = config_from_dict(linear_raw(sweep=sweep, n=5, reps=2))
        records = list(run_experiment(cfg))
        sweeps = sorted({r.sweep for r in records})
        assert sweeps == [0.05, 0.2]
        assert len(records) == 2 * 2 * 2 * 5

    def test_reward_columns_only_when_requested(self):
        records = list(run_experiment(config_from_dict(linear_raw(n=4, reps=1))))
        assert all(r.inst_reward is None and r.cum_reward is None for r in records)
        records = list(
            run_experiment(config_from_dict(linear_raw(n=4, reps=1, emit_reward=True)))
        )
        assert all(r.inst_reward is not None for r in records)
        for key in {(r.sweep, r.rep, r.agent) for r in records}:
            rows = [r for r in records if (r.sweep, r.rep, r.agent) == key]
            total = 0.0
            for r in rows:
                total += r.inst_reward
                assert r.cum_reward == total

    def test_diagnostics_columns(self):
        cfg = config_from_dict(
            linear_raw(diagnostics=True, agents=[{"kind": "mix-ts"}], n=10, reps=1)
        )
        records = list(run_experiment(cfg))
        for r in records:
            assert len(r.G) == 2
            assert r.in_C in (0, 1)
            assert all(math.isfinite(g) for g in r.G)

    def test_workers_do_not_change_output(self):
        base = linear_raw(n=10, reps=3)
        seq = list(run_experiment(config_from_dict(base)))
        par = list(run_experiment(config_from_dict({**base, "workers": 3})))
        assert seq == par

    def test_rerun_is_deterministic(self):
        cfg = config_from_dict(linear_raw(n=12, reps=2))
        assert list(run_experiment(cfg)) == list(run_experiment(cfg))


class TestMdpRuns:
    def test_regret_bounded_and_prefix_sums(self):
        cfg = config_from_dict(mdp_raw(emit_reward=True))
        groups = {}
        for r in run_experiment(cfg):
            assert r.inst_regret >= -1e-10
            assert 0.0 <= r.inst_reward <= 5.0  # at most one unit reward per step
            groups.setdefault((r.rep, r.agent), []).append(r)
        assert len(groups) == 2 * 2
        for rows in groups.values():
            assert [r.t for r in rows] == list(range(1, 7))

    def test_mdp_diagnostics(self):
        cfg = config_from_dict(
            mdp_raw(diagnostics=True, agents=[{"kind": "mix-ts"}], n=4, reps=1)
        )
        records = list(run_experiment(cfg))
        assert all(len(r.G) == 2 and r.in_C in (0, 1) for r in records)


class TestAggregate:
    def test_two_value_example(self):
        records = [
            RegretRecord(0.0, 0, "a", 1, 1.0, 1.0),
            RegretRecord(0.0, 1, "a", 1, 3.0, 3.0),
        ]
        (row,) = aggregate(records)
        assert row.mean == 2.0 and row.stderr == 1.0 and row.reps == 2

    def test_single_replication_stderr_zero(self):
        (row,) = aggregate([RegretRecord(0.0, 0, "a", 1, 5.0, 5.0)])
        assert row.stderr == 0.0 and row.reps == 1

    def test_matches_high_precision_mean_and_stderr(self):
        rng = np.random.default_rng(0)
        vals = rng.uniform(0.0, 50.0, size=200)
        records = [
            RegretRecord(0.0, i, "a", 1, v, float(v)) for i, v in enumerate(vals)
        ]
        (row,) = aggregate(records)
        ref_mean = mp.fsum(map(mp.mpf, vals)) / 200
        ref_var = mp.fsum((mp.mpf(v) - ref_mean) ** 2 for v in vals) / 199
        assert row.mean == pytest.approx(float(ref_mean), rel=1e-13)
        assert row.stderr == pytest.approx(float(mp.sqrt(ref_var / 200)), rel=1e-13)

    def test_grouping_keys(self):
        records = [
            RegretRecord(0.1, 0, "a", 1, 1.0, 1.0),
            RegretRecord(0.1, 0, "a", 2, 1.0, 2.0),
            RegretRecord(0.1, 0, "b", 1, 1.0, 4.0),
            RegretRecord(0.2, 0, "a", 1, 1.0, 8.0),
        ]
        rows = aggregate(records)
        assert len(rows) == 4
        assert {(r.sweep, r.agent, r.t) for r in rows} == {
            (0.1, "a", 1),
            (0.1, "a", 2),
            (0.1, "b", 1),
            (0.2, "a", 1),
        }

    def test_selectable_field(self):
        records = [
            RegretRecord(0.0, 0, "a", 1, 1.0, 1.0, inst_reward=0.5, cum_reward=0.5),
            RegretRecord(0.0, 1, "a", 1, 3.0, 3.0, inst_reward=0.7, cum_reward=0.7),
        ]
        (row,) = aggregate(records, value="cum_reward")
        assert row.mean == pytest.approx(0.6)

    def test_missing_field_rejected(self):
        records = [RegretRecord(0.0, 0, "a", 1, 1.0, 1.0)]
        with pytest.raises(ValueError, match="cum_reward"):
            aggregate(records, value="cum_reward")


class TestCsvContract:
    def test_base_header(self):
        rows = list(csv_rows([RegretRecord(0.0, 0, "a", 1, 0.5, 0.5)]))
        assert rows[0] == "sweep,rep,agent,t,inst_regret,cum_regret"
        assert rows[1] == "0,0,a,1,0.5,0.5"

    def test_reward_and_diagnostics_headers(self):
        rec = RegretRecord(
            0.0, 0, "a", 1, 0.5, 0.5, inst_reward=1.0, cum_reward=1.0,
            G=(0.25, -0.5), in_C=1,
        )
        rows = list(csv_rows([rec]))
        assert rows[0] == (
            "sweep,rep,agent,t,inst_regret,cum_regret,"
            "inst_reward,cum_reward,G_0,G_1,in_C"
        )

    def test_empty_records_yield_header_only(self):
        assert list(csv_rows([])) == ["sweep,rep,agent,t,inst_regret,cum_regret"]

    def test_floats_round_trip_exactly(self, tmp_path):
        values = [1 / 3, math.pi, 1e-17, 12345.678901234567, 0.1 + 0.2]
        records = [
            RegretRecord(0.0, i, "a", 1, v, v) for i, v in enumerate(values)
        ]
        path = tmp_path / "out.csv"
        assert write_csv(path, records) == len(values)
        loaded = read_csv(path)
        for rec, v in zip(loaded, values):
            assert rec.inst_regret == v and rec.cum_regret == v

    def test_heterogeneous_records_rejected(self):
        records = [
            RegretRecord(0.0, 0, "a", 1, 0.5, 0.5),
            RegretRecord(0.0, 0, "a", 2, 0.5, 1.0, inst_reward=1.0, cum_reward=1.0),
        ]
        with pytest.raises(ValueError, match="inconsistent"):
            list(csv_rows(records))

    def test_full_round_trip_with_all_columns(self, tmp_path):
        cfg = config_from_dict(
            linear_raw(
                diagnostics=True,
                emit_reward=True,
                agents=[{"kind": "mix-ts"}],
                n=8,
                reps=2,
            )
        )
        records = list(run_experiment(cfg))
        path = tmp_path / "full.csv"
        write_csv(path, records)
        assert read_csv(path) == records

    def test_lf_line_endings(self, tmp_path):
        path = tmp_path / "lf.csv"
        write_csv(path, [RegretRecord(0.0, 0, "a", 1, 0.5, 0.5)])
        blob = path.read_bytes()
        assert b"\r" not in blob and blob.endswith(b"\n")

    def test_read_csv_rejects_foreign_headers(self, tmp_path):
        path = tmp_path / "foreign.csv"
        path.write_text("time,regret\n1,0.5\n")
        with pytest.raises(ConfigError, match="harness columns"):
            read_csv(path)
        path.write_text("sweep,rep,agent,t,inst_regret,cum_regret,extra\n")
        with pytest.raises(ConfigError, match="unrecognized"):
            read_csv(path)

    def test_run_to_csv_writes_and_counts(self, tmp_path):
        out = tmp_path / "run.csv"
        cfg = config_from_dict(linear_raw(n=5, reps=2, out=str(out)))
        assert run_to_csv(cfg) == 5 * 2 * 2
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 20

    def test_run_to_csv_requires_out(self):
        cfg = config_from_dict(linear_raw())
        with pytest.raises(ConfigError, match="out"):
            run_to_csv(cfg)

    def test_byte_identical_across_worker_counts(self, tmp_path):
        blobs = []
        for workers in (1, 3):
            out = tmp_path / f"w{workers}.csv"
            cfg = config_from_dict(
                linear_raw(n=10, reps=3, workers=workers, out=str(out))
            )
            run_to_csv(cfg)
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]
