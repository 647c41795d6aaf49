"""Command line interface: exit codes, overrides, and emitted files."""

import json
import warnings

import numpy as np
import pytest

from mixprior import (
    BoundInputsLinear,
    BoundInputsMDP,
    NumericalError,
    load_prior,
    read_csv,
    synthesize_feature_table,
    theorem1_bound,
    theorem2_bound,
    write_feature_file,
)
from mixprior.cli import main


def write_linear_config(tmp_path, **overrides):
    raw = {
        "setting": "linear",
        "env": {"kind": "synthetic", "d": 3, "L": 2, "sigma0": 0.1, "sigma": 0.2},
        "agents": [{"kind": "mix-ts"}, {"kind": "oracle"}],
        "n": 10,
        "reps": 2,
        "seed": 3,
    }
    raw.update(overrides)
    path = tmp_path / "linear.json"
    path.write_text(json.dumps(raw))
    return path


def write_mdp_config(tmp_path, **overrides):
    raw = {
        "setting": "mdp",
        "env": {"kind": "riverswim", "num_states": 4, "horizon": 5},
        "agents": [{"kind": "mix-ts"}, {"kind": "psrl"}],
        "n": 4,
        "reps": 2,
        "seed": 5,
    }
    raw.update(overrides)
    path = tmp_path / "mdp.json"
    path.write_text(json.dumps(raw))
    return path


class TestRunCommands:
    def test_run_linear_writes_csv(self, tmp_path, capsys):
        cfg = write_linear_config(tmp_path)
        out = tmp_path / "out.csv"
        code = main(["run-linear", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        assert "wrote 40 rows" in capsys.readouterr().out
        records = read_csv(out)
        assert len(records) == 10 * 2 * 2

    def test_overrides_change_the_run(self, tmp_path):
        cfg = write_linear_config(tmp_path)
        out = tmp_path / "out.csv"
        code = main(
            [
                "run-linear",
                "--config",
                str(cfg),
                "--out",
                str(out),
                "--n",
                "5",
                "--reps",
                "1",
                "--seed",
                "99",
            ]
        )
        assert code == 0
        records = read_csv(out)
        assert len(records) == 5 * 1 * 2
        assert max(r.t for r in records) == 5

    def test_run_mdp_writes_csv(self, tmp_path):
        cfg = write_mdp_config(tmp_path)
        out = tmp_path / "mdp.csv"
        assert main(["run-mdp", "--config", str(cfg), "--out", str(out)]) == 0
        assert len(read_csv(out)) == 4 * 2 * 2

    def test_setting_mismatch_is_config_error(self, tmp_path, capsys):
        cfg = write_linear_config(tmp_path)
        out = tmp_path / "out.csv"
        code = main(["run-mdp", "--config", str(cfg), "--out", str(out)])
        assert code == 2
        assert "does not match" in capsys.readouterr().err

    def test_missing_out_is_config_error(self, tmp_path, capsys):
        cfg = write_linear_config(tmp_path)
        assert main(["run-linear", "--config", str(cfg)]) == 2
        assert "output CSV path" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["run-linear", "--config", str(tmp_path / "nope.json")])
        assert code == 2
        assert "cannot read" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{]")
        assert main(["run-linear", "--config", str(bad)]) == 2

    def test_bad_flags_exit_two(self, capsys):
        assert main(["run-linear"]) == 2  # --config is required
        capsys.readouterr()
        assert main(["no-such-command"]) == 2
        capsys.readouterr()
        assert main([]) == 2
        capsys.readouterr()

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "mixprior" in capsys.readouterr().out

    def test_numerical_failure_exits_three(self, tmp_path, capsys, monkeypatch):
        import mixprior.cli as cli_module

        cfg = write_linear_config(tmp_path)
        out = tmp_path / "out.csv"

        def explode(cfg):
            raise NumericalError("jitter ladder exhausted")

        monkeypatch.setattr(cli_module, "run_to_csv", explode)
        code = main(["run-linear", "--config", str(cfg), "--out", str(out)])
        assert code == 3
        assert "numerical error" in capsys.readouterr().err

    def test_linalg_failure_exits_three(self, tmp_path, monkeypatch):
        import mixprior.cli as cli_module

        cfg = write_linear_config(tmp_path)

        def explode(cfg):
            raise np.linalg.LinAlgError("singular matrix")

        monkeypatch.setattr(cli_module, "run_to_csv", explode)
        assert main(["run-linear", "--config", str(cfg), "--out", "x.csv"]) == 3


class TestFitPrior:
    def make_features(self, tmp_path, num_classes=3, rows=12, d=4, spread=0.3):
        rng = np.random.default_rng(21)
        table = synthesize_feature_table(num_classes, rows, d, spread, rng)
        path = tmp_path / "emb.csv"
        write_feature_file(path, table)
        return path

    def test_fit_writes_loadable_prior(self, tmp_path, capsys):
        feats = self.make_features(tmp_path)
        out = tmp_path / "prior.json"
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            code = main(
                [
                    "fit-prior",
                    "--features",
                    str(feats),
                    "--L",
                    "3",
                    "--out",
                    str(out),
                    "--sigma",
                    "0.4",
                ]
            )
        assert code == 0
        assert "3 components" in capsys.readouterr().out
        with pytest.warns(RuntimeWarning, match="norm exceeds 1"):
            prior = load_prior(out)
        assert prior.num_components == 3
        assert prior.dim == 4
        assert prior.sigma == 0.4

    def test_seed_changes_nothing_for_well_separated_data(self, tmp_path):
        feats = self.make_features(tmp_path, spread=0.01)
        outs = []
        for seed in ("0", "1"):
            out = tmp_path / f"prior{seed}.json"
            with warnings.catch_warnings():
                # near-unit-norm class centers can trip the soft norm warning
                warnings.simplefilter("ignore", RuntimeWarning)
                code = main(
                    [
                        "fit-prior",
                        "--features",
                        str(feats),
                        "--L",
                        "3",
                        "--out",
                        str(out),
                        "--seed",
                        seed,
                    ]
                )
                assert code == 0
                outs.append(load_prior(out))
        m0 = np.sort(outs[0].means, axis=0)
        m1 = np.sort(outs[1].means, axis=0)
        np.testing.assert_allclose(m1, m0, atol=1e-8)

    def test_too_many_components_is_config_error(self, tmp_path, capsys):
        feats = self.make_features(tmp_path, num_classes=1, rows=2)
        code = main(
            ["fit-prior", "--features", str(feats), "--L", "5", "--out", "p.json"]
        )
        assert code == 2
        assert "at least L points" in capsys.readouterr().err

    def test_bad_scalar_flags(self, tmp_path):
        feats = self.make_features(tmp_path)
        assert (
            main(["fit-prior", "--features", str(feats), "--L", "0", "--out", "p.json"])
            == 2
        )
        assert (
            main(
                [
                    "fit-prior",
                    "--features",
                    str(feats),
                    "--L",
                    "2",
                    "--out",
                    "p.json",
                    "--sigma",
                    "0",
                ]
            )
            == 2
        )

    def test_missing_features_file(self, tmp_path):
        code = main(
            [
                "fit-prior",
                "--features",
                str(tmp_path / "missing.csv"),
                "--L",
                "2",
                "--out",
                "p.json",
            ]
        )
        assert code == 2


class TestBound:
    def write_config(self, tmp_path, payload):
        path = tmp_path / "bound.json"
        path.write_text(json.dumps(payload))
        return path

    def test_linear_bound_golden_csv(self, tmp_path):
        cfg = self.write_config(
            tmp_path,
            {
                "theorem": 1,
                "fixed": {"n": 1000, "d": 30, "L": 10, "sigma": 0.1, "kappa": 1.0},
                "grid": {"param": "lambda0max", "values": [0.01, 0.04]},
            },
        )
        out = tmp_path / "bound.csv"
        assert main(["bound", "--config", str(cfg), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "lambda0max,bound"
        expected1 = theorem1_bound(BoundInputsLinear(1000, 30, 10, 0.1, 1.0, 0.01))
        assert lines[1] == f"0.01,{format(expected1, '.17g')}"
        assert float(lines[1].split(",")[1]) == pytest.approx(
            4912.809188793484726201, rel=1e-12
        )
        expected2 = theorem1_bound(BoundInputsLinear(1000, 30, 10, 0.1, 1.0, 0.04))
        assert lines[2] == f"{format(0.04, '.17g')},{format(expected2, '.17g')}"

    def test_mdp_bound_over_episode_grid(self, tmp_path):
        cfg = self.write_config(
            tmp_path,
            {
                "theorem": 2,
                "fixed": {"nX": 10, "nA": 2, "h": 20, "L": 2, "Lambda0min": 1.0},
                "grid": {"param": "n", "values": [100, 1000]},
                "out": str(tmp_path / "b.csv"),
            },
        )
        assert main(["bound", "--config", str(cfg)]) == 0
        lines = (tmp_path / "b.csv").read_text().splitlines()
        assert lines[0] == "n,bound"
        for line, n in zip(lines[1:], (100, 1000)):
            expected = theorem2_bound(BoundInputsMDP(n, 10, 2, 20, 2, 1.0))
            assert line == f"{n},{format(expected, '.17g')}"
        assert float(lines[2].split(",")[1]) == pytest.approx(
            1896159.400759966123901, rel=1e-12
        )

    def test_config_validation(self, tmp_path, capsys):
        cases = [
            ({"theorem": 3, "fixed": {}, "grid": {}}, "theorem"),
            (
                {
                    "theorem": 1,
                    "fixed": {"n": 10, "d": 3, "L": 1, "sigma": 0.1, "kappa": 1.0},
                    "grid": {"param": "rho", "values": [1]},
                },
                "grid param",
            ),
            (
                {
                    "theorem": 1,
                    "fixed": {"n": 10, "d": 3, "sigma": 0.1, "kappa": 1.0},
                    "grid": {"param": "lambda0max", "values": [1]},
                },
                "missing fixed",
            ),
            (
                {
                    "theorem": 1,
                    "fixed": {
                        "n": 10,
                        "d": 3,
                        "L": 1,
                        "sigma": 0.1,
                        "kappa": 1.0,
                        "nX": 4,
                    },
                    "grid": {"param": "lambda0max", "values": [1]},
                },
                "unknown fixed",
            ),
            (
                {
                    "theorem": 1,
                    "fixed": {"n": 10, "d": 3, "L": 1, "sigma": 0.1, "kappa": 1.0},
                    "grid": {"param": "lambda0max", "values": []},
                },
                "nonempty",
            ),
            (
                {
                    "theorem": 1,
                    "fixed": {"n": 10, "d": 3, "L": 1, "sigma": 0.1, "kappa": 1.0},
                    "grid": {"param": "lambda0max", "values": [1]},
                    "mystery": True,
                },
                "unknown bound config",
            ),
        ]
        for payload, fragment in cases:
            cfg = self.write_config(tmp_path, payload)
            assert main(["bound", "--config", str(cfg), "--out", "b.csv"]) == 2
            assert fragment in capsys.readouterr().err

    def test_invalid_grid_value_is_config_error(self, tmp_path, capsys):
        cfg = self.write_config(
            tmp_path,
            {
                "theorem": 1,
                "fixed": {"n": 10, "d": 3, "L": 1, "sigma": 0.1, "kappa": 1.0},
                "grid": {"param": "lambda0max", "values": [-1.0]},
            },
        )
        assert main(["bound", "--config", str(cfg), "--out", "b.csv"]) == 2
        assert "lambda0max=-1.0" in capsys.readouterr().err

    def test_missing_out(self, tmp_path):
        cfg = self.write_config(
            tmp_path,
            {
                "theorem": 1,
                "fixed": {"n": 10, "d": 3, "L": 1, "sigma": 0.1, "kappa": 1.0},
                "grid": {"param": "lambda0max", "values": [1]},
            },
        )
        assert main(["bound", "--config", str(cfg)]) == 2
