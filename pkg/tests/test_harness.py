"""Sweep orchestration and CLI: config parsing, rate arithmetic, outputs,
exit codes, and byte-level determinism of the persisted artifacts."""

import json

import numpy as np
import pytest

from vpfp.cli import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_RUN_FAILURE, main
from vpfp.harness import (
    METRIC_KEYS,
    SweepConfig,
    config_hash,
    default_sweep_config,
    estimate_rates_from_records,
    load_summary,
    parse_config_file,
    run_sweep,
    solver_config_from_dict,
)
from vpfp.spectral import ConfigurationError

SMALL_INI = """
[grid]
n_x = 32
n_v = 16

[solver]
t_final = 0.2
dt_max = 2e-3
scheme = imex_bdf2

[sweep]
epsilons = 0.2,0.1
ddp_dt = 1e-3
sample_interval = 0.05
amplitude = 0.01

[diagnostics]
k = 1
"""


@pytest.fixture
def small_ini(tmp_path):
    path = tmp_path / "sweep.ini"
    path.write_text(SMALL_INI)
    return path


@pytest.fixture(scope="module")
def sweep_outputs(tmp_path_factory):
    """One small sweep shared by the output-inspection tests."""
    out = tmp_path_factory.mktemp("sweep_out")
    ini = out / "sweep.ini"
    ini.write_text(SMALL_INI)
    cfg = SweepConfig.from_dict(parse_config_file(ini), out_dir=out / "run")
    result = run_sweep(cfg)
    return cfg, result, out / "run"


class TestConfigParsing:
    def test_defaults_complete(self):
        cfg = default_sweep_config()
        assert set(cfg) == {"grid", "solver", "sweep", "diagnostics"}
        solver_config_from_dict(cfg)  # must construct without error

    def test_file_overrides_defaults(self, small_ini):
        cfg = parse_config_file(small_ini)
        assert cfg["grid"]["n_x"] == 32
        assert cfg["sweep"]["epsilons"] == (0.2, 0.1)
        assert cfg["solver"]["cfl_scale"] == 0.5  # untouched default

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[plotting]\nstyle = fancy\n")
        with pytest.raises(ConfigurationError, match="unknown config section"):
            parse_config_file(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[grid]\nn_z = 8\n")
        with pytest.raises(ConfigurationError, match="unknown config key"):
            parse_config_file(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[grid]\nn_x = many\n")
        with pytest.raises(ConfigurationError, match="bad value"):
            parse_config_file(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            parse_config_file(tmp_path / "absent.ini")

    def test_hash_stable_and_sensitive(self, small_ini):
        cfg = parse_config_file(small_ini)
        h1 = config_hash(cfg)
        assert h1 == config_hash(parse_config_file(small_ini))
        cfg["grid"]["n_x"] = 64
        assert config_hash(cfg) != h1


class TestSweepConfig:
    def test_epsilons_must_descend(self, small_ini):
        cfg = parse_config_file(small_ini)
        cfg["sweep"]["epsilons"] = (0.1, 0.2)
        with pytest.raises(ConfigurationError, match="strictly decreasing"):
            SweepConfig.from_dict(cfg)

    def test_epsilons_range(self, small_ini):
        cfg = parse_config_file(small_ini)
        cfg["sweep"]["epsilons"] = (1.5, 0.1)
        with pytest.raises(ConfigurationError, match=r"\(0, 1\]"):
            SweepConfig.from_dict(cfg)

    def test_needs_two_epsilons(self, small_ini):
        cfg = parse_config_file(small_ini)
        cfg["sweep"]["epsilons"] = (0.1,)
        with pytest.raises(ConfigurationError, match="at least 2"):
            SweepConfig.from_dict(cfg)


class TestRateArithmetic:
    def test_known_pair(self):
        records = [
            {"epsilon": 0.4, **{k: 0.4 for k in METRIC_KEYS}},
            {"epsilon": 0.2, **{k: 0.2 for k in METRIC_KEYS}},
        ]
        rates = estimate_rates_from_records(records)
        for key in METRIC_KEYS:
            assert rates[key] == [pytest.approx(1.0)]

    def test_quadratic_sequence(self):
        records = [{"epsilon": e, **{k: e**2 for k in METRIC_KEYS}}
                   for e in (0.4, 0.2, 0.1)]
        rates = estimate_rates_from_records(records)
        for key in METRIC_KEYS:
            assert rates[key] == [pytest.approx(2.0), pytest.approx(2.0)]

    def test_floor_labelling(self):
        records = [
            {"epsilon": 0.4, **{k: 1e-16 for k in METRIC_KEYS}},
            {"epsilon": 0.2, **{k: 1e-16 for k in METRIC_KEYS}},
        ]
        rates = estimate_rates_from_records(records)
        for key in METRIC_KEYS:
            assert rates[key] == ["below floor"]


class TestSweepOutputs:
    def test_per_epsilon_records(self, sweep_outputs):
        cfg, result, out_dir = sweep_outputs
        assert [r["epsilon"] for r in result.per_epsilon] == [0.2, 0.1]
        for rec in result.per_epsilon:
            for key in METRIC_KEYS + ("final_E_k", "D_k_time_integral"):
                assert np.isfinite(rec[key]) and rec[key] >= 0.0
        assert result.incomplete == []

    def test_errors_shrink_with_epsilon(self, sweep_outputs):
        _, result, _ = sweep_outputs
        hi, lo = result.per_epsilon
        for key in METRIC_KEYS:
            assert lo[key] < hi[key]

    def test_summary_file_round_trip(self, sweep_outputs):
        cfg, result, out_dir = sweep_outputs
        summary = load_summary(out_dir)
        assert summary["config_hash"] == result.config_hash
        assert len(summary["per_epsilon"]) == 2
        assert set(summary["rates"]) == set(METRIC_KEYS)

    def test_summary_has_no_timings(self, sweep_outputs):
        _, result, out_dir = sweep_outputs
        text = (out_dir / "summary.json").read_text()
        assert "total_s" not in text
        timings = json.loads((out_dir / "timings.json").read_text())
        assert timings["total_s"] > 0.0

    def test_per_run_csv_written(self, sweep_outputs):
        _, _, out_dir = sweep_outputs
        csv = (out_dir / "run_eps_0.2.csv").read_text().splitlines()
        assert csv[0].startswith("time,E_k,D_k")
        assert len(csv) == 1 + 5  # header + samples at 0, .05, .1, .15, .2
        values = [float(x) for x in csv[1].split(",")]
        assert values[0] == 0.0

    def test_summary_byte_identical_on_rerun(self, sweep_outputs, tmp_path):
        cfg, _, out_dir = sweep_outputs
        rerun_cfg = SweepConfig.from_dict(cfg.raw, out_dir=tmp_path)
        run_sweep(rerun_cfg)
        assert (tmp_path / "summary.json").read_bytes() == (out_dir / "summary.json").read_bytes()
        assert ((tmp_path / "run_eps_0.1.csv").read_bytes()
                == (out_dir / "run_eps_0.1.csv").read_bytes())

    def test_missing_summary_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError, match="no sweep summary"):
            load_summary(tmp_path)


class TestFailurePersistence:
    def test_partial_results_persisted(self, small_ini, tmp_path):
        from vpfp.harness import SweepError

        cfg = parse_config_file(small_ini)
        # amplitude 2 passes the fluid reference (a warning only) but fails
        # the kinetic positivity check, so the first kinetic run aborts
        cfg["sweep"]["amplitude"] = 2.0
        cfg["solver"]["t_final"] = 0.05
        sweep_cfg = SweepConfig.from_dict(cfg, out_dir=tmp_path / "out")
        with pytest.warns(RuntimeWarning), pytest.raises(SweepError) as info:
            run_sweep(sweep_cfg)
        partial = info.value.partial
        assert partial.per_epsilon == []
        assert partial.incomplete and partial.incomplete[0]["epsilon"] == 0.2
        summary = load_summary(tmp_path / "out")
        assert summary["incomplete"][0]["epsilon"] == 0.2


class TestCli:
    def test_check_command(self, capsys):
        assert main(["--quiet", "check"]) == EXIT_OK

    def test_check_prints_battery(self, capsys):
        assert main(["check"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_run_vpfp(self, small_ini, tmp_path):
        code = main(["--config", str(small_ini), "--out", str(tmp_path), "--quiet", "run"])
        assert code == EXIT_OK
        assert (tmp_path / "run_eps_0.1.csv").exists()

    def test_run_ddp(self, small_ini, tmp_path):
        ini = tmp_path / "ddp.ini"
        ini.write_text(SMALL_INI + "\n[solver]\nsystem = ddp\n"
                       if "[solver]" not in SMALL_INI else
                       SMALL_INI.replace("[solver]", "[solver]\nsystem = ddp"))
        code = main(["--config", str(ini), "--out", str(tmp_path), "--quiet", "run"])
        assert code == EXIT_OK

    def test_sweep_and_report(self, small_ini, tmp_path, capsys):
        assert main(["--config", str(small_ini), "--out", str(tmp_path), "--quiet",
                     "sweep"]) == EXIT_OK
        assert (tmp_path / "summary.json").exists()
        assert main(["--config", str(small_ini), "--out", str(tmp_path), "report"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "pairwise rates" in out
        assert (tmp_path / "metrics.csv").exists()

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[grid]\nn_z = 8\n")
        assert main(["--config", str(bad), "--quiet", "run"]) == EXIT_CONFIG_ERROR

    def test_run_failure_exit_code(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[sweep]\namplitude = 10.0\n[solver]\nt_final = 0.05\n"
                       "[grid]\nn_x = 32\nn_v = 16\n")
        # amplitude 10 violates positivity of the reconstructed distribution
        assert main(["--config", str(bad), "--out", str(tmp_path), "--quiet",
                     "run"]) == EXIT_RUN_FAILURE

    def test_report_without_sweep_is_config_error(self, tmp_path):
        assert main(["--out", str(tmp_path), "--quiet", "report"]) == EXIT_CONFIG_ERROR
