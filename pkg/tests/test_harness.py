import json
import subprocess
import sys

import numpy as np
import pytest

from relayneut.harness import (CSV_COLUMNS, ConfigError, ExperimentConfig, parse_db_range,
                               replay_table1, run_sweep, table1_path, to_csv, to_json)
from relayneut.harness.cli import main
from relayneut.harness.selfcheck import run_checks


@pytest.fixture(scope="module")
def small_result():
    cfg = ExperimentConfig(M=4, trials=3, values=(0.0, 15.0, 30.0), seed=11)
    return run_sweep(cfg)


class TestConfig:
    def test_db_range_inclusive(self):
        assert parse_db_range("0:30:5") == (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
        assert parse_db_range("1.5:2.5:0.5") == (1.5, 2.0, 2.5)

    @pytest.mark.parametrize("text", ["0:30", "a:b:c", "5:0:1", "0:10:0"])
    def test_db_range_errors(self, text):
        with pytest.raises(ConfigError):
            parse_db_range(text)

    @pytest.mark.parametrize("kw", [dict(algorithms=()), dict(algorithms=("magic",)),
                                    dict(algorithms=("effin", "effin")),
                                    dict(values=(10.0, 5.0)), dict(trials=0),
                                    dict(sweep="noise"), dict(K=1),
                                    dict(distribution="cauchy"), dict(format="xml")])
    def test_validation(self, kw):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw).validate()

    def test_aliases_and_powers(self):
        cfg = ExperimentConfig(sweep="tx", distribution="cgauss", relay_db=23.0)
        assert cfg.sweep == "tx_power_db" and cfg.distribution == "complex_gaussian"
        assert cfg.point_powers(7.0) == (7.0, 23.0)
        assert ExperimentConfig().point_powers(7.0) == (10.0, 7.0)

    def test_dict_round_trip(self, tmp_path):
        cfg = ExperimentConfig(K=3, M=4, N=3, trials=5, algorithms=("effin", "ic-os"))
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert ExperimentConfig.from_json(path) == cfg

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            ExperimentConfig.from_dict({"K": 2, "colour": "red"})

    def test_bad_json_names_line(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{\n "K": 2,\n "M": }')
        with pytest.raises(ConfigError, match="line 3"):
            ExperimentConfig.from_json(path)

    def test_empty_algorithms_before_compute(self):
        with pytest.raises(ConfigError):
            run_sweep(ExperimentConfig(algorithms=(), trials=10 ** 9))


class TestSweep:
    def test_shape_and_bounds(self, small_result):
        rows = small_result.rows
        assert len(rows) == 6 * 3
        for r in rows:
            assert 0.0 <= r.feasible_frac <= 1.0 and r.trials == 3 and r.seed == 11

    def test_paired_seeds(self, small_result):
        # IC does not depend on relay power, so paired channels give identical samples
        s = small_result.samples
        np.testing.assert_array_equal(s["ic-fs", 0.0], s["ic-fs", 30.0])

    def test_optin_not_below_effin(self, small_result):
        for db in (0.0, 15.0, 30.0):
            assert (small_result.row("optin", db).mean_sum_secrecy
                    >= small_result.row("effin", db).mean_sum_secrecy - 1e-9)

    def test_infeasible_counted_as_zero(self, small_result):
        r = small_result.row("effin", 0.0)
        assert r.feasible_frac == 0.0 and r.mean_sum_secrecy == 0.0

    def test_deterministic_csv(self):
        cfg = ExperimentConfig(M=2, trials=1, values=(20.0,), seed=4)
        assert to_csv(run_sweep(cfg)) == to_csv(run_sweep(cfg))

    def test_curve(self, small_result):
        x, y = small_result.curve("ic-os")
        np.testing.assert_array_equal(x, [0.0, 15.0, 30.0])
        assert y.shape == (3,)


class TestEmit:
    def test_csv_header(self, small_result):
        text = to_csv(small_result)
        assert text.splitlines()[0] == ("algorithm,sweep_db,mean_sum_secrecy,stderr,"
                                        "feasible_frac,mean_relay_power,trials,seed")
        assert ",".join(CSV_COLUMNS) == text.splitlines()[0]

    def test_csv_numbers_exact(self, small_result):
        line = to_csv(small_result).splitlines()[1].split(",")
        r = small_result.rows[0]
        assert float(line[2]) == r.mean_sum_secrecy and float(line[3]) == r.stderr

    def test_json_round_trip(self, small_result):
        doc = json.loads(to_json(small_result))
        assert doc["config"]["trials"] == 3
        for got, r in zip(doc["results"], small_result.rows):
            assert got["mean_sum_secrecy"] == r.mean_sum_secrecy
            assert got["mean_relay_power"] == r.mean_relay_power
        assert ExperimentConfig.from_dict(doc["config"]) == small_result.config


class TestReplay:
    def test_packaged_fixture(self):
        rep = replay_table1()
        assert rep.passed and len(rep.rows) == 3
        assert rep.min_norm_max_entry_error <= 1e-3
        assert "PASS" in rep.format()

    def test_missing_fixture(self, tmp_path):
        with pytest.raises(OSError):
            replay_table1(tmp_path / "nope.json")

    def test_fixture_is_packaged(self):
        assert table1_path().is_file()


class TestCli:
    def test_sweep_to_file(self, tmp_path):
        out = tmp_path / "r.csv"
        code = main(["sweep", "--k", "2", "--m", "2", "--n", "2", "--db-range", "10:20:10",
                     "--trials", "2", "--algos", "effin,ic-fs", "--out", str(out)])
        assert code == 0
        assert len(out.read_text().splitlines()) == 1 + 2 * 2

    def test_json_format(self, tmp_path, capsys):
        code = main(["sweep", "--m", "2", "--db-range", "20:20:1", "--trials", "1",
                     "--algos", "ic-os", "--format", "json"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["results"][0]["algorithm"] == "ic-os"

    def test_config_file_with_override(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"M": 2, "trials": 1, "values": [5.0],
                                   "algorithms": ["ic-fs"]}))
        out = tmp_path / "o.csv"
        assert main(["sweep", "--config", str(cfg), "--seed", "9", "--out", str(out)]) == 0
        assert out.read_text().splitlines()[1].endswith(",1,9")

    @pytest.mark.parametrize("argv", [["sweep", "--algos", ""],
                                      ["sweep", "--algos", "effin,bogus"],
                                      ["sweep", "--db-range", "3:1:1"],
                                      ["sweep", "--trials", "0"],
                                      ["sweep", "--dist", "laplace"],
                                      ["frobnicate"]])
    def test_config_errors(self, argv):
        with pytest.raises(SystemExit) as exc:
            code = main(argv)
            raise SystemExit(code)
        assert exc.value.code == 1

    def test_runtime_error(self, tmp_path):
        assert main(["sweep", "--m", "2", "--trials", "1", "--algos", "ic-fs",
                     "--db-range", "0:0:1", "--out", str(tmp_path / "no" / "x.csv")]) == 2

    def test_replay_and_missing_fixture(self, tmp_path, capsys):
        assert main(["replay-table1"]) == 0
        assert "PASS" in capsys.readouterr().out
        assert main(["replay-table1", "--fixture", str(tmp_path / "missing.json")]) == 2

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "relayneut", "replay-table1"],
                              capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0 and "PASS" in proc.stdout


class TestSelfCheck:
    def test_all_checks_pass(self):
        results = run_checks(0)
        assert len(results) >= 7
        assert all(ok for _, ok, _ in results), results
