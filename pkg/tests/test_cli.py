import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from qrcsas import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
COMMANDS = list(cli.COMMANDS)


def run(tmp_path, *argv, config=None):
    out = tmp_path / "out"
    args = list(argv) + ["--out", str(out), "--jobs", "1"]
    if config is not None:
        args += ["--config", str(CONFIGS / config)]
    code = cli.main(args)
    summary = out / "summary.json"
    return code, (json.loads(summary.read_text()) if summary.exists() else None), out


def write_cfg(tmp_path, text):
    path = tmp_path / "cfg.yaml"
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_help_lists_everything():
    out = subprocess.run([sys.executable, "-m", "qrcsas", "--help"], capture_output=True, text=True, check=True).stdout
    for name in COMMANDS:
        assert name in out
    sub = subprocess.run(
        [sys.executable, "-m", "qrcsas", "fig2", "--help"], capture_output=True, text=True, check=True
    ).stdout
    for flag in ["--config", "--out", "--seed", "--jobs", "--fast", "--tol"]:
        assert flag in sub


class TestConfigErrors:
    def test_malformed_yaml(self, tmp_path):
        cfg = write_cfg(tmp_path, "model: [unclosed\n")
        assert cli.main(["esp-check", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_unknown_key(self, tmp_path):
        cfg = write_cfg(tmp_path, "model: {type: stm, epsilon: 0.2, g: 1.0}\nbogus: 1\n")
        assert cli.main(["esp-check", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_missing_model(self, tmp_path):
        assert cli.main(["esp-check", "--out", str(tmp_path)]) == 2

    def test_missing_file(self, tmp_path):
        assert cli.main(["esp-check", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == 2

    def test_negative_seed(self, tmp_path):
        assert cli.main(["fig2", "--seed", "-1", "--out", str(tmp_path)]) == 2

    def test_identical_generator_is_a_usage_error(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "model: {type: stm, epsilon: 0.5, g: 1.0}\ncounterexample: {generator: identical, trials: 5}\n",
        )
        assert cli.main(["counterexample", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_code(tmp_path):
    cfg = write_cfg(
        tmp_path,
        "model:\n  type: stages\n  stages:\n    - {channel: rotation, axis: y, angle: {input: 0}}\n"
        "domain: {lo: 0.0, hi: 1.0}\n",
    )
    assert cli.main(["fixed-point", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_sas_extract_reset_offset(tmp_path):
    code, summary, out = run(tmp_path, "sas-extract", config="reset_depolarizing.yaml")
    assert code == 0 and summary["verdict"] == "extracted"
    rows = read_csv(out / "q.csv")
    assert rows[0] == ["z", "q_1", "q_2", "q_3"]
    q = np.array(rows[1:], dtype=float)
    np.testing.assert_allclose(q[:, 1:], np.tile([0, 0, 0.5 / math.sqrt(2)], (len(q), 1)), atol=1e-12)
    p = read_csv(out / "p.csv")
    assert p[0][:3] == ["z", "p_1_1", "p_1_2"] and len(p[0]) == 10


def test_esp_check(tmp_path):
    code, summary, out = run(tmp_path, "esp-check", config="reset_depolarizing.yaml")
    assert code == 0 and summary["passed"] is True
    assert summary["details"]["max_norm"] == pytest.approx(0.5)


def test_constant_filter_reports_states(tmp_path):
    code, summary, _ = run(tmp_path, "constant-filter", config="reset_dephasing.yaml")
    d = summary["details"]
    assert code == 0 and summary["verdict"] == "constant" and d["trajectories_collapse"]
    rho_t = np.array(d["rho_T"]["re"]) + 1j * np.array(d["rho_T"]["im"])
    np.testing.assert_allclose(rho_t, [[0.5, 1 / 3], [1 / 3, 0.5]], atol=1e-8)
    for key in ["rho_prime", "rho_E", "rho_prime_defect"]:
        assert key in d


def test_local_and_global_injectivity(tmp_path):
    code, summary, _ = run(tmp_path, "local-injectivity", config="periodic.yaml")
    assert code == 0 and summary["verdict"] == "full-rank"
    code, summary, out = run(tmp_path, "injectivity-scan", config="reset_depolarizing.yaml")
    assert code == 0 and summary["verdict"] == "certified-on-samples"
    assert summary["details"]["evidence"] == "sampling, not proof"
    assert read_csv(out / "rank.csv")[0][-3:] == ["norm", "rank", "min_singular_value"]


def test_preimage_two_clusters(tmp_path):
    code, summary, _ = run(tmp_path, "preimage", config="periodic_preimage.yaml")
    assert code == 0 and summary["verdict"] == "2-cluster"
    np.testing.assert_allclose(np.ravel(summary["details"]["representatives"]), [0, 2 * math.pi])


def test_counterexample_witness(tmp_path):
    code, summary, out = run(tmp_path, "counterexample", config="periodic.yaml")
    assert code == 1 and summary["verdict"] == "witness-found"
    assert summary["details"]["output_gap"] < 1e-10
    assert (out / "witness.csv").exists()


def test_summary_schema_and_files(tmp_path):
    _, summary, out = run(tmp_path, "fixed-point", config="lindblad.yaml")
    jsonschema.validate(summary, cli.SUMMARY_SCHEMA)
    for name in summary["files"]:
        assert (out / name).exists()


def test_seed_determinism(tmp_path):
    a = run(tmp_path / "a", "counterexample", "--seed", "11", config="reset_depolarizing.yaml")[1]
    b = run(tmp_path / "b", "counterexample", "--seed", "11", config="reset_depolarizing.yaml")[1]
    assert a == b and a["seed"] == 11


def test_fig1_small(tmp_path):
    cfg = write_cfg(tmp_path, "fig1: {resolution: 11}\n")
    code, summary, out = run(tmp_path, "fig1", "--config", cfg)
    assert code == 0 and summary["details"]["grid"] == [11, 11]
    assert len(read_csv(out / "fig1.csv")) == 1 + 121


def test_fig2_fast(tmp_path):
    code, summary, out = run(tmp_path, "fig2", "--fast", config="stm.yaml")
    assert code == 0 and summary["details"]["realizations"] == 10
    rows = read_csv(out / "fig2.csv")
    assert rows[0] == ["epsilon", "g", "mean_C", "std_C", "n_realizations"]
    assert len(rows) == 4
