import contextlib
import io
import json
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import pandas as pd

from src.analysisTool.mdp import StructureReport, Violation
from src.analysisTool.sweep import SWEEP_COLUMNS
from src.main import main
from src.misc.results import manifest_path


class TestMain(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write_config(self, **data):
        path = self.dir / "scenario.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    def call(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            code = main(list(argv))
        return code, stdout.getvalue(), stderr.getvalue()

    def test_thresholds(self):
        out = str(self.dir / "thresholds.csv")
        code, stdout, _ = self.call("thresholds", "--preset", "fig9", "--out", out)
        self.assertEqual(code, 0)
        frame = pd.read_csv(out)
        self.assertIn("wf_boundary", list(frame["key"]))
        self.assertIn("Jensen", stdout)
        manifest = json.loads(manifest_path(out).read_text(encoding="utf-8"))
        self.assertEqual(manifest["exit_code"], 0)
        self.assertEqual(manifest["preset"], "fig9")

    def test_simulate(self):
        config = self.write_config(preset="fig5", policy="TO", horizon=2_000, replications=2)
        out = str(self.dir / "simulate.csv")
        code, _, _ = self.call("simulate", "--config", config, "--out", out, "--load", "1.5")
        self.assertEqual(code, 0)
        frame = pd.read_csv(out)
        self.assertEqual(list(frame.columns), SWEEP_COLUMNS)
        self.assertEqual(len(frame), 3)
        self.assertEqual(frame["ex_mean"].iloc[-1], 1.5)

    def test_sweep_with_policy_override(self):
        config = self.write_config(preset="fig5", horizon=2_000, replications=1, sweep={"loads": [0.5, 1.0]})
        out = str(self.dir / "sweep.csv")
        code, _, _ = self.call("sweep", "--config", config, "--policies", "TO,GREEDY", "--out", out)
        self.assertEqual(code, 0)
        frame = pd.read_csv(out)
        self.assertEqual(sorted(set(frame["policy"])), ["GREEDY", "TO"])
        self.assertEqual(len(frame), 8)

    def test_mdp_solve(self):
        out = str(self.dir / "table.csv")
        code, _, _ = self.call("mdp-solve", "--preset", "linear-small", "--alpha", "0.9", "--out", out)
        self.assertEqual(code, 0)
        self.assertEqual(len(pd.read_csv(out)), 21 * 21)

    def test_mdp_check_passes_for_linear_rate(self):
        out = str(self.dir / "check.csv")
        code, stdout, _ = self.call("mdp-check", "--preset", "linear-small", "--out", out)
        self.assertEqual(code, 0)
        self.assertEqual(len(pd.read_csv(out)), 0)

    def test_mdp_check_violation_exit_code(self):
        out = str(self.dir / "check.csv")
        report = StructureReport((Violation(0.9, "decreasing_in_q", 3.0, 1.0, 0.5),), {0.999: 0.01}, True)
        with mock.patch("src.main.structure_checks", return_value=report):
            code, _, stderr = self.call("mdp-check", "--preset", "linear-small", "--out", out)
        self.assertEqual(code, 3)
        self.assertEqual(json.loads(stderr.strip().splitlines()[-1])["error"], "CheckViolation")
        self.assertEqual(len(pd.read_csv(out)), 1)
        self.assertEqual(json.loads(manifest_path(out).read_text(encoding="utf-8"))["exit_code"], 3)

    def test_hitting_time(self):
        config = self.write_config(preset="fig2", policy="TO", epsilon=0.2, horizon=5_000)
        out = str(self.dir / "hitting.csv")
        code, _, _ = self.call("hitting-time", "--config", config, "--out", out)
        self.assertEqual(code, 0)
        frame = pd.read_csv(out)
        self.assertIn("mean_tau_sq", list(frame["key"]))

    def test_config_error_exit_code(self):
        config = self.write_config(preset="fig5", arrivals={"family": "exponential", "mean": 1.0})
        code, _, stderr = self.call("simulate", "--config", config, "--out", str(self.dir / "x.csv"))
        self.assertEqual(code, 2)
        record = json.loads(stderr.strip().splitlines()[-1])
        self.assertEqual(record["error"], "ConfigError")
        self.assertEqual(record["key"], "arrivals")
        self.assertEqual(record["exit_code"], 2)

    def test_missing_source(self):
        code, _, _ = self.call("thresholds")
        self.assertEqual(code, 2)

    def test_unknown_preset(self):
        code, _, _ = self.call("thresholds", "--preset", "fig99")
        self.assertEqual(code, 2)


if __name__ == "__main__":
    unittest.main()
