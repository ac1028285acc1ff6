import json
import math
import tempfile
import unittest
from pathlib import Path

from src.misc.errors import ConfigError
from src.misc.parser import Parser, parse_config
from src.misc.presets import PRESETS, preset_dict, preset_names
from src.misc.results import RunManifest, manifest_path, scenario_dict
from src.modelTool.distributions import Erlang, Exponential
from src.modelTool.rate_functions import LogE
from src.simulatorTool.greedy import ConstantPower, Greedy
from src.simulatorTool.throughput_optimal import ThroughputOptimal

SCENARIO = {
    "version": 1,
    "scenario_id": "unit",
    "arrival": {"family": "exponential", "mean": 1.0},
    "harvest": {"family": "erlang", "stages": 5, "mean": 10.0},
    "rate_function": {"family": "log_e", "coefficient": 1.0},
    "policies": ["TO", "GREEDY"],
    "horizon": 1000,
    "sweep": {"loads": [0.5, 1.0]},
}


class TestParser(unittest.TestCase):

    def setUp(self):
        self.parser = Parser()

    def test_parse(self):
        experiment = self.parser.parse_config(json.dumps(SCENARIO))
        cfg = experiment.template
        self.assertEqual(cfg.arrival, Exponential(1.0))
        self.assertEqual(cfg.harvest, Erlang(5, 10.0))
        self.assertEqual(cfg.rf, LogE(1.0))
        self.assertEqual(experiment.policies, [ThroughputOptimal(0.1), Greedy()])
        self.assertEqual(cfg.warmup, 100)
        self.assertEqual(cfg.replications, 10)
        self.assertTrue(math.isinf(cfg.energy_cap))
        self.assertEqual(experiment.loads, (0.5, 1.0))

    def test_unknown_key_is_named(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config(json.dumps({**SCENARIO, "arrivals": {}}))
        self.assertEqual(ctx.exception.key, "arrivals")

    def test_version(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config(json.dumps({**SCENARIO, "version": 2}))
        self.assertEqual(ctx.exception.key, "version")

    def test_invalid_json_reports_the_position(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config('{\n  "version": 1,\n  "arrival": }')
        self.assertIn("line 3", str(ctx.exception))

    def test_missing_required_key(self):
        data = dict(SCENARIO)
        del data["harvest"]
        with self.assertRaises(ConfigError) as ctx:
            parse_config(json.dumps(data))
        self.assertEqual(ctx.exception.key, "harvest")

    def test_policy_and_policies_conflict(self):
        with self.assertRaises(ConfigError):
            parse_config(json.dumps({**SCENARIO, "policy": "TO"}))

    def test_sweep_grid_must_increase(self):
        with self.assertRaises(ConfigError):
            parse_config(json.dumps({**SCENARIO, "sweep": {"loads": [1.0, 0.5]}}))

    def test_overrides_replace_policies(self):
        experiment = self.parser.parse_config(json.dumps(SCENARIO), {"policy": {"name": "CONST_POWER",
                                                                                "c_power": 0.4}})
        self.assertEqual(experiment.policies, [ConstantPower(0.4)])

    def test_overload_is_a_warning(self):
        experiment = self.parser.parse_config(json.dumps({**SCENARIO, "arrival": {"family": "exponential",
                                                                                  "mean": 3.0}}))
        self.assertEqual(len(experiment.warnings), 2)

    def test_infinite_caps(self):
        experiment = parse_config(json.dumps({**SCENARIO, "energy_cap": "inf", "data_cap": 40}))
        self.assertTrue(math.isinf(experiment.template.energy_cap))
        self.assertEqual(experiment.template.data_cap, 40.0)

    def test_load_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "scenario.json"
            path.write_text(json.dumps(SCENARIO), encoding="utf-8")
            self.assertEqual(self.parser.load_config(path).template.scenario_id, "unit")
        with self.assertRaises(ConfigError):
            self.parser.load_config(Path("does/not/exist.json"))


class TestPresets(unittest.TestCase):

    def test_every_preset_parses(self):
        parser = Parser()
        for name in preset_names():
            experiment = parser.load_preset(name)
            self.assertEqual(experiment.template.scenario_id, name)
            self.assertEqual(experiment.preset, name)

    def test_preset_dict_fills_run_lengths(self):
        data = preset_dict("fig5")
        self.assertEqual(data["version"], 1)
        self.assertEqual(data["horizon"], 100_000)
        self.assertEqual(set(PRESETS), set(preset_names()))

    def test_unknown_preset(self):
        with self.assertRaises(ConfigError):
            Parser().load_preset("fig11")

    def test_file_overrides_preset(self):
        experiment = parse_config(json.dumps({"preset": "fig5", "seed": 9, "policy": "GREEDY"}))
        self.assertEqual(experiment.template.seed, 9)
        self.assertEqual(experiment.policies, [Greedy()])
        self.assertEqual(experiment.template.harvest, Exponential(10.0))

    def test_fig2_preset_warns(self):
        self.assertEqual(len(Parser().load_preset("fig2").warnings), 1)


class TestResults(unittest.TestCase):

    def test_scenario_dict_replays(self):
        cfg = Parser().load_preset("sensing").template
        replayed = Parser().from_dict(scenario_dict(cfg)).template
        self.assertEqual(replayed, cfg)

    def test_manifest(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = str(Path(tmp) / "run.csv")
            manifest = RunManifest(command="simulate", config_path=None, preset="fig5", scenarios=[],
                                   seed=1, output_path=out, tool_version="test")
            manifest.finish(0)
            path = manifest.write()
            self.assertEqual(path, manifest_path(out))
            record = json.loads(path.read_text(encoding="utf-8"))
            self.assertEqual(record["exit_code"], 0)
            self.assertIsNotNone(record["finished_at"])


if __name__ == "__main__":
    unittest.main()
