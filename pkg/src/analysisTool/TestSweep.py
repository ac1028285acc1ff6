import math
import unittest

import pandas as pd

from src.analysisTool.sweep import (
    AGGREGATE,
    FAILED,
    SENSING_COLUMNS,
    SWEEP_COLUMNS,
    aggregate_rows,
    sensing_sweep,
    sweep,
)
from src.misc.errors import ConfigError
from src.misc.parser import Parser
from src.simulatorTool.greedy import Greedy
from src.simulatorTool.optimal_table import MdpTablePolicy
from src.simulatorTool.throughput_optimal import ThroughputOptimal


class TestSweep(unittest.TestCase):

    def setUp(self):
        self.parser = Parser()
        self.template = self.parser.load_preset("fig5", {"horizon": 5_000, "replications": 2}).template
        self.policies = [ThroughputOptimal(0.1), Greedy()]

    def test_layout(self):
        frame = sweep(self.template, self.policies, [0.5, 1.0])
        self.assertEqual(list(frame.columns), SWEEP_COLUMNS)
        # two policies x two loads x (two replications + aggregate)
        self.assertEqual(len(frame), 12)
        self.assertEqual(list(frame["policy"]), ["TO"] * 6 + ["GREEDY"] * 6)
        self.assertEqual(list(frame["replication"][:3]), [0, 1, AGGREGATE])
        self.assertTrue(frame["ci_half_width"][:2].isna().all())
        self.assertFalse(math.isnan(frame["ci_half_width"][2]))
        self.assertEqual(len(aggregate_rows(frame)), 4)

    def test_reproducible(self):
        pd.testing.assert_frame_equal(sweep(self.template, self.policies, [1.0]),
                                      sweep(self.template, self.policies, [1.0]))

    def test_workers_do_not_change_the_result(self):
        serial = sweep(self.template, self.policies, [0.5, 1.0])
        parallel = sweep(self.template, self.policies, [0.5, 1.0], jobs=2)
        pd.testing.assert_frame_equal(serial, parallel)

    def test_cell_seed_does_not_depend_on_the_grid(self):
        alone = aggregate_rows(sweep(self.template, [Greedy()], [1.0]))
        together = aggregate_rows(sweep(self.template, self.policies, [0.5, 1.0]))
        cell = together[(together["policy"] == "GREEDY") & (together["ex_mean"] == 1.0)]
        self.assertEqual(float(alone["mean_queue"][0]), float(cell["mean_queue"].iloc[0]))

    def test_failed_cell_keeps_the_sweep_going(self):
        # MDP_OPTIMAL cannot be solved on an unquantized scenario
        frame = sweep(self.template, [MdpTablePolicy(), Greedy()], [1.0])
        failed = frame[frame["verdict"] == FAILED]
        self.assertEqual(len(failed), 1)
        self.assertEqual(failed["policy"].iloc[0], "MDP_OPTIMAL")
        self.assertEqual(len(frame[frame["policy"] == "GREEDY"]), 3)

    def test_grid_must_increase(self):
        with self.assertRaises(ConfigError):
            sweep(self.template, self.policies, [1.0, 0.5])
        with self.assertRaises(ConfigError):
            sweep(self.template, self.policies, [])


class TestQuantizedSweep(unittest.TestCase):
    """Log2 rate with truncated-Poisson sources: the solved MDP policy against TO and Greedy."""

    def setUp(self):
        experiment = Parser().load_preset("fig2", {"replications": 2})
        self.frame = aggregate_rows(sweep(experiment.template, experiment.policies, [0.3, 0.7, 0.9, 0.95]))

    def cell(self, policy, load):
        rows = self.frame[(self.frame["policy"] == policy) & ((self.frame["ex_mean"] - load).abs() < 1e-6)]
        return rows.iloc[0]

    def test_optimal_policy_is_never_beaten(self):
        for load in (0.7, 0.9):
            optimal, to = self.cell("MDP_OPTIMAL", load), self.cell("TO", load)
            self.assertLessEqual(optimal["mean_queue"],
                                 to["mean_queue"] + optimal["ci_half_width"] + to["ci_half_width"], load)

    def test_greedy_collapses_near_the_boundary(self):
        self.assertGreaterEqual(self.cell("GREEDY", 0.95)["mean_queue"], 5 * self.cell("TO", 0.95)["mean_queue"])

    def test_greedy_wins_at_low_load(self):
        self.assertLess(self.cell("GREEDY", 0.3)["mean_queue"], self.cell("TO", 0.3)["mean_queue"])


class TestSensingSweep(unittest.TestCase):

    def setUp(self):
        self.template = Parser().load_preset("sensing", {"replications": 1}).template

    def test_frontier(self):
        frame = sensing_sweep(self.template, [0.3, 0.5, 0.8])
        self.assertEqual(list(frame.columns), SENSING_COLUMNS)
        self.assertAlmostEqual(frame["frontier"][0], 1.0 - 0.01 - 0.3)
        self.assertEqual(list(frame["energy_feasible"]), [True, True, False])
        self.assertAlmostEqual(frame["rate_at_c"][0], math.log(1.3))
        self.assertLess(frame["sensing_outage_fraction"][1], 1e-3)
        self.assertGreater(frame["sensing_outage_fraction"][2], 0.05)

    def test_prediction_needs_the_rate_too(self):
        # c = 0.3 leaves enough energy for sensing, but g(0.3) < E[X] = 0.3
        frame = sensing_sweep(self.template, [0.3, 0.5, 0.8])
        self.assertEqual(list(frame["predicted_feasible"]), [False, True, False])
        self.assertLess(frame["sensing_outage_fraction"][0], 1e-3)
        self.assertNotEqual(frame["verdict"][0], "STABLE")
        self.assertEqual(frame["verdict"][1], "STABLE")

    def test_needs_sensing(self):
        template = Parser().load_preset("fig5").template
        with self.assertRaises(ConfigError):
            sensing_sweep(template, [0.5])


if __name__ == "__main__":
    unittest.main()
