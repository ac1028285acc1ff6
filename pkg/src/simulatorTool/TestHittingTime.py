import unittest

from src.misc.errors import ConfigError, DomainError
from src.misc.parser import Parser
from src.modelTool.distributions import Deterministic, Exponential
from src.modelTool.rate_functions import Linear, LogE
from src.simulatorTool.greedy import Greedy
from src.simulatorTool.hitting_time import hitting_time_stats
from src.simulatorTool.simulator import ScenarioConfig
from src.simulatorTool.throughput_optimal import (
    ModifiedThroughputOptimal,
    ThroughputOptimal,
    UnfadedThroughputOptimal,
)


class TestHittingTime(unittest.TestCase):

    def setUp(self):
        self.parser = Parser()

    def test_full_harvest_returns_every_slot(self):
        cfg = ScenarioConfig(arrival=Deterministic(0.0), harvest=Deterministic(5.0), rf=Linear(1.0),
                             policy=ThroughputOptimal(0.05), energy_cap=5.0, horizon=1_000, replications=1)
        report = hitting_time_stats(cfg)
        self.assertEqual(report.returns, 999)
        self.assertEqual(report.mean_tau, 1.0)
        self.assertEqual(report.mean_tau_sq, 1.0)
        self.assertFalse(report.inconclusive)

    def test_second_moment_settles(self):
        overrides = {"policy": "TO", "epsilon": 0.2, "replications": 1}
        short = self.parser.load_preset("fig2", {**overrides, "horizon": 100_000}).template
        long = self.parser.load_preset("fig2", {**overrides, "horizon": 200_000}).template
        first = hitting_time_stats(short.with_arrival_mean(0.5))
        second = hitting_time_stats(long.with_arrival_mean(0.5))
        self.assertFalse(first.inconclusive)
        self.assertLess(abs(second.mean_tau_sq - first.mean_tau_sq), 0.1 * first.mean_tau_sq)

    def test_overload_is_inconclusive(self):
        cfg = ScenarioConfig(arrival=Exponential(3.0), harvest=Exponential(1.0), rf=LogE(1.0),
                             policy=ThroughputOptimal(0.01), energy_cap=5.0, horizon=20_000, replications=1)
        report = hitting_time_stats(cfg)
        self.assertTrue(report.inconclusive)
        self.assertLess(report.returns, 30)

    def test_needs_a_finite_energy_buffer(self):
        cfg = ScenarioConfig(arrival=Exponential(1.0), harvest=Exponential(1.0), rf=LogE(1.0),
                             policy=ThroughputOptimal(0.01), horizon=1_000, replications=1)
        with self.assertRaises(ConfigError):
            hitting_time_stats(cfg)

    def test_only_defined_for_to(self):
        base = dict(arrival=Exponential(0.5), harvest=Exponential(1.0), rf=LogE(1.0), energy_cap=5.0,
                    horizon=1_000, replications=1)
        for policy in (Greedy(), ModifiedThroughputOptimal()):
            with self.assertRaises(DomainError):
                hitting_time_stats(ScenarioConfig(policy=policy, **base))
        report = hitting_time_stats(ScenarioConfig(policy=UnfadedThroughputOptimal(0.01), **base))
        self.assertEqual(report.horizon, 1_000)


if __name__ == "__main__":
    unittest.main()
