import math
import unittest

from src.analysisTool.thresholds import thresholds
from src.misc.parser import Parser
from src.modelTool.distributions import Deterministic, Exponential
from src.modelTool.rate_functions import Linear, LogE
from src.simulatorTool.greedy import Greedy
from src.simulatorTool.simulator import ScenarioConfig


class TestThresholds(unittest.TestCase):

    def setUp(self):
        self.parser = Parser()

    def preset(self, name):
        return thresholds(self.parser.load_preset(name).template)

    def test_exponential_harvest_log_rate(self):
        report = self.preset("fig5")
        self.assertAlmostEqual(report.E_g_of_Y, 2.01, delta=0.02)
        self.assertAlmostEqual(report.g_of_EY, math.log(11.0), places=12)
        self.assertAlmostEqual(report.to_boundary, math.log(10.9), places=12)
        self.assertIsNone(report.E_g_of_hY)
        self.assertTrue(report.jensen_holds())

    def test_erlang_harvest_log_rate(self):
        self.assertAlmostEqual(self.preset("fig6").E_g_of_Y, 2.32, delta=0.02)

    def test_fading_log_rate(self):
        report = self.preset("fig9")
        self.assertAlmostEqual(report.E_g_of_hY, 0.62, delta=0.02)
        self.assertAlmostEqual(report.E_g_of_hEY, 0.641, delta=0.002)
        self.assertAlmostEqual(report.wf_level, 0.4325, delta=1e-4)
        self.assertAlmostEqual(report.wf_boundary, 0.704, delta=0.005)
        self.assertIsNone(report.fading_to_linear_boundary)

    def test_fading_linear_rate(self):
        report = self.preset("fig7")
        self.assertAlmostEqual(report.fading_to_linear_boundary, 22.0, places=9)
        self.assertAlmostEqual(report.E_g_of_Y, report.g_of_EY, places=6)
        self.assertTrue(report.jensen_holds())

    def test_log2_truncated_poisson(self):
        report = self.preset("fig2")
        self.assertAlmostEqual(report.g_of_EY, 1.0, places=9)
        self.assertAlmostEqual(report.E_g_of_Y, 0.83, delta=0.02)

    def test_constant_harvest_has_no_jensen_gap(self):
        cfg = ScenarioConfig(arrival=Exponential(0.5), harvest=Deterministic(1.0), rf=LogE(1.0), policy=Greedy())
        report = thresholds(cfg)
        self.assertTrue(report.degenerate_harvest)
        self.assertAlmostEqual(report.E_g_of_Y, report.g_of_EY, places=12)
        self.assertTrue(report.jensen_holds())

    def test_as_frame(self):
        cfg = ScenarioConfig(arrival=Exponential(0.5), harvest=Exponential(1.0), rf=Linear(10.0), policy=Greedy())
        frame = thresholds(cfg).as_frame()
        self.assertEqual(list(frame.columns), ["key", "value"])
        self.assertEqual(list(frame["key"]), ["g_of_EY", "to_boundary", "E_g_of_Y"])


if __name__ == "__main__":
    unittest.main()
