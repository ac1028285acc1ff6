import unittest

import numpy as np

from src.simulatorTool.stability import MIN_TRACE_LENGTH, Verdict, classify_stability


class TestStability(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(4)

    def test_linear_growth_is_unstable(self):
        result = classify_stability(np.arange(MIN_TRACE_LENGTH, dtype=float), arrival_mean=1.0)
        self.assertEqual(result.verdict, Verdict.UNSTABLE)
        self.assertAlmostEqual(result.slope, 1.0, places=9)

    def test_bounded_noise_is_stable(self):
        trace = self.rng.uniform(0.0, 1.0, MIN_TRACE_LENGTH)
        result = classify_stability(trace, arrival_mean=0.5)
        self.assertEqual(result.verdict, Verdict.STABLE)

    def test_slow_drift_is_inconclusive(self):
        # slope 0.01 lies between the stable and unstable thresholds for E[X] = 1
        trace = 0.01 * np.arange(MIN_TRACE_LENGTH) + self.rng.uniform(0.0, 1.0, MIN_TRACE_LENGTH)
        self.assertEqual(classify_stability(trace, arrival_mean=1.0).verdict, Verdict.INCONCLUSIVE)

    def test_short_traces_are_inconclusive(self):
        self.assertEqual(classify_stability(np.arange(5_000, dtype=float), 1.0).verdict, Verdict.INCONCLUSIVE)
        self.assertEqual(classify_stability([], 1.0).verdict, Verdict.INCONCLUSIVE)

    def test_zero_arrivals(self):
        self.assertEqual(classify_stability(np.zeros(MIN_TRACE_LENGTH), 0.0).verdict, Verdict.STABLE)

    def test_verdict_prints_its_name(self):
        self.assertEqual(str(Verdict.UNSTABLE), "UNSTABLE")


if __name__ == "__main__":
    unittest.main()
