import math
import unittest

import numpy as np

from src.misc.errors import ConfigError, DomainError
from src.modelTool.distributions import DiscretePmf
from src.modelTool.rate_functions import (
    Linear,
    Log2,
    LogE,
    ShannonHalfLog,
    g_eval,
    g_inverse,
    rate_function_from_dict,
    waterfill_allocation,
    waterfill_level,
    waterfill_rate,
)


class TestRateFunctions(unittest.TestCase):

    def setUp(self):
        self.families = [Linear(10.0), LogE(1.0), Log2(1.0), ShannonHalfLog(2.0)]

    def test_g_of_zero_is_zero(self):
        for rf in self.families:
            self.assertEqual(rf.evaluate(0.0), 0.0)

    def test_examples(self):
        self.assertAlmostEqual(g_eval(Linear(10.0), 0.5), 5.0)
        self.assertAlmostEqual(g_eval(LogE(1.0), 10.0), math.log(11.0))
        self.assertAlmostEqual(g_eval(Log2(1.0), 1.0), 1.0)
        self.assertAlmostEqual(g_inverse(Linear(10.0), 5.0), 0.5)
        self.assertAlmostEqual(g_inverse(LogE(1.0), math.log(11.0)), 10.0, places=12)
        self.assertAlmostEqual(g_inverse(Log2(1.0), 1.0), 1.0, places=12)

    def test_inverse_round_trips(self):
        for rf in self.families:
            for x in (0.01, 0.5, 3.0, 40.0):
                self.assertAlmostEqual(rf.inverse(rf.evaluate(x)), x, delta=1e-9 * max(1.0, x))

    def test_concave_and_nondecreasing(self):
        grid = np.linspace(0.0, 20.0, 201)
        for rf in self.families:
            values = np.array([rf.evaluate(x) for x in grid])
            self.assertTrue(np.all(np.diff(values) >= 0))
            self.assertTrue(np.all(np.diff(values, 2) <= 1e-12))

    def test_inverse_overflow(self):
        self.assertTrue(math.isinf(LogE(1.0).inverse(1000.0)))
        with self.assertRaises(DomainError):
            g_inverse(LogE(1.0), 1000.0)

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            g_eval(LogE(1.0), -1.0)
        with self.assertRaises(DomainError):
            g_inverse(Linear(1.0), -0.5)
        with self.assertRaises(DomainError):
            Linear(0.0)

    def test_from_dict(self):
        self.assertEqual(rate_function_from_dict({"family": "log_e", "coefficient": 2.0}), LogE(2.0))
        self.assertEqual(rate_function_from_dict({"family": "linear", "coefficient": 10}), Linear(10.0))
        with self.assertRaises(ConfigError):
            rate_function_from_dict({"family": "cubic"})
        with self.assertRaises(ConfigError):
            rate_function_from_dict({"family": "log2", "beta": 1.0})


class TestWaterFilling(unittest.TestCase):

    def setUp(self):
        self.fading = DiscretePmf((0.1, 0.5, 1.0, 2.2), (0.1, 0.3, 0.4, 0.2))

    def test_level_matches_closed_form(self):
        # at budget 0.99 the three strongest states are active
        expected = 0.9 / (0.99 + 0.3 / 0.5 + 0.4 / 1.0 + 0.2 / 2.2)
        self.assertAlmostEqual(waterfill_level(self.fading, 0.99), expected, delta=1e-9)

    def test_allocation_skips_weak_states(self):
        h0 = waterfill_level(self.fading, 0.99)
        allocation = waterfill_allocation(self.fading, h0)
        self.assertEqual(allocation[0.1], 0.0)
        self.assertGreater(allocation[0.5], 0.0)
        self.assertGreater(allocation[2.2], allocation[1.0])

    def test_budget_is_spent_exactly(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            size = int(rng.integers(2, 7))
            gains = rng.uniform(0.05, 3.0, size)
            probs = rng.dirichlet(np.ones(size))
            probs[-1] = 1.0 - probs[:-1].sum()
            fading = DiscretePmf(tuple(gains), tuple(probs))
            budget = float(rng.uniform(0.1, 3.0))
            h0 = waterfill_level(fading, budget)
            spent = float(np.sum(probs * np.maximum(1.0 / h0 - 1.0 / gains, 0.0)))
            self.assertAlmostEqual(spent, budget, delta=1e-9)

    def test_zero_gain_states_get_nothing(self):
        fading = DiscretePmf((0.0, 1.0), (0.5, 0.5))
        h0 = waterfill_level(fading, 1.0)
        self.assertAlmostEqual(h0, 1.0 / 3.0, places=12)
        self.assertEqual(waterfill_allocation(fading, h0)[0.0], 0.0)

    def test_rate(self):
        h0 = waterfill_level(self.fading, 0.99)
        self.assertAlmostEqual(waterfill_rate(self.fading, h0, LogE(1.0)), 0.704, delta=0.005)

    def test_rejects_all_zero_gains(self):
        with self.assertRaises(DomainError):
            waterfill_level(DiscretePmf((0.0,), (1.0,)), 1.0)


if __name__ == "__main__":
    unittest.main()
