import math
import unittest

import numpy as np

from src.misc.errors import ConfigError, DomainError
from src.modelTool.rate_functions import Linear, LogE
from src.simulatorTool.energy_policy import DecisionContext, decide, slot_waste, wasted_energy
from src.simulatorTool.greedy import ConstantPower, Greedy, Unbuffered
from src.simulatorTool.optimal_table import MdpTablePolicy
from src.simulatorTool.policies import POLICY_CLASSES, make_policy, policy_from_dict
from src.simulatorTool.throughput_optimal import (
    FadingThroughputOptimalLinear,
    ModifiedThroughputOptimal,
    ThroughputOptimal,
    UnfadedThroughputOptimal,
)
from src.simulatorTool.water_filling import ModifiedWaterFilling, WaterFilling


class TestThroughputOptimal(unittest.TestCase):

    def setUp(self):
        self.ctx = DecisionContext(q=5.0, e=20.0, ey=1.0, rf=LogE(1.0))
        self.policy = ThroughputOptimal(epsilon=0.01)

    def test_saturated_buffer_spends_ey_minus_epsilon(self):
        self.assertEqual(decide(self.policy, self.ctx), 0.99)

    def test_short_buffer_spends_everything(self):
        self.ctx.e = 0.4
        self.assertEqual(decide(self.policy, self.ctx), 0.4)

    def test_ignores_the_queue(self):
        self.ctx.q = 0.0
        self.assertEqual(decide(self.policy, self.ctx), 0.99)

    def test_unfaded_variant_ignores_the_channel(self):
        self.ctx.h = 0.1
        self.assertEqual(decide(UnfadedThroughputOptimal(epsilon=0.01), self.ctx), 0.99)

    def test_rejects_nonpositive_epsilon(self):
        with self.assertRaises(DomainError):
            ThroughputOptimal(epsilon=0.0)


class TestGreedy(unittest.TestCase):

    def setUp(self):
        self.policy = Greedy()

    def test_empties_the_queue_when_energy_allows(self):
        ctx = DecisionContext(q=math.log(11.0), e=20.0, rf=LogE(1.0))
        self.assertAlmostEqual(decide(self.policy, ctx), 10.0, places=12)

    def test_energy_limited(self):
        ctx = DecisionContext(q=5.0, e=0.3, rf=Linear(10.0))
        self.assertEqual(decide(self.policy, ctx), 0.3)

    def test_empty_queue_transmits_nothing(self):
        ctx = DecisionContext(q=0.0, e=3.0, rf=LogE(1.0))
        self.assertEqual(decide(self.policy, ctx), 0.0)

    def test_divides_by_channel_gain(self):
        ctx = DecisionContext(q=5.0, e=3.0, h=2.0, rf=Linear(10.0))
        self.assertAlmostEqual(decide(self.policy, ctx), 0.25)
        ctx.h = 0.0
        self.assertEqual(decide(self.policy, ctx), 0.0)

    def test_never_wastes_energy(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            ctx = DecisionContext(q=float(rng.exponential(3.0)), e=float(rng.exponential(2.0)),
                                  h=float(rng.choice([0.1, 0.5, 1.0, 2.2])), rf=LogE(1.0))
            T = decide(self.policy, ctx)
            self.assertAlmostEqual(wasted_energy(self.policy, ctx, T), 0.0, delta=1e-9)


class TestOtherPolicies(unittest.TestCase):

    def setUp(self):
        self.ctx = DecisionContext(q=2.0, e=5.0, ey=1.0, y_prev=0.7, rf=LogE(1.0))

    def test_unbuffered_spends_last_harvest(self):
        self.assertEqual(decide(Unbuffered(), self.ctx), 0.7)
        self.ctx.e = 0.5
        self.assertEqual(decide(Unbuffered(), self.ctx), 0.5)

    def test_constant_power(self):
        self.assertEqual(decide(ConstantPower(0.5), self.ctx), 0.5)
        self.ctx.e = 0.2
        self.assertEqual(decide(ConstantPower(0.5), self.ctx), 0.2)

    def test_mto_boost_and_caps(self):
        policy = ModifiedThroughputOptimal(c=0.1)
        # (e - c q)^+ = 4.8, so the third term is 0.99 * (1 + 0.0048)
        self.assertAlmostEqual(decide(policy, self.ctx), 0.99 * 1.0048, places=12)
        self.ctx.q = 0.5
        self.assertAlmostEqual(decide(policy, self.ctx), math.expm1(0.5), places=12)

    def test_fading_to_spends_only_in_the_best_state(self):
        policy = FadingThroughputOptimalLinear(epsilon=0.01)
        ctx = DecisionContext(q=50.0, e=10.0, h=1.0, ey=1.0, h_max=2.2, p_h_max=0.2, rf=Linear(10.0))
        self.assertEqual(decide(policy, ctx), 0.0)
        ctx.h = 2.2
        self.assertAlmostEqual(decide(policy, ctx), 0.99 / 0.2)
        ctx.e = 1.0
        self.assertEqual(decide(policy, ctx), 1.0)

    def test_water_filling(self):
        policy = WaterFilling(epsilon=0.01)
        ctx = DecisionContext(q=3.0, e=10.0, h=0.1, h0=0.4325, rf=LogE(1.0))
        self.assertEqual(decide(policy, ctx), 0.0)
        ctx.h = 1.0
        self.assertAlmostEqual(decide(policy, ctx), 1.0 / 0.4325 - 1.0)
        ctx.e = 0.5
        self.assertEqual(decide(policy, ctx), 0.5)
        self.assertAlmostEqual(policy.power_budget(1.0), 0.99)

    def test_modified_water_filling_is_queue_capped(self):
        policy = ModifiedWaterFilling(epsilon=0.01)
        ctx = DecisionContext(q=0.1, e=10.0, h=2.2, h0=0.4325, rf=LogE(1.0))
        self.assertAlmostEqual(decide(policy, ctx), math.expm1(0.1), places=12)
        ctx.h = 0.0
        self.assertEqual(decide(policy, ctx), 0.0)

    def test_every_policy_is_feasible(self):
        rng = np.random.default_rng(9)
        policies = [ThroughputOptimal(0.01), Greedy(), Unbuffered(), ConstantPower(0.5),
                    ModifiedThroughputOptimal(), FadingThroughputOptimalLinear(0.01),
                    WaterFilling(0.01), ModifiedWaterFilling(0.01)]
        for _ in range(300):
            ctx = DecisionContext(q=float(rng.exponential(2.0)), e=float(rng.exponential(1.0)),
                                  h=float(rng.choice([0.1, 0.5, 1.0, 2.2])), y_prev=float(rng.exponential(1.0)),
                                  ey=1.0, h0=0.4325, h_max=2.2, p_h_max=0.2, rf=LogE(1.0))
            for policy in policies:
                T = decide(policy, ctx)
                self.assertGreaterEqual(T, 0.0)
                self.assertLessEqual(T, ctx.e)


class TestWaste(unittest.TestCase):

    def test_partial_waste(self):
        ctx = DecisionContext(q=0.5, e=5.0, rf=LogE(1.0))
        self.assertAlmostEqual(wasted_energy(ThroughputOptimal(0.01), ctx, 0.99), 0.99 - math.expm1(0.5),
                               places=12)
        self.assertAlmostEqual(slot_waste(LogE(1.0), 0.5, 1.0, 0.99), 0.3413, delta=1e-4)

    def test_no_waste_when_the_queue_absorbs_everything(self):
        self.assertEqual(slot_waste(LogE(1.0), 10.0, 1.0, 0.99), 0.0)

    def test_zero_gain_wastes_everything(self):
        self.assertEqual(slot_waste(Linear(10.0), 3.0, 0.0, 0.4), 0.4)


class TestPolicyFactory(unittest.TestCase):

    def test_names(self):
        for name in POLICY_CLASSES:
            if name == "CONST_POWER":
                continue
            self.assertEqual(make_policy(name, 0.01).name, name)

    def test_default_epsilon(self):
        self.assertEqual(make_policy("TO", 0.05), ThroughputOptimal(0.05))
        self.assertEqual(make_policy("to", 0.05, epsilon=0.2), ThroughputOptimal(0.2))

    def test_from_dict(self):
        self.assertEqual(policy_from_dict({"name": "CONST_POWER", "c_power": 0.6}, 0.01), ConstantPower(0.6))
        self.assertEqual(policy_from_dict({"name": "MTO", "c": 0.2}, 0.01), ModifiedThroughputOptimal(c=0.2))
        self.assertEqual(policy_from_dict("MDP_OPTIMAL", 0.01), MdpTablePolicy())

    def test_errors(self):
        with self.assertRaises(ConfigError):
            make_policy("ROUND_ROBIN", 0.01)
        with self.assertRaises(ConfigError):
            make_policy("GREEDY", 0.01, epsilon=0.1)
        with self.assertRaises(ConfigError):
            make_policy("CONST_POWER", 0.01)
        with self.assertRaises(ConfigError):
            make_policy("TO", 0.01, epsilon=-1.0)
        with self.assertRaises(ConfigError):
            policy_from_dict({"c": 0.1}, 0.01)

    def test_unsolved_table_refuses_to_decide(self):
        with self.assertRaises(ConfigError):
            MdpTablePolicy().decide(DecisionContext(q=0.0, e=0.0))

    def test_invalid_context(self):
        with self.assertRaises(DomainError):
            decide(Greedy(), DecisionContext(q=-1.0, e=1.0))


if __name__ == "__main__":
    unittest.main()
