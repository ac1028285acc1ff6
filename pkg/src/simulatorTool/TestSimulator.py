import math
import unittest

import numpy as np
import pandas as pd

from src.misc.errors import ConfigError, ContractViolation
from src.misc.parser import Parser
from src.modelTool.distributions import Deterministic, DiscretePmf, Erlang, Exponential, Uniform
from src.modelTool.rate_functions import Linear, Log2, LogE
from src.simulatorTool.greedy import ConstantPower, Greedy, Unbuffered
from src.simulatorTool.node import BufferCaps, NodeState, step
from src.simulatorTool.policies import make_policy
from src.simulatorTool.simulator import ScenarioConfig, Simulator, run, simulate_path
from src.simulatorTool.stability import Verdict
from src.simulatorTool.throughput_optimal import ThroughputOptimal
from src.simulatorTool.water_filling import WaterFilling

FADING = DiscretePmf((0.1, 0.5, 1.0, 2.2), (0.1, 0.3, 0.4, 0.2))
RANDOM_POLICIES = ["TO", "GREEDY", "UNBUFFERED", "MTO", "UNFADED_TO", "WF", "MWF", "FADING_TO_LINEAR"]


def desk_scenario(preset, policy, load, replications=2, horizon=100_000):
    overrides = {"policy": policy, "replications": replications, "horizon": horizon}
    return Parser().load_preset(preset, overrides).template.with_arrival_mean(load)


class TestNode(unittest.TestCase):

    def setUp(self):
        self.caps = BufferCaps()
        self.rf = Linear(1.0)

    def test_step(self):
        state = step(NodeState(q=3.0, e=2.0), T=1.0, x=0.5, y=0.25, h=1.0, caps=self.caps, rf=self.rf)
        self.assertEqual(state, NodeState(q=2.5, e=1.25, k=1))

    def test_service_is_capped_by_the_queue(self):
        state = step(NodeState(q=0.5, e=2.0), T=2.0, x=1.0, y=0.0, h=1.0, caps=self.caps, rf=self.rf)
        self.assertEqual(state.q, 1.0)
        self.assertEqual(state.e, 0.0)

    def test_caps_clip_and_count(self):
        caps = BufferCaps(data_cap=2.0, energy_cap=1.0)
        state = step(NodeState(q=0.0, e=0.5), T=0.0, x=5.0, y=1.0, h=1.0, caps=caps, rf=self.rf)
        self.assertEqual(state.q, 2.0)
        self.assertEqual(state.e, 1.0)
        self.assertEqual(state.dropped_bits, 3.0)
        self.assertEqual(state.energy_overflow, 0.5)

    def test_fading_scales_the_rate(self):
        state = step(NodeState(q=30.0, e=2.0), T=1.0, x=0.0, y=0.0, h=2.2, caps=self.caps, rf=Linear(10.0))
        self.assertAlmostEqual(state.q, 8.0)

    def test_data_quantum_rounds_the_post_service_queue(self):
        caps = BufferCaps(data_quantum=1.0, energy_quantum=1.0)
        state = step(NodeState(q=3.0, e=5.0), T=0.99, x=1.0, y=1.0, h=1.0, caps=caps, rf=Log2(1.0))
        self.assertEqual(state.q, 3.0)
        # off-grid spending keeps its exact energy
        self.assertAlmostEqual(state.e, 5.01, places=12)

    def test_infeasible_action(self):
        with self.assertRaises(ContractViolation):
            step(NodeState(q=1.0, e=0.5), T=0.6, x=0.0, y=0.0, h=1.0, caps=self.caps, rf=self.rf)


class TestScenarioConfig(unittest.TestCase):

    def setUp(self):
        self.base = dict(arrival=Exponential(1.0), harvest=Exponential(10.0), rf=LogE(1.0))

    def test_defaults(self):
        cfg = ScenarioConfig(policy=Greedy(), **self.base)
        self.assertEqual(cfg.warmup, 10_000)
        self.assertAlmostEqual(cfg.epsilon, 0.1)

    def test_water_filling_needs_fading(self):
        with self.assertRaises(ConfigError):
            ScenarioConfig(policy=WaterFilling(0.01), **self.base)

    def test_invalid_run_lengths(self):
        with self.assertRaises(ConfigError):
            ScenarioConfig(policy=Greedy(), horizon=100, warmup=100, **self.base)
        with self.assertRaises(ConfigError):
            ScenarioConfig(policy=Greedy(), replications=0, **self.base)
        with self.assertRaises(ConfigError):
            ScenarioConfig(policy=Greedy(), model_data_cap=math.inf, **self.base)

    def test_with_arrival_mean_keeps_the_family(self):
        cfg = ScenarioConfig(policy=Greedy(), **self.base).with_arrival_mean(2.2)
        self.assertEqual(cfg.arrival, Exponential(2.2))


class TestSimulator(unittest.TestCase):

    def setUp(self):
        self.cfg = ScenarioConfig(
            arrival=Exponential(1.0),
            harvest=Exponential(10.0),
            rf=LogE(1.0),
            policy=ThroughputOptimal(0.1),
            horizon=5_000,
            replications=3,
        )

    def test_no_arrivals_no_queue(self):
        for policy in (ThroughputOptimal(0.1), Greedy(), Unbuffered()):
            cfg = ScenarioConfig(arrival=Deterministic(0.0), harvest=Exponential(1.0), rf=LogE(1.0),
                                 policy=policy, horizon=2_000, replications=1)
            report = run(cfg)
            self.assertEqual(report.mean_queue, 0.0)
            self.assertEqual(report.drop_fraction, 0.0)

    def test_same_seed_same_report(self):
        self.assertEqual(run(self.cfg), run(self.cfg))

    def test_seed_changes_the_report(self):
        other = ScenarioConfig(**{**self.cfg.__dict__, "seed": 2})
        self.assertNotEqual(run(self.cfg).mean_queue, run(other).mean_queue)

    def test_common_random_numbers_across_policies(self):
        to_path = simulate_path(self.cfg)
        greedy_path = simulate_path(self.cfg.with_policy(Greedy()))
        np.testing.assert_array_equal(to_path["x"].to_numpy(), greedy_path["x"].to_numpy())
        np.testing.assert_array_equal(to_path["y"].to_numpy(), greedy_path["y"].to_numpy())

    def test_report_shape(self):
        report = run(self.cfg)
        self.assertEqual(report.policy, "TO")
        self.assertEqual(len(report.replications), 3)
        self.assertGreater(report.ci_half_width, 0.0)
        # short runs never get a verdict
        self.assertEqual(report.stability_verdict, Verdict.INCONCLUSIVE)

    def test_path_starts_from_the_initial_state(self):
        path = simulate_path(self.cfg, initial=NodeState(q=4.0, e=7.0))
        self.assertEqual(path.loc[0, "q"], 4.0)
        self.assertEqual(path.loc[0, "e"], 7.0)
        self.assertEqual(len(path), self.cfg.horizon)

    def test_traces(self):
        q, e = Simulator().traces(self.cfg)
        path = simulate_path(self.cfg)
        np.testing.assert_array_equal(q, path["q"].to_numpy())
        np.testing.assert_array_equal(e, path["e"].to_numpy())


class TestInvariants(unittest.TestCase):
    """Randomized scenarios: nonnegativity, caps, feasibility, conservation and determinism."""

    def setUp(self):
        self.horizon = 10_000

    def random_scenario(self, seed):
        rng = np.random.default_rng(1000 + seed)
        policy_name = RANDOM_POLICIES[seed % len(RANDOM_POLICIES)]
        policy = make_policy(policy_name, 0.01)
        if seed % 9 == 4:
            policy = ConstantPower(float(rng.uniform(0.1, 1.0)))
        arrivals = [Exponential(float(rng.uniform(0.1, 3.0))), Erlang(5, float(rng.uniform(0.1, 3.0))),
                    Uniform(0.0, float(rng.uniform(0.2, 4.0)))]
        rfs = [Linear(float(rng.uniform(1.0, 10.0))), LogE(1.0), Log2(1.0)]
        fading = FADING if policy.requires_fading or rng.random() < 0.3 else None
        sensing = Deterministic(float(rng.uniform(0.05, 0.3))) if rng.random() < 0.3 else None
        return ScenarioConfig(
            arrival=arrivals[int(rng.integers(3))],
            harvest=Exponential(float(rng.uniform(0.5, 3.0))),
            rf=rfs[int(rng.integers(3))],
            policy=policy,
            sensing=sensing,
            fading=fading,
            energy_cap=float(rng.choice([math.inf, 5.0, 20.0])),
            data_cap=float(rng.choice([math.inf, 10.0, 50.0])),
            horizon=self.horizon,
            replications=1,
            seed=seed,
        )

    def test_random_paths(self):
        for seed in range(50):
            cfg = self.random_scenario(seed)
            path = simulate_path(cfg)
            q, e = path["q"].to_numpy(), path["e"].to_numpy()
            T, z, y = path["T"].to_numpy(), path["z"].to_numpy(), path["y"].to_numpy()
            served, x = path["served"].to_numpy(), path["x"].to_numpy()
            overflow, dropped = path["energy_overflow"].to_numpy(), path["dropped"].to_numpy()

            self.assertTrue(np.all(q >= 0), cfg.policy)
            self.assertTrue(np.all(q <= cfg.data_cap))
            self.assertTrue(np.all(e >= 0))
            self.assertTrue(np.all(e <= cfg.energy_cap))
            self.assertTrue(np.all(T >= 0))
            self.assertTrue(np.all(T + z <= e + 1e-9), cfg.policy)
            self.assertTrue(np.all(served <= q + 1e-12))
            self.assertTrue(np.all(x[path["outage"].to_numpy()] == 0.0))

            scale = 1.0 + np.abs(e[1:])
            np.testing.assert_array_less(np.abs(e[:-1] - T[:-1] - z[:-1] + y[:-1] - overflow[:-1] - e[1:]),
                                         1e-9 * scale)
            np.testing.assert_array_less(np.abs(np.maximum(q[:-1] - served[:-1], 0.0) + x[:-1]
                                                - dropped[:-1] - q[1:]), 1e-9 * (1.0 + q[1:]))

    def test_paths_are_reproducible(self):
        for seed in (0, 7, 21):
            cfg = self.random_scenario(seed)
            pd.testing.assert_frame_equal(simulate_path(cfg), simulate_path(cfg))


class TestStabilityBrackets(unittest.TestCase):
    """Stability brackets of the log-rate, exponential-harvest scenario and its neighbours."""

    # run length and replications of the acceptance-level brackets
    FULL = {"horizon": 1_000_000, "replications": 10}

    def test_to_stable_where_greedy_is_not(self):
        self.assertEqual(run(desk_scenario("fig5", "TO", 2.2)).stability_verdict, Verdict.STABLE)
        self.assertEqual(run(desk_scenario("fig5", "GREEDY", 2.2)).stability_verdict, Verdict.UNSTABLE)

    def test_greedy_stable_below_its_boundary(self):
        report = run(desk_scenario("fig5", "GREEDY", 1.8, **self.FULL))
        self.assertEqual(report.stability_verdict, Verdict.STABLE)
        self.assertTrue(math.isfinite(report.mean_queue))

    def test_to_unstable_above_its_boundary(self):
        self.assertEqual(run(desk_scenario("fig5", "TO", 2.6, **self.FULL)).stability_verdict, Verdict.UNSTABLE)

    def test_stable_at_half_the_load(self):
        self.assertEqual(run(desk_scenario("fig5", "TO", 1.1)).stability_verdict, Verdict.STABLE)

    def test_mto_stays_stable_past_greedy(self):
        for load in (2.1, 2.3):
            self.assertEqual(run(desk_scenario("fig5", "MTO", load)).stability_verdict, Verdict.STABLE)
        self.assertEqual(run(desk_scenario("fig5", "GREEDY", 2.3)).stability_verdict, Verdict.UNSTABLE)
        # drift at 2.1 sits between the two thresholds
        self.assertNotEqual(run(desk_scenario("fig5", "GREEDY", 2.1)).stability_verdict, Verdict.STABLE)

    def test_greedy_beats_to_at_low_load(self):
        greedy = run(desk_scenario("fig5", "GREEDY", 0.5))
        to = run(desk_scenario("fig5", "TO", 0.5))
        self.assertLess(greedy.mean_queue, to.mean_queue)

    def test_mto_tracks_greedy_at_low_load(self):
        greedy = run(desk_scenario("fig5", "GREEDY", 1.0, replications=10))
        mto = run(desk_scenario("fig5", "MTO", 1.0, replications=10))
        self.assertLessEqual(abs(mto.mean_queue - greedy.mean_queue), 2 * (greedy.ci_half_width + mto.ci_half_width))

    def test_linear_ordering(self):
        for load in (2.0, 4.0, 6.0, 8.0):
            unbuffered, to, greedy = (run(desk_scenario("fig3", policy, load, replications=10))
                                      for policy in ("UNBUFFERED", "TO", "GREEDY"))
            self.assertGreater(unbuffered.mean_queue - unbuffered.ci_half_width, to.mean_queue + to.ci_half_width,
                               load)
            self.assertGreater(to.mean_queue - to.ci_half_width, greedy.mean_queue + greedy.ci_half_width, load)

    def test_fading_to_reaches_past_the_unfaded_policies(self):
        fading_to = run(desk_scenario("fig7", "FADING_TO_LINEAR", 15.0))
        self.assertEqual(fading_to.stability_verdict, Verdict.STABLE)
        for policy in ("UNBUFFERED", "GREEDY", "UNFADED_TO"):
            self.assertEqual(run(desk_scenario("fig7", policy, 12.0)).stability_verdict, Verdict.UNSTABLE, policy)
        self.assertEqual(run(desk_scenario("fig7", "FADING_TO_LINEAR", 25.0)).stability_verdict,
                         Verdict.UNSTABLE)


class TestSensing(unittest.TestCase):

    def setUp(self):
        self.template = Parser().load_preset("sensing", {"replications": 2}).template

    def test_affordable_power_has_no_outages(self):
        report = run(self.template.with_policy(ConstantPower(0.5)))
        self.assertLess(report.sensing_outage_fraction, 1e-3)
        self.assertEqual(report.stability_verdict, Verdict.STABLE)

    def test_overspending_starves_sensing(self):
        report = run(self.template.with_policy(ConstantPower(0.8)))
        self.assertGreater(report.sensing_outage_fraction, 0.05)

    def test_outage_slots_neither_sense_nor_transmit(self):
        cfg = ScenarioConfig(arrival=Deterministic(0.1), harvest=Deterministic(0.5), sensing=Deterministic(1.0),
                             rf=LogE(1.0), policy=ConstantPower(0.4), horizon=50, warmup=0, replications=1)
        path = simulate_path(cfg)
        outages = path[path["outage"]]
        self.assertGreater(len(outages), 0)
        self.assertTrue(np.all(outages["T"] == 0.0))
        self.assertTrue(np.all(outages["served"] == 0.0))
        self.assertTrue(np.all(outages["x"] == 0.0))
        self.assertTrue(np.all(outages["z"] == 0.0))
        self.assertEqual(path.loc[0, "e"], 0.0)
        self.assertTrue(path.loc[0, "outage"])

    def test_sensing_is_paid_before_the_decision(self):
        cfg = ScenarioConfig(arrival=Deterministic(0.1), harvest=Deterministic(0.5), sensing=Deterministic(0.3),
                             rf=LogE(1.0), policy=ConstantPower(0.4), horizon=200, warmup=0, replications=1)
        path = simulate_path(cfg)
        paid = path[~path["outage"]]
        self.assertGreater(len(paid), 0)
        self.assertTrue(np.all(paid["z"] == 0.3))
        self.assertTrue(np.all(paid["T"] + paid["z"] <= paid["e"] + 1e-12))
        # the policy sees what is left after sensing
        np.testing.assert_allclose(paid["T"], np.minimum(0.4, paid["e"] - 0.3), atol=1e-12)
        self.assertTrue(np.all(path[path["outage"]]["T"] == 0.0))


if __name__ == "__main__":
    unittest.main()
