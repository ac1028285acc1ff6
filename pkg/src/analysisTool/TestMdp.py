import unittest

import numpy as np

from src.analysisTool.mdp import (
    average_cost_solve,
    boundary_occupancy,
    build_model,
    build_model_from_scenario,
    discounted_policy_iterate,
    discretize,
    greedy_grid_policy,
    greedy_mismatches,
    optimal_policy_for,
    policy_table_frame,
    stationary_distribution,
    structure_checks,
    transition_matrix,
    value_iterate,
)
from src.misc.errors import ConfigError, DomainError, MultichainError
from src.misc.parser import Parser
from src.modelTool.distributions import Deterministic, DiscretePmf, Exponential
from src.modelTool.rate_functions import Linear, LogE
from src.simulatorTool.energy_policy import DecisionContext
from src.simulatorTool.greedy import Greedy
from src.simulatorTool.optimal_table import MdpTablePolicy
from src.simulatorTool.simulator import ScenarioConfig, Simulator

ARRIVAL = DiscretePmf((0.0, 1.0, 2.0), (0.5, 0.3, 0.2))
HARVEST = DiscretePmf((0.0, 1.0, 2.0), (0.3, 0.4, 0.3))


def preset_model(name, **overrides):
    cfg = Parser().load_preset(name, overrides).template
    return cfg, build_model_from_scenario(cfg)


class TestModel(unittest.TestCase):

    def setUp(self):
        self.model = build_model(6, 6, 6, ARRIVAL, HARVEST, Linear(1.0))

    def test_rows_are_stochastic(self):
        self.assertLess(self.model.row_sum_error(), 1e-12)
        transitions = transition_matrix(self.model, greedy_grid_policy(self.model))
        np.testing.assert_allclose(np.asarray(transitions.sum(axis=1)).ravel(), 1.0, atol=1e-12)

    def test_fig2_rows_are_stochastic(self):
        _, model = preset_model("fig2")
        self.assertLess(model.row_sum_error(), 1e-12)

    def test_actions_never_exceed_the_stored_energy(self):
        rows, cols = np.nonzero(self.model.feasible)
        self.assertTrue(np.all(cols <= rows))
        self.assertTrue(np.all(np.diag(self.model.feasible)))

    def test_action_stride(self):
        model = build_model(3, 5, 3, ARRIVAL, HARVEST, Linear(1.0))
        self.assertEqual(list(np.flatnonzero(model.feasible[4])), [0, 2, 4])
        self.assertEqual(list(np.flatnonzero(model.feasible[3])), [0, 2, 3])
        with self.assertRaises(ConfigError):
            build_model(3, 5, 4, ARRIVAL, HARVEST, Linear(1.0))

    def test_greedy_grid_policy(self):
        actions = greedy_grid_policy(self.model)
        self.assertEqual(actions[3, 5], 3)
        self.assertEqual(actions[5, 2], 2)
        self.assertEqual(actions[0, 4], 0)

    def test_continuous_inputs_need_a_rule(self):
        with self.assertRaises(ConfigError):
            build_model(4, 4, 4, Exponential(1.0), HARVEST, Linear(1.0))
        model = build_model(4, 4, 4, Exponential(1.0), HARVEST, Linear(1.0), discretization="nearest")
        self.assertAlmostEqual(model.arrival_pmf.sum(), 1.0, places=12)

    def test_off_grid_support_is_rejected(self):
        with self.assertRaises(ConfigError):
            build_model(4, 4, 4, DiscretePmf((0.0, 0.5), (0.5, 0.5)), HARVEST, Linear(1.0))

    def test_discretize_keeps_the_tail_at_the_top(self):
        pmf = discretize(Exponential(1.0), 1.0, 3.0)
        values, probs = pmf.support()
        self.assertEqual(list(values), [0.0, 1.0, 2.0, 3.0])
        self.assertAlmostEqual(probs[-1], np.exp(-2.5), places=9)

    def test_scenario_model_rejects_fading_and_infinite_caps(self):
        with self.assertRaises(ConfigError):
            preset_model("fig7")
        cfg = ScenarioConfig(arrival=ARRIVAL, harvest=HARVEST, rf=Linear(1.0), policy=Greedy())
        with self.assertRaises(ConfigError):
            build_model_from_scenario(cfg)


class TestSolvers(unittest.TestCase):

    def test_zero_cost_has_zero_values(self):
        model = build_model(5, 5, 5, ARRIVAL, HARVEST, LogE(1.0), cost=0.0)
        table = value_iterate(model, 0.9)
        self.assertEqual(float(np.abs(table.values).max()), 0.0)

    def test_one_state_geometric_sum(self):
        model = build_model(1, 1, 1, Deterministic(0.0), Deterministic(0.0), Linear(1.0), cost=1.0)
        self.assertAlmostEqual(float(value_iterate(model, 0.9).values[0, 0]), 10.0, delta=1e-6)
        self.assertAlmostEqual(float(discounted_policy_iterate(model, 0.9).values[0, 0]), 10.0, places=9)

    def test_constant_cost_gain(self):
        model = build_model(5, 5, 5, ARRIVAL, HARVEST, LogE(1.0), cost=3.0)
        self.assertAlmostEqual(average_cost_solve(model).gain, 3.0, places=9)

    def test_vi_agrees_with_exact_discounted_solution(self):
        model = build_model(8, 8, 8, ARRIVAL, HARVEST, LogE(1.0))
        iterated = value_iterate(model, 0.95, tol=1e-8)
        exact = discounted_policy_iterate(model, 0.95, tol=1e-8)
        np.testing.assert_allclose(iterated.values, exact.values, atol=1e-7)

    def test_policy_iteration_and_relative_vi_agree(self):
        _, model = preset_model("fig2")
        exact = average_cost_solve(model, "policy-iteration")
        iterated = average_cost_solve(model, "relative-VI", tol=1e-8)
        self.assertAlmostEqual(exact.gain, iterated.gain, delta=1e-6)

    def test_value_iteration_contracts(self):
        model = build_model(8, 8, 8, ARRIVAL, HARVEST, LogE(1.0))
        for alpha in (0.9, 0.99):
            residuals = value_iterate(model, alpha).residuals
            self.assertGreater(len(residuals), 2)
            for previous, current in zip(residuals, residuals[1:]):
                self.assertLessEqual(current, alpha * previous + 1e-12, alpha)

    def test_gain_matches_the_stationary_average(self):
        model = build_model(8, 8, 8, ARRIVAL, HARVEST, LogE(1.0))
        table = average_cost_solve(model)
        pmf = stationary_distribution(transition_matrix(model, table.actions))
        self.assertAlmostEqual(float(pmf @ model.cost.ravel()), table.gain, places=8)

    def test_unknown_method(self):
        model = build_model(3, 3, 3, ARRIVAL, HARVEST, Linear(1.0))
        with self.assertRaises(ConfigError):
            average_cost_solve(model, "q-learning")

    def test_multichain_policy_is_reported(self):
        # no arrivals and no harvest: every drained state is absorbing
        model = build_model(3, 3, 3, Deterministic(0.0), Deterministic(0.0), Linear(1.0))
        with self.assertRaises(MultichainError) as ctx:
            average_cost_solve(model)
        self.assertTrue(str(ctx.exception).startswith("MULTICHAIN"))

    def test_policy_table_frame(self):
        model = build_model(4, 3, 3, ARRIVAL, HARVEST, Linear(1.0))
        frame = policy_table_frame(value_iterate(model, 0.9))
        self.assertEqual(list(frame.columns), ["q_level", "e_level", "action", "value"])
        self.assertEqual(len(frame), 12)
        self.assertTrue(np.all(frame["action"] <= frame["e_level"]))


class TestTablePolicy(unittest.TestCase):

    def setUp(self):
        self.model = build_model(6, 6, 6, ARRIVAL, HARVEST, LogE(1.0))
        self.table = value_iterate(self.model, 0.9)
        self.policy = MdpTablePolicy(self.table)

    def test_queue_above_the_grid_uses_the_top_row(self):
        top = float(self.table.q_levels[-1])
        for e in (0.0, 2.0, 5.0):
            expected = self.policy.decide(DecisionContext(q=top, e=e, rf=LogE(1.0)))
            self.assertEqual(self.policy.decide(DecisionContext(q=top + 30.0, e=e, rf=LogE(1.0))), expected)

    def test_state_off_the_grid_is_rejected(self):
        with self.assertRaises(DomainError):
            self.policy.decide(DecisionContext(q=2.5, e=1.0, rf=LogE(1.0)))
        with self.assertRaises(DomainError):
            self.policy.decide(DecisionContext(q=1.0, e=40.0, rf=LogE(1.0)))


class TestLinearOptimality(unittest.TestCase):
    """With linear g the Greedy policy is optimal, discounted and average cost alike."""

    def setUp(self):
        self.cfg, self.model = preset_model("linear-small")

    def test_grid(self):
        self.assertEqual(self.model.shape, (21, 21))

    def test_discounted_tables_are_greedy(self):
        for alpha in (0.9, 0.99):
            self.assertEqual(greedy_mismatches(self.model, value_iterate(self.model, alpha)), [], alpha)

    def test_average_cost_table_is_greedy(self):
        self.assertEqual(greedy_mismatches(self.model, average_cost_solve(self.model)), [])

    def test_structure(self):
        tables = [value_iterate(self.model, 0.9), value_iterate(self.model, 0.99),
                  discounted_policy_iterate(self.model, 0.999)]
        report = structure_checks(tables, average_cost_solve(self.model).gain)
        self.assertTrue(report.ok, report.violations[:5])


class TestLogStructure(unittest.TestCase):

    def setUp(self):
        self.cfg, self.model = preset_model("fig2")

    def test_values_are_monotone_and_gaps_vanish(self):
        tables = [value_iterate(self.model, 0.9), value_iterate(self.model, 0.99),
                  discounted_policy_iterate(self.model, 0.999)]
        report = structure_checks(tables, average_cost_solve(self.model).gain)
        self.assertTrue(report.ok, report.violations[:5])
        self.assertLessEqual(report.vanishing_gaps[0.999], 0.05)

    def test_optimal_policy_for_scenario(self):
        policy = optimal_policy_for(self.cfg)
        self.assertEqual(policy.table.actions.shape, (51, 51))
        self.assertIsNotNone(policy.table.gain)
        self.assertLess(boundary_occupancy(self.model, policy.table), 0.01)

    def test_optimal_policy_needs_quanta(self):
        cfg = Parser().load_preset("fig5", {"policy": "GREEDY"}).template
        with self.assertRaises(ConfigError):
            optimal_policy_for(cfg)


class TestSimulatorOracle(unittest.TestCase):
    """The simulator's empirical state distribution matches the chain's stationary pmf."""

    def test_total_variation(self):
        cfg = ScenarioConfig(arrival=ARRIVAL, harvest=HARVEST, rf=Linear(1.0), policy=Greedy(),
                             energy_cap=5.0, data_cap=5.0, data_quantum=1.0, energy_quantum=1.0,
                             horizon=1_000_000, replications=1, seed=3)
        model = build_model_from_scenario(cfg)
        expected = stationary_distribution(transition_matrix(model, greedy_grid_policy(model)))

        q, e = Simulator().traces(cfg)
        q, e = q[1_000:], e[1_000:]
        states = np.rint(q).astype(int) * model.n_e + np.rint(e).astype(int)
        empirical = np.bincount(states, minlength=model.n_states) / len(states)
        self.assertLess(0.5 * float(np.abs(empirical - expected).sum()), 0.02)


if __name__ == "__main__":
    unittest.main()
