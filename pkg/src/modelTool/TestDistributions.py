import math
import unittest

import numpy as np

from src.misc.errors import ConfigError, DomainError
from src.modelTool.distributions import (
    Deterministic,
    DiscretePmf,
    Erlang,
    Exponential,
    TruncatedPoisson,
    Uniform,
    dist_mean,
    distribution_from_dict,
    expected_g,
    expected_g_monte_carlo,
    fit_truncated_poisson,
    hyperexponential_recipe,
    truncated_poisson_mean,
)
from src.modelTool.rate_functions import Linear, Log2, LogE
from src.modelTool.streams import Process, SampleStream, sample, substream_id

FADING = DiscretePmf((0.1, 0.5, 1.0, 2.2), (0.1, 0.3, 0.4, 0.2))


class TestDistributions(unittest.TestCase):

    def test_means(self):
        self.assertEqual(dist_mean(Exponential(10.0)), 10.0)
        self.assertEqual(dist_mean(Uniform(0.0, 2.0)), 1.0)
        self.assertEqual(dist_mean(Erlang(5, 10.0)), 10.0)
        self.assertEqual(dist_mean(Deterministic(0.3)), 0.3)
        self.assertAlmostEqual(dist_mean(DiscretePmf((0.0, 1.0, 2.0), (0.5, 0.3, 0.2))), 0.7, places=12)

    def test_hyperexponential_recipe_keeps_the_mean(self):
        spec = hyperexponential_recipe(1.0)
        self.assertAlmostEqual(spec.mean(), 1.0, places=12)
        self.assertAlmostEqual(spec.means[0], 1.0 / 4.9, places=12)
        self.assertAlmostEqual(spec.means[-1], 10.0 / 4.9, places=12)

    def test_truncated_poisson_renormalizes(self):
        values, pmf = TruncatedPoisson(1.0, 5).support()
        self.assertEqual(list(values), [0, 1, 2, 3, 4, 5])
        self.assertAlmostEqual(pmf.sum(), 1.0, places=14)
        # mass of Poisson(1) above 5 is redistributed, so the mean sits just below 1
        self.assertLess(truncated_poisson_mean(1.0, 5), 1.0)
        self.assertGreater(truncated_poisson_mean(1.0, 5), 0.99)

    def test_fit_truncated_poisson(self):
        for target in (0.3, 1.0, 2.5, 4.0):
            lam = fit_truncated_poisson(target, 5)
            self.assertAlmostEqual(truncated_poisson_mean(lam, 5), target, places=9)

    def test_fit_truncated_poisson_rejects_infeasible_means(self):
        with self.assertRaises(DomainError):
            fit_truncated_poisson(6.0, 5)
        with self.assertRaises(DomainError):
            fit_truncated_poisson(0.0, 5)

    def test_expected_g_reference_values(self):
        self.assertAlmostEqual(expected_g(Exponential(10.0), LogE(1.0)), 2.01, delta=0.02)
        self.assertAlmostEqual(expected_g(Erlang(5, 10.0), LogE(1.0)), 2.32, delta=0.02)
        self.assertAlmostEqual(expected_g(Erlang(5, 1.0), LogE(1.0), FADING), 0.62, delta=0.02)

    def test_expected_g_linear_is_exact(self):
        self.assertAlmostEqual(expected_g(Exponential(1.0), Linear(10.0)), 10.0, places=6)
        self.assertAlmostEqual(expected_g(Uniform(0.0, 2.0), Linear(10.0)), 10.0, places=6)

    def test_expected_g_deterministic(self):
        self.assertAlmostEqual(expected_g(Deterministic(1.0), Log2(1.0)), 1.0, places=12)

    def test_monte_carlo_agrees_with_quadrature(self):
        estimate, stderr = expected_g_monte_carlo(Exponential(10.0), LogE(1.0), draws=100_000, seed=3)
        self.assertLess(abs(estimate - expected_g(Exponential(10.0), LogE(1.0))), 5 * stderr)

    def test_rescaled_keeps_family(self):
        self.assertEqual(Erlang(5, 1.0).rescaled(3.0), Erlang(5, 3.0))
        self.assertAlmostEqual(Uniform(0.0, 2.0).rescaled(5.0).hi, 10.0)
        rescaled = TruncatedPoisson(1.0, 5).rescaled(0.7)
        self.assertAlmostEqual(rescaled.mean(), 0.7, places=9)
        self.assertAlmostEqual(hyperexponential_recipe(1.0).rescaled(5.0).mean(), 5.0, places=9)

    def test_cdf(self):
        self.assertAlmostEqual(float(Exponential(1.0).cdf(1.0)), 1 - math.exp(-1.0), places=12)
        self.assertAlmostEqual(float(DiscretePmf((0.0, 1.0), (0.25, 0.75)).cdf(0.5)), 0.25)

    def test_invalid_parameters(self):
        with self.assertRaises(DomainError):
            Exponential(-1.0)
        with self.assertRaises(DomainError):
            DiscretePmf((0.0, 1.0), (0.5, 0.6))
        with self.assertRaises(DomainError):
            Erlang(0, 1.0)

    def test_distribution_from_dict(self):
        self.assertEqual(distribution_from_dict({"family": "exponential", "mean": 2.0}, "arrival"),
                         Exponential(2.0))
        fitted = distribution_from_dict({"family": "truncated_poisson", "mean": 1.0, "cutoff": 5}, "harvest")
        self.assertAlmostEqual(fitted.mean(), 1.0, places=9)
        recipe = distribution_from_dict({"family": "hyperexponential", "mean": 1.0}, "harvest")
        self.assertEqual(len(recipe.means), 5)

    def test_distribution_from_dict_names_the_key(self):
        with self.assertRaises(ConfigError) as ctx:
            distribution_from_dict({"family": "discrete", "values": [0, 1], "probabilities": [0.5, 0.4]},
                                   "arrival")
        self.assertEqual(ctx.exception.key, "arrival")
        with self.assertRaises(ConfigError):
            distribution_from_dict({"family": "exponential", "mean": 1.0, "rate": 2.0}, "arrival")
        with self.assertRaises(ConfigError):
            distribution_from_dict({"family": "gaussian"}, "arrival")


class TestStreams(unittest.TestCase):

    def setUp(self):
        self.spec = Exponential(2.0)

    def test_same_seed_same_sequence(self):
        a = SampleStream(self.spec, 7, substream_id(Process.ARRIVAL, 0))
        b = SampleStream(self.spec, 7, substream_id(Process.ARRIVAL, 0))
        np.testing.assert_array_equal(a.sample_block(1000), b.sample_block(1000))

    def test_substreams_differ(self):
        a = SampleStream(self.spec, 7, substream_id(Process.ARRIVAL, 0))
        b = SampleStream(self.spec, 7, substream_id(Process.HARVEST, 0))
        c = SampleStream(self.spec, 7, substream_id(Process.ARRIVAL, 1))
        first = a.sample_block(100)
        self.assertFalse(np.array_equal(first, b.sample_block(100)))
        self.assertFalse(np.array_equal(first, c.sample_block(100)))

    def test_substream_ids_are_distinct(self):
        ids = {substream_id(p, r) for p in Process for r in range(20)}
        self.assertEqual(len(ids), 4 * 20)

    def test_sample_is_nonnegative(self):
        stream = SampleStream(Erlang(5, 1.0), 1, 0)
        self.assertGreaterEqual(sample(stream), 0.0)
        self.assertTrue(np.all(stream.sample_block(10_000) >= 0))

    def test_sample_mean_within_four_standard_errors(self):
        families = [
            Exponential(2.0),
            Uniform(0.0, 10.0),
            Erlang(5, 1.0),
            hyperexponential_recipe(1.0),
            TruncatedPoisson(fit_truncated_poisson(1.0, 5), 5),
            FADING,
            Deterministic(0.3),
        ]
        n = 200_000
        for index, spec in enumerate(families):
            draws = SampleStream(spec, 11, index).sample_block(n)
            standard_error = float(draws.std(ddof=1)) / math.sqrt(n)
            self.assertAlmostEqual(float(draws.mean()), dist_mean(spec), delta=4 * standard_error + 1e-12,
                                   msg=type(spec).__name__)

    def test_discrete_samples_stay_on_support(self):
        stream = SampleStream(TruncatedPoisson(1.0, 5), 3, 0)
        draws = stream.sample_block(10_000)
        self.assertTrue(set(np.unique(draws)).issubset({0.0, 1.0, 2.0, 3.0, 4.0, 5.0}))


if __name__ == "__main__":
    unittest.main()
