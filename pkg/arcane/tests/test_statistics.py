import math

from django.test import SimpleTestCase
from scipy import stats

from arcane.services.statistics import (
    critical_z,
    linear_trend,
    mcnemar_exact,
    one_way_anova,
    paired_t_test,
    required_gap,
    welch_t_test,
)


class WelchTTestTests(SimpleTestCase):
    def test_shifted_samples(self):
        t, p = welch_t_test([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
        self.assertAlmostEqual(t, -1.0, places=12)
        self.assertAlmostEqual(p, 0.347, places=3)

    def test_matches_reference_implementation(self):
        a = [0.81, 0.85, 0.9, 0.78, 0.88, 0.83]
        b = [0.8, 0.79, 0.77, 0.84, 0.75]
        reference = stats.ttest_ind(a, b, equal_var=False)
        t, p = welch_t_test(a, b)
        self.assertAlmostEqual(t, float(reference.statistic), places=12)
        self.assertAlmostEqual(p, float(reference.pvalue), places=12)

    def test_identical_samples(self):
        t, p = welch_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        self.assertEqual(t, 0.0)
        self.assertAlmostEqual(p, 1.0, places=12)

    def test_swapping_negates_t(self):
        t_ab, p_ab = welch_t_test([1, 2, 3, 4, 9], [2, 2, 5])
        t_ba, p_ba = welch_t_test([2, 2, 5], [1, 2, 3, 4, 9])
        self.assertAlmostEqual(t_ab, -t_ba, places=12)
        self.assertAlmostEqual(p_ab, p_ba, places=12)

    def test_degenerate_samples_rejected(self):
        with self.assertRaises(ValueError):
            welch_t_test([1.0], [1.0, 2.0])
        with self.assertRaises(ValueError):
            welch_t_test([1.0, 1.0], [2.0, 2.0])


class SupportingTestsTests(SimpleTestCase):
    def test_required_gap(self):
        self.assertAlmostEqual(critical_z(0.05), 1.959964, places=5)
        self.assertAlmostEqual(required_gap(0.1, 12), 0.1 * critical_z(0.05) / math.sqrt(12), places=12)
        with self.assertRaises(ValueError):
            required_gap(0.1, 0)

    def test_mcnemar(self):
        self.assertEqual(mcnemar_exact([True, False], [True, False]).p_value, 1.0)
        result = mcnemar_exact([True] * 10, [False] * 10)
        self.assertAlmostEqual(result.p_value, 2 * 0.5**10, places=12)
        self.assertEqual(result.statistic, 10.0)
        with self.assertRaises(ValueError):
            mcnemar_exact([True], [True, False])

    def test_paired_t(self):
        result = paired_t_test([0.1, 0.2, 0.4, 0.3], [0.2, 0.2, 0.5, 0.5])
        reference = stats.ttest_rel([0.1, 0.2, 0.4, 0.3], [0.2, 0.2, 0.5, 0.5])
        self.assertAlmostEqual(result.p_value, float(reference.pvalue), places=12)
        self.assertIsNone(paired_t_test([0.1, 0.2], [0.1, 0.2]).p_value)

    def test_anova_and_trend(self):
        flat = one_way_anova([[0.2, 0.25, 0.22], [0.21, 0.24, 0.23], [0.2, 0.26, 0.22]])
        self.assertGreater(flat.p_value, 0.05)
        self.assertIsNone(one_way_anova([[0.2, 0.2], [0.2, 0.2]]).p_value)

        slope = linear_trend([0.0, 0.5, 1.0], [0.1, 0.2, 0.3])
        self.assertAlmostEqual(slope.statistic, 0.2, places=12)
        self.assertIsNone(linear_trend([0.5, 0.5, 0.5], [0.1, 0.2, 0.3]).p_value)
