import math

import numpy as np
from django.test import SimpleTestCase

from arcane.services.attribution import NotYetAttributable
from arcane.services.baseline import RunningProfile, baseline_attribute, baseline_observe
from arcane.tests.factories import fingerprint_at_similarity, make_fingerprint, unit_fingerprint


class BaselineObserveTests(SimpleTestCase):
    def test_first_observation_becomes_mean(self):
        fingerprint = make_fingerprint([0.2, 0.4, 0.6])
        profile = baseline_observe(RunningProfile("APT-001"), fingerprint)
        self.assertEqual(profile.count, 1)
        self.assertEqual(profile.mean_fingerprint, fingerprint.values)

    def test_same_fingerprint_twice_keeps_mean(self):
        fingerprint = make_fingerprint([0.2, 0.4, 0.6])
        profile = baseline_observe(baseline_observe(RunningProfile("APT-001"), fingerprint), fingerprint)
        self.assertEqual(profile.count, 2)
        self.assertTrue(np.allclose(profile.vector, fingerprint.vector, atol=1e-12))

    def test_second_observation_averages(self):
        first = make_fingerprint([0.2, 0.4])
        second = make_fingerprint([0.6, 0.0])
        profile = baseline_observe(baseline_observe(RunningProfile("APT-001"), first), second)
        self.assertAlmostEqual(profile.mean_fingerprint[0], 0.4, places=12)
        self.assertAlmostEqual(profile.mean_fingerprint[1], 0.2, places=12)

    def test_mean_does_not_depend_on_order(self):
        rng = np.random.default_rng(9)
        fingerprints = [make_fingerprint(rng.uniform(0.0, 1.0, 24).tolist(), f"C{i}") for i in range(10)]
        forward = RunningProfile("APT-001")
        for fingerprint in fingerprints:
            forward = baseline_observe(forward, fingerprint)
        backward = RunningProfile("APT-001")
        for fingerprint in reversed(fingerprints):
            backward = baseline_observe(backward, fingerprint)
        self.assertTrue(np.allclose(forward.vector, backward.vector, atol=1e-9))


class BaselineAttributeTests(SimpleTestCase):
    def _profile(self, actor_id, fingerprint, count=1):
        return RunningProfile(actor_id, fingerprint.values, count)

    def test_exact_match_with_orthogonal_others(self):
        profiles = [
            self._profile("APT-001", unit_fingerprint(0)),
            self._profile("APT-002", unit_fingerprint(1)),
            self._profile("APT-003", unit_fingerprint(2)),
        ]
        result = baseline_attribute(unit_fingerprint(1), profiles)
        self.assertEqual(result.predicted_actor, "APT-002")
        self.assertAlmostEqual(result.confidence, 1.0, places=12)

    def test_identical_profiles_tie_to_smaller_id(self):
        profiles = [
            self._profile("APT-007", unit_fingerprint(0)),
            self._profile("APT-004", unit_fingerprint(0)),
        ]
        self.assertEqual(baseline_attribute(unit_fingerprint(0), profiles).predicted_actor, "APT-004")

    def test_similarity_share_confidence(self):
        profiles = [
            self._profile("APT-001", fingerprint_at_similarity(0.9)),
            self._profile("APT-002", fingerprint_at_similarity(0.6)),
            self._profile("APT-003", fingerprint_at_similarity(0.5)),
        ]
        result = baseline_attribute(unit_fingerprint(0), profiles)
        self.assertEqual(result.predicted_actor, "APT-001")
        self.assertAlmostEqual(result.confidence, 0.45, places=9)
        self.assertAlmostEqual(math.fsum(result.posterior.probabilities.values()), 1.0, delta=1e-9)

    def test_profiles_below_min_train_are_ignored(self):
        profiles = [
            self._profile("APT-001", unit_fingerprint(0), count=1),
            self._profile("APT-002", unit_fingerprint(1), count=3),
        ]
        result = baseline_attribute(unit_fingerprint(0), profiles, min_train=2)
        self.assertEqual(result.predicted_actor, "APT-002")
        self.assertEqual(set(result.posterior.probabilities), {"APT-002"})

    def test_no_eligible_profile(self):
        outcome = baseline_attribute(unit_fingerprint(0), [RunningProfile("APT-001")])
        self.assertIsInstance(outcome, NotYetAttributable)
