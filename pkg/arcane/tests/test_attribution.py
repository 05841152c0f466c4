import math
from datetime import timedelta

import numpy as np
from django.test import SimpleTestCase

from arcane.services.attribution import (
    AttributionConfig,
    AttributionResult,
    KnowledgeBase,
    NotYetAttributable,
    PosteriorDistribution,
    argmax_actor,
    attribute_campaign,
    bayes_update,
    cross_campaign_confidence,
    evidence_likelihood,
    observe_campaign,
)
from arcane.tests.factories import BASE_DAY, fingerprint_at_similarity, make_fingerprint, unit_fingerprint

EIGHT_ACTORS = tuple(f"APT-00{i}" for i in range(1, 9))


class CrossCampaignConfidenceTests(SimpleTestCase):
    def setUp(self):
        self.config = AttributionConfig(actor_ids=("APT-001", "APT-002"))
        self.query = unit_fingerprint(0, "Q", BASE_DAY)

    def _kb(self, *fingerprints):
        kb = KnowledgeBase(actor_ids=self.config.actor_ids)
        for fingerprint in fingerprints:
            kb = observe_campaign(kb, fingerprint, "APT-001")
        return kb

    def test_empty_evidence_gives_zero(self):
        self.assertEqual(cross_campaign_confidence(self.query, "APT-001", self._kb(), self.config), 0.0)

    def test_decayed_mean_of_retained_evidence(self):
        kb = self._kb(
            fingerprint_at_similarity(0.9, "A", BASE_DAY),
            fingerprint_at_similarity(0.5, "B", BASE_DAY - timedelta(days=100)),
        )
        value = cross_campaign_confidence(self.query, "APT-001", kb, self.config)
        self.assertAlmostEqual(value, (0.9 + 0.5 * math.exp(-0.5)) / 2, places=9)
        self.assertAlmostEqual(value, 0.6016, places=4)

    def test_single_fresh_entry(self):
        kb = self._kb(fingerprint_at_similarity(0.9, "A", BASE_DAY))
        self.assertAlmostEqual(cross_campaign_confidence(self.query, "APT-001", kb, self.config), 0.9, places=9)

    def test_entries_below_threshold_are_dropped(self):
        kb = self._kb(fingerprint_at_similarity(0.4, "A", BASE_DAY))
        self.assertEqual(cross_campaign_confidence(self.query, "APT-001", kb, self.config), 0.0)

    def test_older_evidence_never_scores_higher(self):
        previous = 1.0
        for days in (0, 10, 50, 200, 500):
            kb = self._kb(fingerprint_at_similarity(0.8, "A", BASE_DAY - timedelta(days=days)))
            value = cross_campaign_confidence(self.query, "APT-001", kb, self.config)
            self.assertLessEqual(value, previous)
            self.assertGreaterEqual(value, 0.0)
            previous = value

    def test_unknown_actor_rejected(self):
        with self.assertRaises(ValueError):
            cross_campaign_confidence(self.query, "APT-999", self._kb(), self.config)

    def test_identical_fingerprint_same_day_scores_one(self):
        kb = self._kb(unit_fingerprint(0, "A", BASE_DAY))
        self.assertAlmostEqual(cross_campaign_confidence(self.query, "APT-001", kb, self.config), 1.0, places=12)


class LikelihoodAndUpdateTests(SimpleTestCase):
    def setUp(self):
        self.config = AttributionConfig(actor_ids=EIGHT_ACTORS)

    def test_likelihood_endpoints(self):
        self.assertEqual(evidence_likelihood(0.0, self.config), (0.5, 0.5))
        likelihood, counter = evidence_likelihood(1.0, self.config)
        self.assertAlmostEqual(likelihood, 0.95, places=12)
        self.assertAlmostEqual(counter, 0.50 - 0.45 / 7, places=12)

    def test_likelihood_rejects_out_of_range(self):
        with self.assertRaises(ValueError):
            evidence_likelihood(1.2, self.config)
        with self.assertRaises(ValueError):
            evidence_likelihood(-0.1, self.config)

    def test_one_hot_evidence_from_uniform_prior(self):
        prior = PosteriorDistribution.uniform(EIGHT_ACTORS)
        ccc = {actor_id: 0.0 for actor_id in EIGHT_ACTORS}
        ccc["APT-003"] = 1.0
        posterior = bayes_update(prior, ccc, self.config)
        self.assertAlmostEqual(posterior["APT-003"], 0.2375 / 1.1125, places=12)
        self.assertAlmostEqual(posterior["APT-003"], 0.2135, places=4)
        self.assertAlmostEqual(posterior["APT-001"], 0.125 / 1.1125, places=12)
        self.assertAlmostEqual(posterior["APT-001"], 0.1124, places=4)

    def test_zero_evidence_is_a_fixed_point(self):
        rng = np.random.default_rng(1)
        weights = rng.uniform(0.1, 1.0, len(EIGHT_ACTORS))
        prior = PosteriorDistribution(dict(zip(EIGHT_ACTORS, (weights / weights.sum()).tolist())))
        posterior = bayes_update(prior, {actor_id: 0.0 for actor_id in EIGHT_ACTORS}, self.config)
        for actor_id in EIGHT_ACTORS:
            self.assertAlmostEqual(posterior[actor_id], prior[actor_id], places=12)

    def test_equal_evidence_keeps_uniform_prior(self):
        prior = PosteriorDistribution.uniform(EIGHT_ACTORS)
        posterior = bayes_update(prior, {actor_id: 0.6 for actor_id in EIGHT_ACTORS}, self.config)
        for actor_id in EIGHT_ACTORS:
            self.assertAlmostEqual(posterior[actor_id], 0.125, places=12)

    def test_update_preserves_normalization_and_positivity(self):
        rng = np.random.default_rng(2)
        for trial in range(50):
            weights = rng.uniform(0.01, 1.0, len(EIGHT_ACTORS))
            prior = PosteriorDistribution(dict(zip(EIGHT_ACTORS, (weights / weights.sum()).tolist())))
            ccc = dict(zip(EIGHT_ACTORS, rng.uniform(0.0, 1.0, len(EIGHT_ACTORS)).tolist()))
            posterior = bayes_update(prior, ccc, self.config)
            with self.subTest(trial=trial):
                self.assertAlmostEqual(math.fsum(posterior.probabilities.values()), 1.0, delta=1e-9)
                self.assertTrue(all(value > 0 for value in posterior.probabilities.values()))

    def test_more_evidence_never_lowers_posterior(self):
        rng = np.random.default_rng(4)
        prior = PosteriorDistribution.uniform(EIGHT_ACTORS)
        ccc = dict(zip(EIGHT_ACTORS, rng.uniform(0.0, 0.5, len(EIGHT_ACTORS)).tolist()))
        previous = 0.0
        for value in np.linspace(0.0, 1.0, 11):
            ccc["APT-005"] = float(value)
            current = bayes_update(prior, ccc, self.config)["APT-005"]
            self.assertGreaterEqual(current, previous - 1e-15)
            previous = current

    def test_missing_scores_rejected(self):
        with self.assertRaises(ValueError):
            bayes_update(PosteriorDistribution.uniform(EIGHT_ACTORS), {"APT-001": 0.5}, self.config)

    def test_posterior_must_sum_to_one(self):
        with self.assertRaises(ValueError):
            PosteriorDistribution({"APT-001": 0.5, "APT-002": 0.2})


class AttributeCampaignTests(SimpleTestCase):
    def setUp(self):
        self.config = AttributionConfig(actor_ids=("APT-002", "APT-001", "APT-003"))
        self.prior = PosteriorDistribution.uniform(self.config.actor_ids)

    def test_config_sorts_and_validates_actors(self):
        self.assertEqual(self.config.actor_ids, ("APT-001", "APT-002", "APT-003"))
        with self.assertRaises(ValueError):
            AttributionConfig(actor_ids=("APT-001",))
        with self.assertRaises(ValueError):
            AttributionConfig(actor_ids=EIGHT_ACTORS, similarity_threshold=1.5)

    def test_not_attributable_below_min_train(self):
        kb = KnowledgeBase(actor_ids=self.config.actor_ids)
        outcome = attribute_campaign(unit_fingerprint(0), kb, self.prior, self.config)
        self.assertIsInstance(outcome, NotYetAttributable)
        self.assertIsNone(outcome.to_dict()["predicted_actor"])

    def test_only_positive_evidence_wins(self):
        kb = KnowledgeBase(actor_ids=self.config.actor_ids)
        kb = observe_campaign(kb, unit_fingerprint(2, "A", BASE_DAY - timedelta(days=3)), "APT-003")
        result = attribute_campaign(unit_fingerprint(2, "Q"), kb, self.prior, self.config)
        self.assertIsInstance(result, AttributionResult)
        self.assertEqual(result.predicted_actor, "APT-003")
        self.assertEqual(result.confidence, max(result.posterior.probabilities.values()))
        self.assertEqual(result.high_confidence, result.confidence >= self.config.confidence_threshold)

    def test_ties_go_to_smaller_actor_id(self):
        kb = KnowledgeBase(actor_ids=self.config.actor_ids)
        shared = make_fingerprint([0.5, 0.5], "S", BASE_DAY - timedelta(days=1))
        kb = observe_campaign(kb, shared, "APT-003")
        kb = observe_campaign(kb, shared, "APT-002")
        result = attribute_campaign(make_fingerprint([0.5, 0.5], "Q"), kb, self.prior, self.config)
        self.assertEqual(result.predicted_actor, "APT-002")
        self.assertEqual(argmax_actor({"b": 1.0, "a": 1.0, "c": 0.5}), "a")

    def test_min_train_counts_whole_knowledge_base(self):
        config = AttributionConfig(actor_ids=self.config.actor_ids, min_train=2)
        kb = observe_campaign(KnowledgeBase(actor_ids=config.actor_ids), unit_fingerprint(0, "A"), "APT-001")
        self.assertIsInstance(attribute_campaign(unit_fingerprint(0), kb, self.prior, config), NotYetAttributable)
        kb = observe_campaign(kb, unit_fingerprint(1, "B"), "APT-002")
        self.assertIsInstance(attribute_campaign(unit_fingerprint(0), kb, self.prior, config), AttributionResult)


class ObserveCampaignTests(SimpleTestCase):
    def setUp(self):
        self.kb = KnowledgeBase(actor_ids=("APT-001", "APT-002"))

    def test_append_to_empty(self):
        updated = observe_campaign(self.kb, unit_fingerprint(0), "APT-001")
        self.assertEqual(len(updated), 1)
        self.assertEqual(len(self.kb), 0)

    def test_append_keeps_order(self):
        first = unit_fingerprint(0, "A", BASE_DAY)
        second = unit_fingerprint(1, "B", BASE_DAY + timedelta(days=5))
        kb = observe_campaign(observe_campaign(self.kb, first, "APT-001"), second, "APT-001")
        self.assertEqual([entry.fingerprint.campaign_id for entry in kb.entries_for("APT-001")], ["A", "B"])
        self.assertEqual(kb.latest_date(), BASE_DAY + timedelta(days=5))

    def test_unknown_actor_rejected(self):
        with self.assertRaises(ValueError):
            observe_campaign(self.kb, unit_fingerprint(0), "APT-999")

    def test_snapshot_lists_every_actor(self):
        kb = observe_campaign(self.kb, unit_fingerprint(0, "A"), "APT-002")
        snapshot = kb.to_dict()
        self.assertEqual(snapshot["actors"]["APT-001"], [])
        self.assertEqual(snapshot["actors"]["APT-002"][0]["fingerprint"]["campaign_id"], "A")
