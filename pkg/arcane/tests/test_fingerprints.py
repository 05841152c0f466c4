import math
from datetime import timedelta

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from arcane.fingerprints import (
    DEFAULT_CATALOG,
    FINGERPRINT_DIMENSIONS,
    CallbackTelemetry,
    ToolCluster,
    ToolClusterCatalog,
    cosine_similarity,
    extract_fingerprint,
    hour_entropy,
    jaccard,
    pairwise_similarity_matrix,
)
from arcane.tests.factories import BASE_TIME, make_callback, make_fingerprint, unit_fingerprint

TOOL_CHOICES = ["Mimikatz", "PlugX", "Cobalt Strike", "BloodHound", "Rclone", "Wireshark", "Turla"]
COUNTRY_CHOICES = ["KP", "RU", "CN", "IR", "US", "DE"]


def random_callbacks(rng: np.random.Generator, count: int) -> list[CallbackTelemetry]:
    callbacks = []
    for _ in range(count):
        tools = rng.choice(TOOL_CHOICES, size=int(rng.integers(0, 4)), replace=False)
        callbacks.append(
            make_callback(
                timestamp=BASE_TIME + timedelta(hours=int(rng.integers(0, 500)), minutes=int(rng.integers(0, 60))),
                source_ip=f"10.0.0.{int(rng.integers(1, 6))}",
                asn_prefix=f"AS{int(rng.integers(1, 4))}",
                is_tor=bool(rng.random() < 0.5),
                is_vpn=bool(rng.random() < 0.5),
                is_vm=bool(rng.random() < 0.5),
                locale=["en_US", "ko_KP", "ru_RU"][int(rng.integers(0, 3))],
                utc_offset=int(rng.integers(-12, 15)),
                country=COUNTRY_CHOICES[int(rng.integers(0, len(COUNTRY_CHOICES)))],
                tools=frozenset(str(tool) for tool in tools),
                dwell_hours=float(rng.uniform(0.0, 80.0)),
            )
        )
    return callbacks


class ExtractFingerprintTests(SimpleTestCase):
    def test_single_country_gives_diversity_complement(self):
        fingerprint = extract_fingerprint([make_callback(source_ip=f"10.0.0.{i}") for i in range(4)])
        self.assertAlmostEqual(fingerprint.values[16], 0.75, places=12)

    def test_callback_count_saturates_at_nineteen(self):
        fingerprint = extract_fingerprint([make_callback() for _ in range(19)])
        self.assertAlmostEqual(fingerprint.values[17], 1.0, places=12)

    def test_callback_count_for_three(self):
        fingerprint = extract_fingerprint([make_callback() for _ in range(3)])
        self.assertAlmostEqual(fingerprint.values[17], math.log(4) / math.log(20), places=9)
        self.assertAlmostEqual(fingerprint.values[17], 0.4628, places=4)

    def test_same_hour_has_zero_entropy(self):
        fingerprint = extract_fingerprint([make_callback(timestamp=BASE_TIME + timedelta(days=i)) for i in range(5)])
        self.assertEqual(fingerprint.values[15], 0.0)

    def test_rates_offsets_and_clusters(self):
        callbacks = [
            make_callback(is_tor=True, locale="en_US", dwell_hours=2.0),
            make_callback(is_tor=True, is_vpn=True, dwell_hours=6.0),
            make_callback(is_vm=True, country="RU", dwell_hours=2.0),
            make_callback(tools=frozenset({"PlugX", "Mimikatz"}), dwell_hours=6.0),
        ]
        values = extract_fingerprint(callbacks).values
        self.assertAlmostEqual(values[0], 0.5)
        self.assertAlmostEqual(values[1], 0.25)
        self.assertAlmostEqual(values[2], 4.0 / 24.0)
        self.assertAlmostEqual(values[3], 2.0 / 12.0)
        self.assertAlmostEqual(values[4], 21.0 / 26.0)
        self.assertAlmostEqual(values[5], 0.25)
        self.assertAlmostEqual(values[10], 0.75)
        self.assertAlmostEqual(values[11], 0.75)
        self.assertAlmostEqual(values[12], 0.25)
        self.assertAlmostEqual(values[16], 0.5)
        self.assertEqual(values[18:], (1.0, 0.0, 1.0, 0.0, 0.0, 0.0))

    def test_single_callback_tool_consistency_is_one(self):
        fingerprint = extract_fingerprint([make_callback()])
        self.assertEqual(fingerprint.values[8], 1.0)
        self.assertEqual(fingerprint.callback_count, 1)

    def test_empty_campaign_is_rejected(self):
        with self.assertRaises(ValueError):
            extract_fingerprint([])

    def test_invalid_record_names_the_field(self):
        with self.assertRaises(ValidationError) as ctx:
            make_callback(utc_offset=20)
        self.assertIn("utc_offset", ctx.exception.message_dict)

        with self.assertRaises(ValidationError) as ctx:
            make_callback(dwell_hours=-1.0)
        self.assertIn("dwell_hours", ctx.exception.message_dict)

    def test_duplicate_tools_rejected_when_parsing(self):
        payload = make_callback().to_dict()
        payload["tools"] = ["Mimikatz", "Mimikatz"]
        with self.assertRaises(ValidationError) as ctx:
            CallbackTelemetry.from_dict(payload)
        self.assertIn("tools", ctx.exception.message_dict)

    def test_flags_must_be_booleans_when_parsing(self):
        for field in ("is_tor", "is_vpn", "is_vm"):
            for value in ("false", 0, None):
                with self.subTest(field=field, value=value):
                    payload = make_callback().to_dict()
                    payload[field] = value
                    with self.assertRaises(ValidationError) as ctx:
                        CallbackTelemetry.from_dict(payload)
                    self.assertIn(field, ctx.exception.message_dict)

        payload = make_callback(is_tor=True).to_dict()
        self.assertIs(CallbackTelemetry.from_dict(payload).is_tor, True)

    def test_values_always_in_unit_cube(self):
        rng = np.random.default_rng(7)
        for trial in range(50):
            with self.subTest(trial=trial):
                fingerprint = extract_fingerprint(random_callbacks(rng, int(rng.integers(1, 25))))
                self.assertEqual(len(fingerprint.values), FINGERPRINT_DIMENSIONS)
                self.assertTrue(all(0.0 <= value <= 1.0 for value in fingerprint.values))

    def test_callback_order_does_not_matter(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            callbacks = random_callbacks(rng, int(rng.integers(2, 10)))
            shuffled = [callbacks[i] for i in rng.permutation(len(callbacks))]
            with self.subTest(trial=trial):
                self.assertEqual(extract_fingerprint(callbacks).values, extract_fingerprint(shuffled).values)

    def test_callback_count_feature_is_monotone(self):
        previous = 0.0
        for count in range(1, 30):
            value = extract_fingerprint([make_callback() for _ in range(count)]).values[17]
            self.assertGreaterEqual(value, previous)
            previous = value
        self.assertEqual(previous, 1.0)


class SimilarityTests(SimpleTestCase):
    def test_identity_orthogonality_and_diagonal(self):
        a = unit_fingerprint(0)
        self.assertAlmostEqual(cosine_similarity(a, a), 1.0, places=12)
        self.assertEqual(cosine_similarity(a, unit_fingerprint(1)), 0.0)
        self.assertAlmostEqual(cosine_similarity(make_fingerprint([1.0, 1.0]), a), 1 / math.sqrt(2), places=12)

    def test_symmetric_and_scale_invariant(self):
        rng = np.random.default_rng(3)
        for trial in range(30):
            a = rng.uniform(0.01, 1.0, FINGERPRINT_DIMENSIONS)
            b = rng.uniform(0.01, 1.0, FINGERPRINT_DIMENSIONS)
            with self.subTest(trial=trial):
                self.assertAlmostEqual(cosine_similarity(a, b), cosine_similarity(b, a), places=12)
                self.assertAlmostEqual(cosine_similarity(a * 3.7, b), cosine_similarity(a, b), places=12)

    def test_zero_vector_logs_and_returns_zero(self):
        with self.assertLogs("arcane.fingerprints", level="WARNING"):
            self.assertEqual(cosine_similarity(np.zeros(FINGERPRINT_DIMENSIONS), unit_fingerprint(0)), 0.0)

    def test_pairwise_matrix_is_symmetric(self):
        rng = np.random.default_rng(5)
        matrix = pairwise_similarity_matrix(rng.uniform(0.0, 1.0, (12, FINGERPRINT_DIMENSIONS)))
        self.assertTrue(np.allclose(matrix, matrix.T, atol=1e-12))
        self.assertTrue(np.allclose(np.diag(matrix), 1.0))

    def test_jaccard(self):
        self.assertEqual(jaccard({"X", "Y"}, {"X", "Y"}), 1.0)
        self.assertEqual(jaccard({"X"}, {"Y"}), 0.0)
        self.assertAlmostEqual(jaccard({"X", "Y", "Z"}, {"X", "Y"}), 2 / 3)
        self.assertEqual(jaccard(set(), set()), 1.0)

    def test_hour_entropy(self):
        self.assertEqual(hour_entropy([3, 3, 3, 3]), 0.0)
        self.assertAlmostEqual(hour_entropy(list(range(24))), 1.0, places=12)
        self.assertAlmostEqual(hour_entropy([0, 0, 12, 12]), math.log(2) / math.log(24), places=12)
        self.assertAlmostEqual(hour_entropy([0, 0, 12, 12]), 0.2181, places=4)
        with self.assertRaises(ValueError):
            hour_entropy([])


class ToolClusterCatalogTests(SimpleTestCase):
    def test_default_catalog_order(self):
        self.assertEqual(
            DEFAULT_CATALOG.names,
            [
                "credential_theft",
                "c2_frameworks",
                "chinese_rats",
                "ad_recon",
                "nation_state_implants",
                "analyst_tools",
            ],
        )

    def test_catalog_needs_six_clusters(self):
        with self.assertRaises(ValueError):
            ToolClusterCatalog(clusters=DEFAULT_CATALOG.clusters[:5])
        with self.assertRaises(ValueError):
            ToolClusterCatalog(clusters=(*DEFAULT_CATALOG.clusters[:5], ToolCluster("empty", frozenset())))

    def test_cluster_matching_ignores_case(self):
        self.assertEqual(DEFAULT_CATALOG.indicators(["mimikatz", "PLUGX"]), [1.0, 0.0, 1.0, 0.0, 0.0, 0.0])

    def test_fingerprint_rejects_wrong_length(self):
        with self.assertRaises(ValidationError) as ctx:
            make_fingerprint([0.5] * 30)
        self.assertIn("values", ctx.exception.message_dict)
