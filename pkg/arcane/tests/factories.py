from __future__ import annotations

import math
from datetime import date, datetime, timedelta, timezone

from arcane.fingerprints import FINGERPRINT_DIMENSIONS, CallbackTelemetry, CampaignFingerprint
from arcane.services.attribution import KnowledgeEntry

BASE_TIME = datetime(2024, 3, 4, 10, 0, tzinfo=timezone.utc)
BASE_DAY = date(2024, 3, 4)


def make_callback(**overrides) -> CallbackTelemetry:
    fields = {
        "timestamp": BASE_TIME,
        "source_ip": "10.0.0.1",
        "asn_prefix": "AS100",
        "is_tor": False,
        "is_vpn": False,
        "is_vm": False,
        "os_family": "windows",
        "locale": "ko_KP",
        "utc_offset": 9,
        "country": "KP",
        "tools": frozenset({"Mimikatz"}),
        "dwell_hours": 4.0,
    }
    fields.update(overrides)
    return CallbackTelemetry(**fields)


def make_fingerprint(values, campaign_id: str = "C-1", day: date = BASE_DAY, callbacks: int = 3) -> CampaignFingerprint:
    padded = list(values) + [0.0] * (FINGERPRINT_DIMENSIONS - len(values))
    return CampaignFingerprint(
        values=tuple(padded),
        campaign_id=campaign_id,
        campaign_date=day,
        callback_count=callbacks,
    )


def unit_fingerprint(axis: int, campaign_id: str = "C-1", day: date = BASE_DAY) -> CampaignFingerprint:
    values = [0.0] * FINGERPRINT_DIMENSIONS
    values[axis] = 1.0
    return make_fingerprint(values, campaign_id, day)


def fingerprint_at_similarity(similarity: float, campaign_id: str = "C-1", day: date = BASE_DAY) -> CampaignFingerprint:
    """Cosine similarity to unit_fingerprint(0) equals `similarity`."""
    return make_fingerprint([similarity, math.sqrt(1.0 - similarity**2)], campaign_id, day)


def orthogonal_entries(actor_ids, campaigns_per_actor: int, start: date = BASE_DAY, step_days: int = 10):
    entries = []
    for index in range(campaigns_per_actor):
        day = start + timedelta(days=index * step_days)
        for axis, actor_id in enumerate(actor_ids):
            entries.append(
                KnowledgeEntry(
                    fingerprint=unit_fingerprint(axis, f"{actor_id}-C{index + 1:02d}", day),
                    campaign_date=day,
                    actor_id=actor_id,
                )
            )
    return entries
