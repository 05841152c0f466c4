from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from arcane.fingerprints import FINGERPRINT_DIMENSIONS, CampaignFingerprint, cosine_similarity
from arcane.services.attribution import (
    AttributionResult,
    NotYetAttributable,
    PosteriorDistribution,
    argmax_actor,
)


@dataclass(frozen=True)
class RunningProfile:
    actor_id: str
    mean_fingerprint: tuple[float, ...] = (0.0,) * FINGERPRINT_DIMENSIONS
    count: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean_fingerprint", tuple(float(item) for item in self.mean_fingerprint))
        if len(self.mean_fingerprint) != FINGERPRINT_DIMENSIONS:
            raise ValueError(f"Profile mean must have {FINGERPRINT_DIMENSIONS} dimensions.")
        if self.count < 0:
            raise ValueError("Profile count must be non-negative.")

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.mean_fingerprint, dtype=float)


def baseline_observe(profile: RunningProfile, fingerprint: CampaignFingerprint) -> RunningProfile:
    count = profile.count + 1
    mean = (profile.vector * profile.count + fingerprint.vector) / count
    return RunningProfile(
        actor_id=profile.actor_id,
        mean_fingerprint=tuple(float(item) for item in np.clip(mean, 0.0, 1.0)),
        count=count,
    )


def baseline_attribute(
    query: CampaignFingerprint,
    profiles: Sequence[RunningProfile],
    min_train: int = 1,
    confidence_threshold: float = 1.0,
) -> AttributionResult | NotYetAttributable:
    eligible = [profile for profile in profiles if profile.count >= max(1, min_train)]
    if not eligible:
        return NotYetAttributable(reason=f"no actor profile has {min_train} observed campaigns")

    similarities = {profile.actor_id: cosine_similarity(query, profile.vector) for profile in eligible}
    total = math.fsum(similarities.values())
    if total > 0:
        shares = {actor_id: value / total for actor_id, value in similarities.items()}
    else:
        shares = {actor_id: 1.0 / len(similarities) for actor_id in similarities}

    predicted = argmax_actor(similarities)
    confidence = shares[predicted]
    return AttributionResult(
        predicted_actor=predicted,
        posterior=PosteriorDistribution(shares),
        confidence=confidence,
        high_confidence=confidence >= confidence_threshold,
        ccc_scores=similarities,
    )
