from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from datetime import date
from typing import Mapping

import numpy as np

from arcane.fingerprints import CampaignFingerprint, cosine_similarities

logger = logging.getLogger(__name__)

DEFAULT_DECAY_RATE = 0.005
DEFAULT_SIMILARITY_THRESHOLD = 0.45
DEFAULT_CONFIDENCE_THRESHOLD = 0.85
DEFAULT_MIN_TRAIN = 1
UNINFORMATIVE_LIKELIHOOD = 0.50
DEFAULT_LIKELIHOOD_SLOPE = 0.45
DEFAULT_LIKELIHOOD_FLOOR = 0.05
NORMALIZATION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class AttributionConfig:
    actor_ids: tuple[str, ...]
    decay_rate: float = DEFAULT_DECAY_RATE
    similarity_threshold: float = DEFAULT_SIMILARITY_THRESHOLD
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    min_train: int = DEFAULT_MIN_TRAIN
    likelihood_slope: float = DEFAULT_LIKELIHOOD_SLOPE
    likelihood_floor: float = DEFAULT_LIKELIHOOD_FLOOR
    carry_prior: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "actor_ids", tuple(sorted(set(self.actor_ids))))
        if len(self.actor_ids) < 2:
            raise ValueError("Attribution needs at least two candidate actors.")
        if self.decay_rate < 0:
            raise ValueError("decay_rate must be non-negative.")
        for name in ("similarity_threshold", "confidence_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}.")
        if self.min_train < 1:
            raise ValueError("min_train must be at least 1.")
        if not 0.0 <= self.likelihood_slope <= UNINFORMATIVE_LIKELIHOOD:
            raise ValueError("likelihood_slope must lie in [0, 0.5].")
        if not 0.0 < self.likelihood_floor <= UNINFORMATIVE_LIKELIHOOD:
            raise ValueError("likelihood_floor must lie in (0, 0.5].")

    @property
    def num_actors(self) -> int:
        return len(self.actor_ids)

    def require_actor(self, actor_id: str) -> None:
        if actor_id not in self.actor_ids:
            raise ValueError(f"Unknown actor {actor_id!r}.")


@dataclass(frozen=True)
class KnowledgeEntry:
    fingerprint: CampaignFingerprint
    campaign_date: date
    actor_id: str


@dataclass(frozen=True)
class KnowledgeBase:
    actor_ids: tuple[str, ...]
    entries: tuple[KnowledgeEntry, ...] = ()
    reference_date: date | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "actor_ids", tuple(sorted(set(self.actor_ids))))
        object.__setattr__(self, "entries", tuple(self.entries))
        unknown = sorted({entry.actor_id for entry in self.entries} - set(self.actor_ids))
        if unknown:
            raise ValueError(f"Knowledge base entries for unknown actors: {', '.join(unknown)}")

    def __len__(self) -> int:
        return len(self.entries)

    def entries_for(self, actor_id: str) -> list[KnowledgeEntry]:
        return [entry for entry in self.entries if entry.actor_id == actor_id]

    def count_for(self, actor_id: str) -> int:
        return sum(1 for entry in self.entries if entry.actor_id == actor_id)

    def latest_date(self) -> date | None:
        if not self.entries:
            return None
        return max(entry.campaign_date for entry in self.entries)

    def to_dict(self) -> dict:
        return {
            "reference_date": self.reference_date.isoformat() if self.reference_date else None,
            "actors": {
                actor_id: [
                    {
                        "date": entry.campaign_date.isoformat(),
                        "fingerprint": entry.fingerprint.to_dict(),
                    }
                    for entry in self.entries_for(actor_id)
                ]
                for actor_id in self.actor_ids
            },
        }


@dataclass(frozen=True)
class PosteriorDistribution:
    probabilities: dict[str, float]

    def __post_init__(self) -> None:
        values = list(self.probabilities.values())
        if not values:
            raise ValueError("Posterior needs at least one actor.")
        if any(not 0.0 <= value <= 1.0 for value in values):
            raise ValueError("Posterior probabilities must lie in [0, 1].")
        if abs(math.fsum(values) - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"Posterior must sum to 1, got {math.fsum(values)!r}.")

    @classmethod
    def uniform(cls, actor_ids) -> PosteriorDistribution:
        ids = sorted(actor_ids)
        return cls({actor_id: 1.0 / len(ids) for actor_id in ids})

    def __getitem__(self, actor_id: str) -> float:
        return self.probabilities[actor_id]

    def argmax(self) -> str:
        return argmax_actor(self.probabilities)

    def to_dict(self) -> dict[str, float]:
        return {actor_id: self.probabilities[actor_id] for actor_id in sorted(self.probabilities)}


@dataclass(frozen=True)
class AttributionResult:
    predicted_actor: str
    posterior: PosteriorDistribution
    confidence: float
    high_confidence: bool
    ccc_scores: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "predicted_actor": self.predicted_actor,
            "confidence": self.confidence,
            "high_confidence": self.high_confidence,
            "posterior": self.posterior.to_dict(),
            "ccc_scores": {key: self.ccc_scores[key] for key in sorted(self.ccc_scores)},
        }


@dataclass(frozen=True)
class NotYetAttributable:
    reason: str

    def to_dict(self) -> dict:
        return {"predicted_actor": None, "reason": self.reason}


def argmax_actor(scores: Mapping[str, float]) -> str:
    best_actor = ""
    best_score = -math.inf
    for actor_id in sorted(scores):
        if scores[actor_id] > best_score:
            best_actor, best_score = actor_id, scores[actor_id]
    return best_actor


def cross_campaign_confidence(
    query: CampaignFingerprint,
    actor: str,
    kb: KnowledgeBase,
    config: AttributionConfig,
) -> float:
    config.require_actor(actor)
    entries = kb.entries_for(actor)
    if not entries:
        return 0.0
    reference = kb.reference_date or query.campaign_date
    similarities = cosine_similarities(query, np.stack([entry.fingerprint.vector for entry in entries]))
    elapsed = np.array([(reference - entry.campaign_date).days for entry in entries], dtype=float)
    retained = similarities >= config.similarity_threshold
    if not np.any(retained):
        return 0.0
    weighted = similarities[retained] * np.exp(-config.decay_rate * elapsed[retained])
    return float(np.clip(weighted.mean(), 0.0, 1.0))


def evidence_likelihood(ccc: float, config: AttributionConfig) -> tuple[float, float]:
    if not 0.0 <= ccc <= 1.0:
        raise ValueError(f"CCC must lie in [0, 1], got {ccc!r}.")
    likelihood = UNINFORMATIVE_LIKELIHOOD + config.likelihood_slope * ccc
    counter = max(
        config.likelihood_floor,
        UNINFORMATIVE_LIKELIHOOD - config.likelihood_slope * ccc / (config.num_actors - 1),
    )
    return likelihood, counter


def bayes_update(
    prior: PosteriorDistribution,
    ccc_scores: Mapping[str, float],
    config: AttributionConfig,
) -> PosteriorDistribution:
    missing = sorted(set(prior.probabilities) - set(ccc_scores))
    if missing:
        raise ValueError(f"CCC scores missing for actors: {', '.join(missing)}")

    updated: dict[str, float] = {}
    for actor_id in sorted(prior.probabilities):
        p = prior[actor_id]
        likelihood, counter = evidence_likelihood(ccc_scores[actor_id], config)
        updated[actor_id] = likelihood * p / (likelihood * p + counter * (1.0 - p))

    total = math.fsum(updated.values())
    return PosteriorDistribution({actor_id: value / total for actor_id, value in updated.items()})


def attribute_campaign(
    query: CampaignFingerprint,
    kb: KnowledgeBase,
    prior: PosteriorDistribution,
    config: AttributionConfig,
) -> AttributionResult | NotYetAttributable:
    if len(kb) < config.min_train:
        return NotYetAttributable(
            reason=f"knowledge base holds {len(kb)} campaigns, min_train is {config.min_train}"
        )

    ccc_scores = {
        actor_id: cross_campaign_confidence(query, actor_id, kb, config)
        for actor_id in config.actor_ids
    }
    posterior = bayes_update(prior, ccc_scores, config)
    predicted = posterior.argmax()
    confidence = posterior[predicted]
    logger.debug(
        "[arcane] %s -> %s (confidence=%.4f)", query.campaign_id or "<query>", predicted, confidence
    )
    return AttributionResult(
        predicted_actor=predicted,
        posterior=posterior,
        confidence=confidence,
        high_confidence=confidence >= config.confidence_threshold,
        ccc_scores=ccc_scores,
    )


def observe_campaign(
    kb: KnowledgeBase,
    fingerprint: CampaignFingerprint,
    truth: str,
) -> KnowledgeBase:
    if truth not in kb.actor_ids:
        raise ValueError(f"Unknown actor {truth!r}.")
    entry = KnowledgeEntry(
        fingerprint=fingerprint,
        campaign_date=fingerprint.campaign_date,
        actor_id=truth,
    )
    return KnowledgeBase(
        actor_ids=kb.actor_ids,
        entries=(*kb.entries, entry),
        reference_date=kb.reference_date,
    )
