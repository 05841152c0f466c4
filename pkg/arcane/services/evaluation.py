from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import date
from itertools import groupby
from typing import Callable, Iterable, Mapping, Sequence, TypeVar

import numpy as np

from arcane.fingerprints import (
    DEFAULT_CATALOG,
    ToolClusterCatalog,
    extract_fingerprint,
    pairwise_similarity_matrix,
)
from arcane.services.attribution import (
    AttributionConfig,
    AttributionResult,
    KnowledgeBase,
    KnowledgeEntry,
    PosteriorDistribution,
    attribute_campaign,
    observe_campaign,
)
from arcane.services.baseline import RunningProfile, baseline_attribute, baseline_observe
from arcane.services.seeds import derive_seed, make_rng
from arcane.services.statistics import (
    SignificanceResult,
    linear_trend,
    mcnemar_exact,
    one_way_anova,
    paired_t_test,
    required_gap,
    welch_t_test,
)
from arcane.simulation import DEFAULT_SEED, Campaign, DatasetConfig, generate_dataset

logger = logging.getLogger(__name__)

METHOD_ARCANE = "arcane"
METHOD_BASELINE = "baseline"
METHODS = (METHOD_ARCANE, METHOD_BASELINE)

DEFAULT_SEPARABILITY_PAIRS = 2000
DEFAULT_ALPHA = 0.05
DEFAULT_EVASION_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_SWEEP_TRIALS = 20
DEFAULT_MIN_TRAIN_VALUES = (1, 2, 3, 4, 5, 6)
HISTOGRAM_BINS = 40

__all__ = [
    "AttributionRecord",
    "EvaluationReport",
    "EvasionPoint",
    "EvasionSweepReport",
    "LearningCurvePoint",
    "MethodSummary",
    "MonthlyPoint",
    "SeparabilityReport",
    "SimilarityMatrix",
    "evaluate_entries",
    "evasion_sweep",
    "fingerprint_campaigns",
    "knowledge_base_from_entries",
    "leakage_violations",
    "learning_curve",
    "learning_curve_trials",
    "run_temporal_loo",
    "separability_analysis",
    "separability_from_entries",
    "similarity_matrix",
    "similarity_matrix_from_entries",
    "welch_t_test",
]

T = TypeVar("T")
R = TypeVar("R")


def _finite(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def _mean(values: Sequence[float]) -> float | None:
    if not values:
        return None
    return math.fsum(values) / len(values)


def _spread(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(np.asarray(values, dtype=float), ddof=1))


@dataclass(frozen=True)
class AttributionRecord:
    campaign_id: str
    actor_id: str
    start_date: date
    knowledge_size: int
    latest_evidence_date: date | None
    arcane_prediction: str
    arcane_confidence: float
    arcane_high_confidence: bool
    baseline_prediction: str
    baseline_confidence: float
    baseline_high_confidence: bool

    @property
    def arcane_correct(self) -> bool:
        return self.arcane_prediction == self.actor_id

    @property
    def baseline_correct(self) -> bool:
        return self.baseline_prediction == self.actor_id

    def prediction(self, method: str) -> str:
        return self.arcane_prediction if method == METHOD_ARCANE else self.baseline_prediction

    def confidence(self, method: str) -> float:
        return self.arcane_confidence if method == METHOD_ARCANE else self.baseline_confidence

    def high_confidence(self, method: str) -> bool:
        return self.arcane_high_confidence if method == METHOD_ARCANE else self.baseline_high_confidence

    def correct(self, method: str) -> bool:
        return self.prediction(method) == self.actor_id

    def to_dict(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "actor_id": self.actor_id,
            "start_date": self.start_date.isoformat(),
            "knowledge_size": self.knowledge_size,
            "latest_evidence_date": (
                self.latest_evidence_date.isoformat() if self.latest_evidence_date else None
            ),
            "arcane_prediction": self.arcane_prediction,
            "arcane_confidence": self.arcane_confidence,
            "arcane_high_confidence": self.arcane_high_confidence,
            "arcane_correct": self.arcane_correct,
            "baseline_prediction": self.baseline_prediction,
            "baseline_confidence": self.baseline_confidence,
            "baseline_high_confidence": self.baseline_high_confidence,
            "baseline_correct": self.baseline_correct,
        }


@dataclass(frozen=True)
class MethodSummary:
    method: str
    evaluated: int
    correct: int
    overall_accuracy: float | None
    mean_confidence: float | None
    per_actor_accuracy: dict[str, float | None]
    per_actor_evaluated: dict[str, int]
    high_confidence_count: int
    high_confidence_accuracy: float | None
    confidences: tuple[float, ...] = field(default=(), repr=False)

    @classmethod
    def from_records(
        cls, method: str, records: Sequence[AttributionRecord], actor_ids: Iterable[str]
    ) -> MethodSummary:
        correct = [record.correct(method) for record in records]
        confidences = tuple(record.confidence(method) for record in records)
        per_actor_accuracy: dict[str, float | None] = {}
        per_actor_evaluated: dict[str, int] = {}
        for actor_id in sorted(actor_ids):
            outcomes = [record.correct(method) for record in records if record.actor_id == actor_id]
            per_actor_evaluated[actor_id] = len(outcomes)
            per_actor_accuracy[actor_id] = _mean([float(item) for item in outcomes])
        high = [record.correct(method) for record in records if record.high_confidence(method)]
        return cls(
            method=method,
            evaluated=len(records),
            correct=sum(correct),
            overall_accuracy=_mean([float(item) for item in correct]),
            mean_confidence=_mean(confidences),
            per_actor_accuracy=per_actor_accuracy,
            per_actor_evaluated=per_actor_evaluated,
            high_confidence_count=len(high),
            high_confidence_accuracy=_mean([float(item) for item in high]),
            confidences=confidences,
        )

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "evaluated": self.evaluated,
            "correct": self.correct,
            "overall_accuracy": self.overall_accuracy,
            "mean_confidence": self.mean_confidence,
            "per_actor_accuracy": dict(self.per_actor_accuracy),
            "per_actor_evaluated": dict(self.per_actor_evaluated),
            "high_confidence_count": self.high_confidence_count,
            "high_confidence_accuracy": self.high_confidence_accuracy,
        }


@dataclass(frozen=True)
class MonthlyPoint:
    """One calendar month; accuracy fields are None for a month with nothing evaluated."""

    month: str
    evaluated: int
    arcane_accuracy: float | None
    arcane_mean_confidence: float | None
    baseline_accuracy: float | None
    baseline_mean_confidence: float | None

    @property
    def is_gap(self) -> bool:
        return self.evaluated == 0

    def to_dict(self) -> dict:
        return {
            "month": self.month,
            "evaluated": self.evaluated,
            "arcane_accuracy": self.arcane_accuracy,
            "arcane_mean_confidence": self.arcane_mean_confidence,
            "baseline_accuracy": self.baseline_accuracy,
            "baseline_mean_confidence": self.baseline_mean_confidence,
        }


@dataclass(frozen=True)
class SeparabilityReport:
    mean_within: float
    mean_cross: float
    gap_delta_S: float
    std_within: float
    t_statistic: float
    p_value: float
    sampled_pairs: int
    required_gap: float
    campaigns_per_actor: float
    alpha: float = DEFAULT_ALPHA
    within_samples: tuple[float, ...] = field(default=(), repr=False)
    cross_samples: tuple[float, ...] = field(default=(), repr=False)

    @property
    def meets_required_gap(self) -> bool:
        return self.gap_delta_S >= self.required_gap

    def histogram(self, bins: int = HISTOGRAM_BINS) -> list[tuple[float, float, int, int]]:
        edges = np.linspace(0.0, 1.0, bins + 1)
        within, _ = np.histogram(np.asarray(self.within_samples, dtype=float), bins=edges)
        cross, _ = np.histogram(np.asarray(self.cross_samples, dtype=float), bins=edges)
        return [
            (float(edges[index]), float(edges[index + 1]), int(within[index]), int(cross[index]))
            for index in range(bins)
        ]

    def to_dict(self) -> dict:
        return {
            "mean_within": self.mean_within,
            "mean_cross": self.mean_cross,
            "gap_delta_S": self.gap_delta_S,
            "std_within": self.std_within,
            "t_statistic": _finite(self.t_statistic),
            "p_value": self.p_value,
            "sampled_pairs": self.sampled_pairs,
            "required_gap": self.required_gap,
            "campaigns_per_actor": self.campaigns_per_actor,
            "alpha": self.alpha,
            "meets_required_gap": self.meets_required_gap,
        }


@dataclass(frozen=True)
class EvaluationReport:
    actor_ids: tuple[str, ...]
    min_train: int
    methods: dict[str, MethodSummary]
    monthly_series: tuple[MonthlyPoint, ...]
    attribution_log: tuple[AttributionRecord, ...]
    separability: SeparabilityReport | None = None
    comparison: dict[str, SignificanceResult] = field(default_factory=dict)

    @property
    def evaluated(self) -> int:
        return len(self.attribution_log)

    def overall_accuracy(self, method: str) -> float | None:
        return self.methods[method].overall_accuracy

    def mean_confidence(self, method: str) -> float | None:
        return self.methods[method].mean_confidence

    def per_actor_accuracy(self, method: str) -> dict[str, float | None]:
        return self.methods[method].per_actor_accuracy

    def to_dict(self) -> dict:
        return {
            "actor_ids": list(self.actor_ids),
            "min_train": self.min_train,
            "evaluated": self.evaluated,
            "methods": {name: summary.to_dict() for name, summary in self.methods.items()},
            "comparison": {name: result.to_dict() for name, result in self.comparison.items()},
            "separability": self.separability.to_dict() if self.separability else None,
            "monthly_series": [point.to_dict() for point in self.monthly_series],
            "attribution_log": [record.to_dict() for record in self.attribution_log],
        }


@dataclass(frozen=True)
class LearningCurvePoint:
    min_train: int
    evaluated: int
    arcane_accuracy: float | None
    baseline_accuracy: float | None
    trials: int = 1
    arcane_std: float | None = None
    baseline_std: float | None = None

    def to_dict(self) -> dict:
        return {
            "min_train": self.min_train,
            "evaluated": self.evaluated,
            "arcane_accuracy": self.arcane_accuracy,
            "baseline_accuracy": self.baseline_accuracy,
            "trials": self.trials,
            "arcane_std": self.arcane_std,
            "baseline_std": self.baseline_std,
        }


@dataclass(frozen=True)
class EvasionPoint:
    level: float
    trials: int
    mean_accuracy: float | None
    std_accuracy: float | None
    accuracies: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "trials": self.trials,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "accuracies": list(self.accuracies),
        }


@dataclass(frozen=True)
class EvasionSweepReport:
    points: tuple[EvasionPoint, ...]
    anova: SignificanceResult
    trend: SignificanceResult
    alpha: float = DEFAULT_ALPHA

    @property
    def accuracy_range(self) -> float | None:
        means = [point.mean_accuracy for point in self.points if point.mean_accuracy is not None]
        if not means:
            return None
        return max(means) - min(means)

    @property
    def significant_trend(self) -> bool:
        return self.trend.p_value is not None and self.trend.p_value < self.alpha

    def to_dict(self) -> dict:
        return {
            "points": [point.to_dict() for point in self.points],
            "accuracy_range": self.accuracy_range,
            "anova": self.anova.to_dict(),
            "trend": self.trend.to_dict(),
            "alpha": self.alpha,
            "significant_trend": self.significant_trend,
        }


@dataclass(frozen=True)
class SimilarityMatrix:
    actor_ids: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __getitem__(self, pair: tuple[str, str]) -> float:
        row, column = pair
        return float(self.values[self.actor_ids.index(row), self.actor_ids.index(column)])

    def rows(self) -> list[list[float]]:
        return [[float(item) for item in row] for row in self.values]

    def min_off_diagonal(self) -> float | None:
        size = len(self.actor_ids)
        if size < 2:
            return None
        mask = ~np.eye(size, dtype=bool)
        return float(self.values[mask].min())

    def edges(self, threshold: float) -> list[tuple[str, str, float]]:
        found: list[tuple[str, str, float]] = []
        for i, source in enumerate(self.actor_ids):
            for j in range(i + 1, len(self.actor_ids)):
                value = float(self.values[i, j])
                if value >= threshold:
                    found.append((source, self.actor_ids[j], value))
        return found

    def same_origin_check(self, origins: Mapping[str, str]) -> dict[str, dict[str, bool]]:
        """For each actor, whether every same-origin partner scores at least the row's cross-origin median."""
        checks: dict[str, dict[str, bool]] = {}
        for i, actor_id in enumerate(self.actor_ids):
            origin = origins.get(actor_id)
            partners = [
                j for j, other in enumerate(self.actor_ids)
                if j != i and origins.get(other) == origin
            ]
            cross = [
                float(self.values[i, j]) for j, other in enumerate(self.actor_ids)
                if j != i and origins.get(other) != origin
            ]
            if not partners or not cross:
                continue
            row_median = float(np.median(cross))
            checks[actor_id] = {
                self.actor_ids[j]: float(self.values[i, j]) >= row_median for j in partners
            }
        return checks

    def to_dict(self, origins: Mapping[str, str] | None = None) -> dict:
        payload: dict = {
            "actor_ids": list(self.actor_ids),
            "values": self.rows(),
            "min_off_diagonal": self.min_off_diagonal(),
        }
        if origins:
            payload["origins"] = {actor_id: origins.get(actor_id) for actor_id in self.actor_ids}
            payload["same_origin_check"] = self.same_origin_check(origins)
        return payload


def fingerprint_campaigns(
    dataset: Sequence[Campaign], catalog: ToolClusterCatalog = DEFAULT_CATALOG
) -> list[KnowledgeEntry]:
    """Fingerprints in chronological order (start date, then campaign id)."""
    ordered = sorted(dataset, key=lambda item: (item.start_date, item.campaign_id))
    return [
        KnowledgeEntry(
            fingerprint=extract_fingerprint(
                campaign.callbacks,
                catalog,
                campaign_id=campaign.campaign_id,
                campaign_date=campaign.start_date,
            ),
            campaign_date=campaign.start_date,
            actor_id=campaign.actor_id,
        )
        for campaign in ordered
    ]


def _attribute_entries(
    entries: Sequence[KnowledgeEntry], config: AttributionConfig
) -> list[AttributionRecord]:
    for entry in entries:
        config.require_actor(entry.actor_id)

    kb = KnowledgeBase(actor_ids=config.actor_ids)
    profiles = {actor_id: RunningProfile(actor_id) for actor_id in config.actor_ids}
    uniform = PosteriorDistribution.uniform(config.actor_ids)
    prior = uniform
    records: list[AttributionRecord] = []

    ordered = sorted(entries, key=lambda item: (item.campaign_date, item.fingerprint.campaign_id))
    # Same-day campaigns are all evaluated before any of them enters the stores.
    for _, same_day in groupby(ordered, key=lambda item: item.campaign_date):
        batch = list(same_day)
        for entry in batch:
            if kb.count_for(entry.actor_id) < config.min_train:
                continue
            arcane = attribute_campaign(
                entry.fingerprint, kb, prior if config.carry_prior else uniform, config
            )
            baseline = baseline_attribute(
                entry.fingerprint,
                list(profiles.values()),
                min_train=config.min_train,
                confidence_threshold=config.confidence_threshold,
            )
            if not isinstance(arcane, AttributionResult) or not isinstance(baseline, AttributionResult):
                continue
            if config.carry_prior:
                prior = arcane.posterior
            records.append(
                AttributionRecord(
                    campaign_id=entry.fingerprint.campaign_id,
                    actor_id=entry.actor_id,
                    start_date=entry.campaign_date,
                    knowledge_size=len(kb),
                    latest_evidence_date=kb.latest_date(),
                    arcane_prediction=arcane.predicted_actor,
                    arcane_confidence=arcane.confidence,
                    arcane_high_confidence=arcane.high_confidence,
                    baseline_prediction=baseline.predicted_actor,
                    baseline_confidence=baseline.confidence,
                    baseline_high_confidence=baseline.high_confidence,
                )
            )
        for entry in batch:
            kb = observe_campaign(kb, entry.fingerprint, entry.actor_id)
            profiles[entry.actor_id] = baseline_observe(profiles[entry.actor_id], entry.fingerprint)

    logger.debug(
        "[loo] min_train=%d evaluated=%d of %d campaigns", config.min_train, len(records), len(ordered)
    )
    return records


def _month_key(value: date) -> str:
    return f"{value.year:04d}-{value.month:02d}"


def _months_between(first: date, last: date) -> list[str]:
    months: list[str] = []
    year, month = first.year, first.month
    while (year, month) <= (last.year, last.month):
        months.append(f"{year:04d}-{month:02d}")
        year, month = (year + 1, 1) if month == 12 else (year, month + 1)
    return months


def _monthly_series(
    entries: Sequence[KnowledgeEntry], records: Sequence[AttributionRecord]
) -> tuple[MonthlyPoint, ...]:
    first = min(entry.campaign_date for entry in entries)
    last = max(entry.campaign_date for entry in entries)
    points: list[MonthlyPoint] = []
    for month in _months_between(first, last):
        bucket = [record for record in records if _month_key(record.start_date) == month]
        points.append(
            MonthlyPoint(
                month=month,
                evaluated=len(bucket),
                arcane_accuracy=_mean([float(record.arcane_correct) for record in bucket]),
                arcane_mean_confidence=_mean([record.arcane_confidence for record in bucket]),
                baseline_accuracy=_mean([float(record.baseline_correct) for record in bucket]),
                baseline_mean_confidence=_mean([record.baseline_confidence for record in bucket]),
            )
        )
    return tuple(points)


def _compare_methods(records: Sequence[AttributionRecord]) -> dict[str, SignificanceResult]:
    return {
        "accuracy": mcnemar_exact(
            [record.arcane_correct for record in records],
            [record.baseline_correct for record in records],
        ),
        "confidence": paired_t_test(
            [record.arcane_confidence for record in records],
            [record.baseline_confidence for record in records],
        ),
    }


def evaluate_entries(
    entries: Sequence[KnowledgeEntry],
    config: AttributionConfig,
    separability: SeparabilityReport | None = None,
) -> EvaluationReport:
    records = _attribute_entries(entries, config)
    return EvaluationReport(
        actor_ids=config.actor_ids,
        min_train=config.min_train,
        methods={
            method: MethodSummary.from_records(method, records, config.actor_ids) for method in METHODS
        },
        monthly_series=_monthly_series(entries, records),
        attribution_log=tuple(records),
        separability=separability,
        comparison=_compare_methods(records),
    )


def run_temporal_loo(
    dataset: Sequence[Campaign],
    config: AttributionConfig,
    catalog: ToolClusterCatalog = DEFAULT_CATALOG,
    *,
    separability_pairs: int = DEFAULT_SEPARABILITY_PAIRS,
    seed: int = DEFAULT_SEED,
    include_separability: bool = True,
) -> EvaluationReport:
    if not dataset:
        raise ValueError("Temporal evaluation needs at least one campaign.")
    entries = fingerprint_campaigns(dataset, catalog)
    separability = None
    if include_separability:
        separability = separability_from_entries(entries, separability_pairs, seed)
    report = evaluate_entries(entries, config, separability)
    logger.info(
        "[loo] %d campaigns, %d evaluated, arcane=%s baseline=%s",
        len(entries),
        report.evaluated,
        report.overall_accuracy(METHOD_ARCANE),
        report.overall_accuracy(METHOD_BASELINE),
    )
    return report


def knowledge_base_from_entries(
    entries: Sequence[KnowledgeEntry], actor_ids: Sequence[str]
) -> KnowledgeBase:
    kb = KnowledgeBase(actor_ids=tuple(actor_ids))
    for entry in sorted(entries, key=lambda item: (item.campaign_date, item.fingerprint.campaign_id)):
        kb = observe_campaign(kb, entry.fingerprint, entry.actor_id)
    return kb


def leakage_violations(records: Iterable[AttributionRecord]) -> list[AttributionRecord]:
    return [
        record
        for record in records
        if record.latest_evidence_date is not None and record.latest_evidence_date >= record.start_date
    ]


def _pair_indices(actor_labels: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    within: list[tuple[int, int]] = []
    cross: list[tuple[int, int]] = []
    for i in range(len(actor_labels)):
        for j in range(i + 1, len(actor_labels)):
            (within if actor_labels[i] == actor_labels[j] else cross).append((i, j))
    return np.asarray(within, dtype=int).reshape(-1, 2), np.asarray(cross, dtype=int).reshape(-1, 2)


def separability_from_entries(
    entries: Sequence[KnowledgeEntry],
    n_pairs: int = DEFAULT_SEPARABILITY_PAIRS,
    seed: int = DEFAULT_SEED,
    alpha: float = DEFAULT_ALPHA,
) -> SeparabilityReport:
    if n_pairs < 2:
        raise ValueError("Separability needs at least two sampled pairs per class.")
    labels = [entry.actor_id for entry in entries]
    actor_counts = {actor_id: labels.count(actor_id) for actor_id in set(labels)}
    if len(actor_counts) < 2:
        raise ValueError("Separability needs campaigns from at least two actors.")
    within_pairs, cross_pairs = _pair_indices(labels)
    if len(within_pairs) == 0:
        raise ValueError("Separability needs at least one actor with two or more campaigns.")

    similarity = pairwise_similarity_matrix([entry.fingerprint.vector for entry in entries])
    rng = make_rng(seed, "separability")
    within_idx = within_pairs[rng.integers(len(within_pairs), size=n_pairs)]
    cross_idx = cross_pairs[rng.integers(len(cross_pairs), size=n_pairs)]
    within = similarity[within_idx[:, 0], within_idx[:, 1]]
    cross = similarity[cross_idx[:, 0], cross_idx[:, 1]]

    mean_within = float(within.mean())
    mean_cross = float(cross.mean())
    std_within = float(within.std(ddof=1))
    try:
        t_statistic, p_value = welch_t_test(within, cross)
    except ValueError:
        # both samples constant
        if mean_within == mean_cross:
            t_statistic, p_value = 0.0, 1.0
        else:
            t_statistic, p_value = math.copysign(math.inf, mean_within - mean_cross), 0.0

    campaigns_per_actor = len(entries) / len(actor_counts)
    report = SeparabilityReport(
        mean_within=mean_within,
        mean_cross=mean_cross,
        gap_delta_S=mean_within - mean_cross,
        std_within=std_within,
        t_statistic=t_statistic,
        p_value=p_value,
        sampled_pairs=n_pairs,
        required_gap=required_gap(std_within, campaigns_per_actor, alpha),
        campaigns_per_actor=campaigns_per_actor,
        alpha=alpha,
        within_samples=tuple(float(item) for item in within),
        cross_samples=tuple(float(item) for item in cross),
    )
    logger.info(
        "[separability] within=%.4f cross=%.4f gap=%.4f required=%.4f p=%.3g",
        report.mean_within,
        report.mean_cross,
        report.gap_delta_S,
        report.required_gap,
        report.p_value,
    )
    return report


def separability_analysis(
    dataset: Sequence[Campaign],
    n_pairs: int = DEFAULT_SEPARABILITY_PAIRS,
    seed: int = DEFAULT_SEED,
    catalog: ToolClusterCatalog = DEFAULT_CATALOG,
) -> SeparabilityReport:
    if len(dataset) < 2:
        raise ValueError("Separability needs at least two campaigns.")
    return separability_from_entries(fingerprint_campaigns(dataset, catalog), n_pairs, seed)


def similarity_matrix_from_entries(
    entries: Sequence[KnowledgeEntry], actor_ids: Sequence[str] | None = None
) -> SimilarityMatrix:
    ids = tuple(sorted(set(actor_ids) if actor_ids is not None else {entry.actor_id for entry in entries}))
    if not ids:
        raise ValueError("Similarity matrix needs at least one actor.")
    members = {actor_id: [i for i, entry in enumerate(entries) if entry.actor_id == actor_id] for actor_id in ids}
    empty = [actor_id for actor_id, indices in members.items() if not indices]
    if empty:
        raise ValueError(f"Actors without campaigns: {', '.join(empty)}")

    similarity = pairwise_similarity_matrix([entry.fingerprint.vector for entry in entries])
    size = len(ids)
    values = np.zeros((size, size), dtype=float)
    for i, row_actor in enumerate(ids):
        rows = members[row_actor]
        if len(rows) < 2:
            values[i, i] = 1.0
        else:
            block = similarity[np.ix_(rows, rows)]
            values[i, i] = float(block[np.triu_indices(len(rows), k=1)].mean())
        for j in range(i + 1, size):
            cell = float(similarity[np.ix_(rows, members[ids[j]])].mean())
            values[i, j] = values[j, i] = cell
    return SimilarityMatrix(actor_ids=ids, values=values)


def similarity_matrix(
    dataset: Sequence[Campaign],
    catalog: ToolClusterCatalog = DEFAULT_CATALOG,
    actor_ids: Sequence[str] | None = None,
) -> SimilarityMatrix:
    return similarity_matrix_from_entries(fingerprint_campaigns(dataset, catalog), actor_ids)


def _ordered_map(func: Callable[[T], R], tasks: Sequence[T], workers: int) -> list[R]:
    if workers <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, tasks))


def _validate_min_train_values(values: Sequence[int]) -> list[int]:
    cleaned = [int(value) for value in values]
    if not cleaned:
        raise ValueError("At least one min_train value is required.")
    if any(value < 1 for value in cleaned):
        raise ValueError("min_train values must be at least 1.")
    return cleaned


def learning_curve(
    dataset: Sequence[Campaign],
    min_train_values: Sequence[int],
    config: AttributionConfig,
    catalog: ToolClusterCatalog = DEFAULT_CATALOG,
) -> list[LearningCurvePoint]:
    values = _validate_min_train_values(min_train_values)
    if not dataset:
        raise ValueError("Learning curve needs at least one campaign.")
    entries = fingerprint_campaigns(dataset, catalog)
    points: list[LearningCurvePoint] = []
    for value in values:
        report = evaluate_entries(entries, replace(config, min_train=value))
        points.append(
            LearningCurvePoint(
                min_train=value,
                evaluated=report.evaluated,
                arcane_accuracy=report.overall_accuracy(METHOD_ARCANE),
                baseline_accuracy=report.overall_accuracy(METHOD_BASELINE),
            )
        )
        logger.info("[learning-curve] min_train=%d evaluated=%d", value, report.evaluated)
    return points


def learning_curve_trials(
    min_train_values: Sequence[int],
    trials: int,
    base_config: DatasetConfig,
    config: AttributionConfig,
    workers: int = 1,
) -> list[LearningCurvePoint]:
    """Learning curve averaged over datasets regenerated with per-trial seeds."""
    values = _validate_min_train_values(min_train_values)
    if trials < 1:
        raise ValueError("trials must be at least 1.")
    if trials == 1:
        return learning_curve(generate_dataset(base_config), values, config, base_config.catalog)

    def run_trial(trial: int) -> list[LearningCurvePoint]:
        seed = derive_seed(base_config.seed, "learning-curve", trial)
        dataset = generate_dataset(replace(base_config, seed=seed))
        return learning_curve(dataset, values, config, base_config.catalog)

    per_trial = _ordered_map(run_trial, list(range(trials)), workers)
    points: list[LearningCurvePoint] = []
    for position, value in enumerate(values):
        rows = [curve[position] for curve in per_trial]
        arcane = [row.arcane_accuracy for row in rows if row.arcane_accuracy is not None]
        baseline = [row.baseline_accuracy for row in rows if row.baseline_accuracy is not None]
        points.append(
            LearningCurvePoint(
                min_train=value,
                evaluated=sum(row.evaluated for row in rows),
                arcane_accuracy=_mean(arcane),
                baseline_accuracy=_mean(baseline),
                trials=trials,
                arcane_std=_spread(arcane) if arcane else None,
                baseline_std=_spread(baseline) if baseline else None,
            )
        )
    return points


def evasion_sweep(
    levels: Sequence[float],
    trials: int,
    base_config: DatasetConfig,
    config: AttributionConfig,
    workers: int = 1,
) -> EvasionSweepReport:
    if trials < 1:
        raise ValueError("trials must be at least 1.")
    if not levels:
        raise ValueError("At least one evasion level is required.")
    if any(not 0.0 <= level <= 1.0 for level in levels):
        raise ValueError("Evasion levels must lie in [0, 1].")

    # Trial seeds are shared across levels so each level sees the same actor draws.
    trial_seeds = [derive_seed(base_config.seed, "evasion-sweep", trial) for trial in range(trials)]
    tasks = [(float(level), seed) for level in levels for seed in trial_seeds]

    def run_task(task: tuple[float, int]) -> float | None:
        level, seed = task
        dataset_config = replace(base_config, seed=seed, evasion_enabled=True, evasion_override=level)
        entries = fingerprint_campaigns(generate_dataset(dataset_config), base_config.catalog)
        return evaluate_entries(entries, config).overall_accuracy(METHOD_ARCANE)

    outcomes = _ordered_map(run_task, tasks, workers)
    points: list[EvasionPoint] = []
    for position, level in enumerate(levels):
        chunk = outcomes[position * trials : (position + 1) * trials]
        accuracies = tuple(value for value in chunk if value is not None)
        points.append(
            EvasionPoint(
                level=float(level),
                trials=trials,
                mean_accuracy=_mean(accuracies),
                std_accuracy=_spread(accuracies) if accuracies else None,
                accuracies=accuracies,
            )
        )
        logger.info("[sweep] level=%.2f mean=%s", float(level), points[-1].mean_accuracy)

    scored = [point for point in points if point.accuracies]
    anova = one_way_anova([point.accuracies for point in scored])
    trend = linear_trend(
        [point.level for point in scored for _ in point.accuracies],
        [value for point in scored for value in point.accuracies],
    )
    return EvasionSweepReport(points=tuple(points), anova=anova, trend=trend)
