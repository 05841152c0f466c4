from __future__ import annotations

import csv
import io
import logging
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .services.evaluation import (
    METHOD_ARCANE,
    METHOD_BASELINE,
    EvaluationReport,
    EvasionSweepReport,
    LearningCurvePoint,
    SimilarityMatrix,
)
from .storage import write_json, write_text

logger = logging.getLogger(__name__)

FORMAT_JSON = "json"
FORMAT_CSV = "csv"
REPORT_FORMATS = (FORMAT_JSON, FORMAT_CSV)
CONFIDENCE_BINS = 20

EVALUATION_JSON = "evaluation_report.json"
PER_ACTOR_CSV = "per_actor_accuracy.csv"
MONTHLY_CSV = "monthly_series.csv"
ATTRIBUTION_LOG_CSV = "attribution_log.csv"
CONFIDENCE_HISTOGRAM_CSV = "confidence_histogram.csv"
SIMILARITY_HISTOGRAM_CSV = "similarity_histogram.csv"
LEARNING_CURVE_JSON = "learning_curve.json"
LEARNING_CURVE_CSV = "learning_curve.csv"
EVASION_SWEEP_JSON = "evasion_sweep.json"
EVASION_SWEEP_CSV = "evasion_sweep.csv"
SIMILARITY_JSON = "similarity_matrix.json"
SIMILARITY_MATRIX_CSV = "similarity_matrix.csv"
SIMILARITY_EDGES_CSV = "similarity_edges.csv"

PER_ACTOR_HEADERS = ["actor_id", "origin_country", "evaluated", "arcane_accuracy", "baseline_accuracy"]
MONTHLY_HEADERS = [
    "month",
    "evaluated",
    "arcane_accuracy",
    "arcane_mean_confidence",
    "baseline_accuracy",
    "baseline_mean_confidence",
]
ATTRIBUTION_LOG_HEADERS = [
    "campaign_id",
    "actor_id",
    "start_date",
    "knowledge_size",
    "latest_evidence_date",
    "arcane_prediction",
    "arcane_confidence",
    "arcane_correct",
    "baseline_prediction",
    "baseline_confidence",
    "baseline_correct",
]
CONFIDENCE_HISTOGRAM_HEADERS = ["bin_low", "bin_high", "arcane_count", "baseline_count"]
SIMILARITY_HISTOGRAM_HEADERS = ["bin_low", "bin_high", "within_count", "cross_count"]
LEARNING_CURVE_HEADERS = [
    "min_train",
    "evaluated",
    "arcane_accuracy",
    "baseline_accuracy",
    "trials",
    "arcane_std",
    "baseline_std",
]
EVASION_SWEEP_HEADERS = ["level", "trials", "mean_accuracy", "std_accuracy"]
SIMILARITY_EDGE_HEADERS = ["source", "target", "similarity", "source_origin", "target_origin"]


def parse_formats(raw: str | Iterable[str]) -> tuple[str, ...]:
    if isinstance(raw, str):
        tokens = [token.strip().lower() for token in raw.split(",")]
    else:
        tokens = [str(token).strip().lower() for token in raw]
    selected: list[str] = []
    for token in tokens:
        if not token:
            continue
        expanded = REPORT_FORMATS if token == "both" else (token,)
        for item in expanded:
            if item not in REPORT_FORMATS:
                raise ValueError(f"Unknown report format {item!r}; use json, csv or both.")
            if item not in selected:
                selected.append(item)
    if not selected:
        raise ValueError("At least one report format is required.")
    return tuple(item for item in REPORT_FORMATS if item in selected)


def csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def write_csv(path: Path, headers: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(headers)
    for row in rows:
        writer.writerow([csv_cell(value) for value in row])
    return write_text(path, buffer.getvalue())


def _confidence_histogram(report: EvaluationReport, bins: int = CONFIDENCE_BINS) -> list[tuple]:
    edges = np.linspace(0.0, 1.0, bins + 1)
    arcane, _ = np.histogram(np.asarray(report.methods[METHOD_ARCANE].confidences, dtype=float), bins=edges)
    baseline, _ = np.histogram(np.asarray(report.methods[METHOD_BASELINE].confidences, dtype=float), bins=edges)
    return [
        (float(edges[index]), float(edges[index + 1]), int(arcane[index]), int(baseline[index]))
        for index in range(bins)
    ]


def write_evaluation_outputs(
    report: EvaluationReport,
    out_dir: Path,
    formats: Sequence[str] = REPORT_FORMATS,
    origins: Mapping[str, str] | None = None,
) -> list[Path]:
    out_dir = Path(out_dir)
    origins = origins or {}
    written: list[Path] = []
    if FORMAT_JSON in formats:
        written.append(write_json(out_dir / EVALUATION_JSON, report.to_dict()))
    if FORMAT_CSV in formats:
        arcane = report.methods[METHOD_ARCANE]
        baseline = report.methods[METHOD_BASELINE]
        written.append(
            write_csv(
                out_dir / PER_ACTOR_CSV,
                PER_ACTOR_HEADERS,
                (
                    [
                        actor_id,
                        origins.get(actor_id),
                        arcane.per_actor_evaluated[actor_id],
                        arcane.per_actor_accuracy[actor_id],
                        baseline.per_actor_accuracy[actor_id],
                    ]
                    for actor_id in report.actor_ids
                ),
            )
        )
        written.append(
            write_csv(
                out_dir / MONTHLY_CSV,
                MONTHLY_HEADERS,
                ([point.to_dict()[header] for header in MONTHLY_HEADERS] for point in report.monthly_series),
            )
        )
        written.append(
            write_csv(
                out_dir / ATTRIBUTION_LOG_CSV,
                ATTRIBUTION_LOG_HEADERS,
                (
                    [record.to_dict()[header] for header in ATTRIBUTION_LOG_HEADERS]
                    for record in report.attribution_log
                ),
            )
        )
        written.append(
            write_csv(out_dir / CONFIDENCE_HISTOGRAM_CSV, CONFIDENCE_HISTOGRAM_HEADERS, _confidence_histogram(report))
        )
        if report.separability is not None:
            written.append(
                write_csv(
                    out_dir / SIMILARITY_HISTOGRAM_CSV,
                    SIMILARITY_HISTOGRAM_HEADERS,
                    report.separability.histogram(),
                )
            )
    logger.info("[report] evaluation outputs: %s", ", ".join(path.name for path in written))
    return written


def write_learning_curve_outputs(
    points: Sequence[LearningCurvePoint],
    out_dir: Path,
    formats: Sequence[str] = REPORT_FORMATS,
) -> list[Path]:
    out_dir = Path(out_dir)
    written: list[Path] = []
    if FORMAT_JSON in formats:
        written.append(write_json(out_dir / LEARNING_CURVE_JSON, {"points": [point.to_dict() for point in points]}))
    if FORMAT_CSV in formats:
        written.append(
            write_csv(
                out_dir / LEARNING_CURVE_CSV,
                LEARNING_CURVE_HEADERS,
                ([point.to_dict()[header] for header in LEARNING_CURVE_HEADERS] for point in points),
            )
        )
    return written


def write_evasion_sweep_outputs(
    report: EvasionSweepReport,
    out_dir: Path,
    formats: Sequence[str] = REPORT_FORMATS,
) -> list[Path]:
    out_dir = Path(out_dir)
    written: list[Path] = []
    if FORMAT_JSON in formats:
        written.append(write_json(out_dir / EVASION_SWEEP_JSON, report.to_dict()))
    if FORMAT_CSV in formats:
        written.append(
            write_csv(
                out_dir / EVASION_SWEEP_CSV,
                EVASION_SWEEP_HEADERS,
                ([point.to_dict()[header] for header in EVASION_SWEEP_HEADERS] for point in report.points),
            )
        )
    return written


def write_similarity_outputs(
    matrix: SimilarityMatrix,
    out_dir: Path,
    formats: Sequence[str] = REPORT_FORMATS,
    threshold: float = 0.45,
    origins: Mapping[str, str] | None = None,
) -> list[Path]:
    out_dir = Path(out_dir)
    origins = origins or {}
    edges = matrix.edges(threshold)
    written: list[Path] = []
    if FORMAT_JSON in formats:
        payload = matrix.to_dict(origins)
        payload["edge_threshold"] = threshold
        payload["edges"] = [
            {"source": source, "target": target, "similarity": value} for source, target, value in edges
        ]
        written.append(write_json(out_dir / SIMILARITY_JSON, payload))
    if FORMAT_CSV in formats:
        written.append(
            write_csv(
                out_dir / SIMILARITY_MATRIX_CSV,
                ["actor_id", *matrix.actor_ids],
                ([actor_id, *row] for actor_id, row in zip(matrix.actor_ids, matrix.rows())),
            )
        )
        written.append(
            write_csv(
                out_dir / SIMILARITY_EDGES_CSV,
                SIMILARITY_EDGE_HEADERS,
                (
                    [source, target, value, origins.get(source), origins.get(target)]
                    for source, target, value in edges
                ),
            )
        )
    return written
