from __future__ import annotations

from typing import Sequence

from .services.evaluation import (
    METHOD_ARCANE,
    METHOD_BASELINE,
    EvaluationReport,
    EvasionSweepReport,
    LearningCurvePoint,
    SeparabilityReport,
    SimilarityMatrix,
)

ABSENT = "-"


def format_percent(value: float | None) -> str:
    if value is None:
        return ABSENT
    return f"{value * 100:.1f}%"


def format_number(value: float | None, digits: int = 3) -> str:
    if value is None:
        return ABSENT
    return f"{value:.{digits}f}"


def format_p_value(value: float | None) -> str:
    if value is None:
        return ABSENT
    if value == 0.0:
        return "<1e-300"
    if value < 1e-3:
        return f"{value:.2e}"
    return f"{value:.3f}"


def format_difference(first: float | None, second: float | None, *, percent: bool = False) -> str:
    if first is None or second is None:
        return ABSENT
    delta = first - second
    if percent:
        return f"{delta * 100:+.1f} pp"
    return f"{delta:+.3f}"


def render_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(header) for header in headers]
    for row in rows:
        for index, cell in enumerate(row):
            widths[index] = max(widths[index], len(cell))
    lines = ["  ".join(header.ljust(widths[index]) for index, header in enumerate(headers))]
    lines.append("  ".join("-" * width for width in widths))
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[index]) for index, cell in enumerate(row)))
    return "\n".join(lines)


def render_separability(report: SeparabilityReport) -> str:
    rows = [
        ["mean within-actor similarity", format_number(report.mean_within, 4)],
        ["mean cross-actor similarity", format_number(report.mean_cross, 4)],
        ["separability gap", format_number(report.gap_delta_S, 4)],
        ["required gap", format_number(report.required_gap, 4)],
        ["within-actor std", format_number(report.std_within, 4)],
        ["Welch t", format_number(report.t_statistic, 2)],
        ["p-value", format_p_value(report.p_value)],
        ["sampled pairs per class", str(report.sampled_pairs)],
    ]
    return render_table(["separability", "value"], rows)


def render_summary(report: EvaluationReport) -> str:
    arcane = report.methods[METHOD_ARCANE]
    baseline = report.methods[METHOD_BASELINE]
    accuracy_test = report.comparison.get("accuracy")
    confidence_test = report.comparison.get("confidence")
    rows = [
        [
            "overall accuracy",
            format_percent(arcane.overall_accuracy),
            format_percent(baseline.overall_accuracy),
            format_difference(arcane.overall_accuracy, baseline.overall_accuracy, percent=True),
            format_p_value(accuracy_test.p_value if accuracy_test else None),
        ],
        [
            "mean confidence",
            format_number(arcane.mean_confidence),
            format_number(baseline.mean_confidence),
            format_difference(arcane.mean_confidence, baseline.mean_confidence),
            format_p_value(confidence_test.p_value if confidence_test else None),
        ],
        [
            "high-confidence accuracy",
            _high_confidence_cell(arcane.high_confidence_count, arcane.high_confidence_accuracy),
            _high_confidence_cell(baseline.high_confidence_count, baseline.high_confidence_accuracy),
            ABSENT,
            ABSENT,
        ],
        ["evaluated campaigns", str(arcane.evaluated), str(baseline.evaluated), ABSENT, ABSENT],
    ]
    blocks = [render_table(["metric", "arcane", "baseline", "difference", "p"], rows)]
    if report.separability is not None:
        blocks.append(render_separability(report.separability))
    return "\n\n".join(blocks)


def _high_confidence_cell(count: int, accuracy: float | None) -> str:
    if count == 0:
        return ABSENT
    return f"{format_percent(accuracy)} (n={count})"


def render_per_actor(report: EvaluationReport) -> str:
    rows = [
        [
            actor_id,
            str(report.methods[METHOD_ARCANE].per_actor_evaluated[actor_id]),
            format_percent(report.methods[METHOD_ARCANE].per_actor_accuracy[actor_id]),
            format_percent(report.methods[METHOD_BASELINE].per_actor_accuracy[actor_id]),
        ]
        for actor_id in report.actor_ids
    ]
    return render_table(["actor", "evaluated", "arcane", "baseline"], rows)


def render_learning_curve(points: Sequence[LearningCurvePoint]) -> str:
    rows = [
        [
            str(point.min_train),
            str(point.evaluated),
            format_percent(point.arcane_accuracy),
            format_percent(point.baseline_accuracy),
        ]
        for point in points
    ]
    return render_table(["min_train", "evaluated", "arcane", "baseline"], rows)


def render_evasion_sweep(report: EvasionSweepReport) -> str:
    rows = [
        [
            format_number(point.level, 2),
            str(point.trials),
            format_percent(point.mean_accuracy),
            format_percent(point.std_accuracy),
        ]
        for point in report.points
    ]
    table = render_table(["level", "trials", "mean accuracy", "std"], rows)
    tests = (
        f"ANOVA F={format_number(report.anova.statistic, 3)} p={format_p_value(report.anova.p_value)}; "
        f"trend slope={format_number(report.trend.statistic, 4)} p={format_p_value(report.trend.p_value)}"
    )
    return f"{table}\n{tests}"


def render_similarity_matrix(matrix: SimilarityMatrix) -> str:
    rows = [
        [actor_id, *(format_number(value, 3) for value in row)]
        for actor_id, row in zip(matrix.actor_ids, matrix.rows())
    ]
    return render_table(["actor", *matrix.actor_ids], rows)
