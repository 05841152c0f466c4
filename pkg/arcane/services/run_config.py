from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import yaml
from django.conf import settings

from arcane.forms import RunConfigForm
from arcane.services.attribution import AttributionConfig
from arcane.simulation import ActorProfile, DatasetConfig, default_actor_roster, load_roster

TOP_LEVEL_KEYS = {"seed", "output_dir", "formats"}
SECTION_KEYS = {
    "dataset": {
        "campaigns_per_actor",
        "window_start",
        "window_end",
        "evasion_enabled",
        "evasion_override",
        "roster",
        "path",
    },
    "attribution": {
        "decay_rate",
        "similarity_threshold",
        "confidence_threshold",
        "min_train",
        "likelihood_slope",
        "likelihood_floor",
        "carry_prior",
    },
    "evaluation": {"pairs", "evasion_levels", "trials", "min_train_values", "workers"},
}
PATH_KEYS = {"output_dir", "roster", "dataset_path"}


class RunConfigError(ValueError):
    def __init__(self, errors: Mapping[str, list[str] | str]):
        self.errors = {
            field: [messages] if isinstance(messages, str) else list(messages)
            for field, messages in errors.items()
        }
        super().__init__(str(self))

    def __str__(self) -> str:
        return "; ".join(
            f"{field}: {' '.join(messages)}" for field, messages in sorted(self.errors.items())
        )


@dataclass(frozen=True)
class EvaluationOptions:
    pairs: int
    evasion_levels: tuple[float, ...]
    trials: int
    min_train_values: tuple[int, ...]
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetConfig
    attribution: AttributionConfig
    evaluation: EvaluationOptions
    output_dir: Path
    report_formats: tuple[str, ...]
    dataset_path: Path | None = None

    @property
    def seed(self) -> int:
        return self.dataset.seed

    @property
    def origins(self) -> dict[str, str]:
        return {actor.actor_id: actor.origin_country for actor in self.dataset.actors}

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "formats": list(self.report_formats),
            "dataset_path": str(self.dataset_path) if self.dataset_path else None,
            "dataset": self.dataset.to_dict(),
            "attribution": {
                "decay_rate": self.attribution.decay_rate,
                "similarity_threshold": self.attribution.similarity_threshold,
                "confidence_threshold": self.attribution.confidence_threshold,
                "min_train": self.attribution.min_train,
                "likelihood_slope": self.attribution.likelihood_slope,
                "likelihood_floor": self.attribution.likelihood_floor,
                "carry_prior": self.attribution.carry_prior,
            },
            "evaluation": {
                "pairs": self.evaluation.pairs,
                "evasion_levels": list(self.evaluation.evasion_levels),
                "trials": self.evaluation.trials,
                "min_train_values": list(self.evaluation.min_train_values),
                "workers": self.evaluation.workers,
            },
        }


def settings_defaults() -> dict[str, Any]:
    dataset = getattr(settings, "ARCANE_DATASET", {})
    attribution = getattr(settings, "ARCANE_ATTRIBUTION", {})
    evaluation = getattr(settings, "ARCANE_EVALUATION", {})
    formats = getattr(settings, "ARCANE_REPORT_FORMATS", ["json", "csv"])
    return {
        "seed": getattr(settings, "ARCANE_SEED", 20240101),
        "output_dir": str(getattr(settings, "ARCANE_OUTPUT_DIR", "out")),
        "formats": ",".join(formats) if isinstance(formats, (list, tuple)) else str(formats),
        "roster": str(getattr(settings, "ARCANE_ROSTER_PATH", "") or ""),
        "dataset_path": "",
        **dataset,
        **attribution,
        **evaluation,
    }


def _resolve_path(value: Any, base_dir: Path) -> Any:
    if value in (None, ""):
        return value
    path = Path(str(value)).expanduser()
    return str(path if path.is_absolute() else base_dir / path)


def flatten_config_payload(payload: Mapping[str, Any], base_dir: Path | None = None) -> dict[str, Any]:
    errors: dict[str, str] = {}
    flat: dict[str, Any] = {}
    for key, value in payload.items():
        if key in TOP_LEVEL_KEYS:
            flat[key] = value
        elif key in SECTION_KEYS:
            if not isinstance(value, Mapping):
                errors[key] = "Section must be a mapping."
                continue
            for inner_key, inner_value in value.items():
                if inner_key not in SECTION_KEYS[key]:
                    errors[f"{key}.{inner_key}"] = "Unknown setting."
                    continue
                flat["dataset_path" if (key, inner_key) == ("dataset", "path") else inner_key] = inner_value
        else:
            errors[str(key)] = "Unknown setting."
    if errors:
        raise RunConfigError(errors)
    if base_dir is not None:
        for key in PATH_KEYS & flat.keys():
            flat[key] = _resolve_path(flat[key], base_dir)
    if isinstance(flat.get("formats"), (list, tuple)):
        flat["formats"] = ",".join(str(item) for item in flat["formats"])
    return flat


def load_config_file(path: Path | str) -> dict[str, Any]:
    config_path = Path(path)
    try:
        payload = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise RunConfigError({"config": f"Config file not found: {config_path}"}) from exc
    except yaml.YAMLError as exc:
        raise RunConfigError({"config": f"{config_path}: invalid YAML: {exc}"}) from exc
    if payload is None:
        return {}
    if not isinstance(payload, Mapping):
        raise RunConfigError({"config": f"{config_path}: top level must be a mapping."})
    return flatten_config_payload(payload, base_dir=config_path.resolve().parent)


def _load_actors(roster: str) -> list[ActorProfile]:
    if not roster:
        return default_actor_roster()
    try:
        return load_roster(roster)
    except ValueError as exc:
        raise RunConfigError({"roster": str(exc)}) from exc


def build_run_config(
    config_path: Path | str | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Settings defaults, then the config file, then explicit overrides."""
    data = settings_defaults()
    if config_path:
        data.update(load_config_file(config_path))
    data.update({key: value for key, value in (overrides or {}).items() if value is not None})

    form = RunConfigForm(data=data)
    if not form.is_valid():
        raise RunConfigError({field: [str(message) for message in messages] for field, messages in form.errors.items()})
    cleaned = form.cleaned_data

    actors = _load_actors(cleaned["roster"])
    try:
        dataset = DatasetConfig(
            actors=tuple(actors),
            campaigns_per_actor=cleaned["campaigns_per_actor"],
            window_start=cleaned["window_start"],
            window_end=cleaned["window_end"],
            seed=cleaned["seed"],
            evasion_enabled=cleaned["evasion_enabled"],
            evasion_override=cleaned["evasion_override"],
        )
        attribution = AttributionConfig(
            actor_ids=dataset.actor_ids,
            decay_rate=cleaned["decay_rate"],
            similarity_threshold=cleaned["similarity_threshold"],
            confidence_threshold=cleaned["confidence_threshold"],
            min_train=cleaned["min_train"],
            likelihood_slope=cleaned["likelihood_slope"],
            likelihood_floor=cleaned["likelihood_floor"],
            carry_prior=cleaned["carry_prior"],
        )
    except ValueError as exc:
        raise RunConfigError({"config": str(exc)}) from exc

    if not cleaned["evasion_levels"]:
        raise RunConfigError({"evasion_levels": "At least one evasion level is required."})
    if not cleaned["min_train_values"]:
        raise RunConfigError({"min_train_values": "At least one min_train value is required."})

    return RunConfig(
        dataset=dataset,
        attribution=attribution,
        evaluation=EvaluationOptions(
            pairs=cleaned["pairs"],
            evasion_levels=tuple(cleaned["evasion_levels"]),
            trials=cleaned["trials"],
            min_train_values=tuple(cleaned["min_train_values"]),
            workers=cleaned["workers"],
        ),
        output_dir=Path(cleaned["output_dir"]),
        report_formats=cleaned["formats"],
        dataset_path=Path(cleaned["dataset_path"]) if cleaned["dataset_path"] else None,
    )
