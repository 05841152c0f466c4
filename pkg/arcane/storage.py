from __future__ import annotations

import json
import logging
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

from django.core.exceptions import ValidationError

from .services.attribution import KnowledgeBase
from .simulation import Campaign, DatasetConfig

logger = logging.getLogger(__name__)

CAMPAIGNS_FILE = "campaigns.jsonl"
MANIFEST_FILE = "manifest.json"
KNOWLEDGE_BASE_FILE = "knowledge_base.json"
MANIFEST_VERSION = 1


class DatasetLineError(ValueError):
    def __init__(self, message: str, *, file_path: Path, line_number: int):
        super().__init__(message)
        self.file_path = file_path
        self.line_number = line_number

    def __str__(self) -> str:
        return f"{self.file_path.name}:{self.line_number} - {super().__str__()}"


def dumps_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _dumps_line(payload) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    except OSError:
        logger.exception("[storage] failed to write %s", path)
        raise
    return path


def write_json(path: Path, payload) -> Path:
    return write_text(path, dumps_json(payload))


def build_manifest(campaigns: Sequence[Campaign], config: DatasetConfig | None = None) -> dict:
    per_actor = Counter(campaign.actor_id for campaign in campaigns)
    manifest = {
        "version": MANIFEST_VERSION,
        "campaigns_file": CAMPAIGNS_FILE,
        "actors": len(per_actor),
        "campaigns": len(campaigns),
        "callbacks": sum(len(campaign.callbacks) for campaign in campaigns),
        "campaigns_per_actor": {actor_id: per_actor[actor_id] for actor_id in sorted(per_actor)},
        "first_start_date": min(c.start_date for c in campaigns).isoformat() if campaigns else None,
        "last_start_date": max(c.start_date for c in campaigns).isoformat() if campaigns else None,
    }
    if config is not None:
        manifest["config"] = config.to_dict()
    return manifest


def write_dataset(
    campaigns: Sequence[Campaign],
    directory: Path,
    config: DatasetConfig | None = None,
) -> tuple[Path, Path]:
    directory = Path(directory)
    lines = "".join(_dumps_line(campaign.to_dict()) + "\n" for campaign in campaigns)
    campaigns_path = write_text(directory / CAMPAIGNS_FILE, lines)
    manifest_path = write_json(directory / MANIFEST_FILE, build_manifest(campaigns, config))
    logger.info("[storage] wrote %d campaigns to %s", len(campaigns), campaigns_path)
    return campaigns_path, manifest_path


def _resolve_campaigns_path(source: Path) -> Path:
    source = Path(source)
    if source.is_dir():
        return source / CAMPAIGNS_FILE
    return source


def iter_campaigns(path: Path) -> Iterable[Campaign]:
    path = _resolve_campaigns_path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open("r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DatasetLineError(
                    f"invalid JSON: {exc.msg}", file_path=path, line_number=line_number
                ) from exc
            if not isinstance(payload, dict):
                raise DatasetLineError("expected a JSON object", file_path=path, line_number=line_number)
            try:
                yield Campaign.from_dict(payload)
            except ValidationError as exc:
                detail = "; ".join(
                    f"{field}: {' '.join(messages)}" for field, messages in sorted(exc.message_dict.items())
                )
                raise DatasetLineError(detail, file_path=path, line_number=line_number) from exc
            except (TypeError, ValueError) as exc:
                raise DatasetLineError(str(exc), file_path=path, line_number=line_number) from exc


def read_dataset(source: Path) -> list[Campaign]:
    campaigns = list(iter_campaigns(source))
    seen: set[str] = set()
    for campaign in campaigns:
        if campaign.campaign_id in seen:
            raise ValueError(f"Duplicate campaign id {campaign.campaign_id!r} in {source}.")
        seen.add(campaign.campaign_id)
    return sorted(campaigns, key=lambda item: (item.start_date, item.campaign_id))


def read_manifest(directory: Path) -> dict:
    path = Path(directory) / MANIFEST_FILE
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetLineError(f"invalid JSON: {exc.msg}", file_path=path, line_number=exc.lineno) from exc
    if not isinstance(payload, dict):
        raise DatasetLineError("manifest must be a JSON object", file_path=path, line_number=1)
    return payload


def write_knowledge_base(kb: KnowledgeBase, path: Path) -> Path:
    return write_json(Path(path), kb.to_dict())
