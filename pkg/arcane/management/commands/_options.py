from __future__ import annotations

import logging
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from arcane.services.run_config import RunConfig, RunConfigError, build_run_config
from arcane.simulation import Campaign, generate_dataset
from arcane.storage import MANIFEST_FILE, DatasetLineError, read_dataset, read_manifest

logger = logging.getLogger(__name__)

OPTION_TO_SETTING = {
    "seed": "seed",
    "out": "output_dir",
    "format": "formats",
    "roster": "roster",
    "dataset": "dataset_path",
    "campaigns_per_actor": "campaigns_per_actor",
    "min_train": "min_train",
    "evasion_levels": "evasion_levels",
    "trials": "trials",
    "pairs": "pairs",
    "workers": "workers",
}


class ArcaneCommand(BaseCommand):
    def add_arguments(self, parser):
        parser.add_argument("--config", help="Run config file (YAML or JSON).")
        parser.add_argument("--seed", type=int, help="Root seed for every random stream.")
        parser.add_argument("--out", help="Output directory.")
        parser.add_argument(
            "--format",
            choices=["json", "csv", "both"],
            help="Report format (default from settings: json and csv).",
        )
        parser.add_argument("--roster", help="Actor roster file replacing the bundled one.")
        parser.add_argument("--dataset", help="campaigns.jsonl file or directory written by generate.")
        parser.add_argument("--campaigns-per-actor", type=int, dest="campaigns_per_actor")
        parser.add_argument("--min-train", type=int, dest="min_train")
        parser.add_argument("--evasion-levels", dest="evasion_levels", help="Comma separated, e.g. 0,0.5,1")
        parser.add_argument("--trials", type=int)
        parser.add_argument("--pairs", type=int, help="Sampled pairs per class for separability.")
        parser.add_argument("--workers", type=int, help="Parallel workers for sweeps.")

    def load_run_config(self, options) -> RunConfig:
        overrides = {setting: options.get(option) for option, setting in OPTION_TO_SETTING.items()}
        try:
            return build_run_config(options.get("config"), overrides)
        except RunConfigError as exc:
            raise CommandError(f"Invalid configuration: {exc}") from exc

    def load_dataset(self, run_config: RunConfig) -> list[Campaign]:
        if run_config.dataset_path is None:
            return generate_dataset(run_config.dataset)
        try:
            campaigns = read_dataset(run_config.dataset_path)
            manifest_path = run_config.dataset_path / MANIFEST_FILE
            manifest = read_manifest(run_config.dataset_path) if manifest_path.is_file() else None
        except FileNotFoundError as exc:
            raise CommandError(
                f"Dataset not found: {run_config.dataset_path}. Run 'manage.py generate --out <dir>' first "
                "or omit --dataset to generate it inline."
            ) from exc
        except (DatasetLineError, ValidationError, ValueError) as exc:
            raise CommandError(str(exc)) from exc
        if manifest is not None:
            self.check_manifest(manifest, campaigns, run_config)
        return campaigns

    def check_manifest(self, manifest: dict, campaigns: list[Campaign], run_config: RunConfig) -> None:
        known = set(run_config.attribution.actor_ids)
        unknown = sorted(set(manifest.get("campaigns_per_actor", {})) - known)
        if unknown:
            raise CommandError(
                f"Dataset manifest lists actors missing from the roster: {', '.join(unknown)}. "
                "Pass the roster the dataset was generated with (--roster)."
            )
        if manifest.get("campaigns") != len(campaigns):
            raise CommandError(
                f"Dataset manifest expects {manifest.get('campaigns')} campaigns but "
                f"{len(campaigns)} were read. Regenerate the dataset."
            )

    def output_dir(self, run_config: RunConfig) -> Path:
        path = run_config.output_dir
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CommandError(f"Cannot create output directory {path}: {exc}") from exc
        return path

    def report_written(self, paths) -> None:
        for path in paths:
            self.stdout.write(f"  {path}")
