from django.core.management.base import CommandError

from arcane.simulation import generate_dataset
from arcane.storage import write_dataset

from ._options import ArcaneCommand


class Command(ArcaneCommand):
    help = "Generates the synthetic campaign dataset (campaigns.jsonl + manifest.json)."

    def handle(self, *args, **options):
        run_config = self.load_run_config(options)
        out_dir = self.output_dir(run_config)
        try:
            campaigns = generate_dataset(run_config.dataset)
            campaigns_path, manifest_path = write_dataset(campaigns, out_dir, run_config.dataset)
        except OSError as exc:
            raise CommandError(f"Failed to write dataset to {out_dir}: {exc}") from exc

        actors = len({campaign.actor_id for campaign in campaigns})
        callbacks = sum(len(campaign.callbacks) for campaign in campaigns)
        self.stdout.write(
            self.style.SUCCESS(f"{actors} actors, {len(campaigns)} campaigns, {callbacks} callbacks")
        )
        self.report_written([campaigns_path, manifest_path])
