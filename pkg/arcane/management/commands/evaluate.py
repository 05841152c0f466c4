from django.core.management.base import CommandError

from arcane.formatters import render_per_actor, render_summary
from arcane.reports import write_evaluation_outputs
from arcane.services.evaluation import fingerprint_campaigns, knowledge_base_from_entries, run_temporal_loo
from arcane.storage import KNOWLEDGE_BASE_FILE, write_knowledge_base

from ._options import ArcaneCommand


class Command(ArcaneCommand):
    help = "Runs the temporal leave-one-out evaluation of both attributors."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--no-snapshot",
            action="store_true",
            help="Skip the knowledge-base snapshot.",
        )

    def handle(self, *args, **options):
        run_config = self.load_run_config(options)
        dataset = self.load_dataset(run_config)
        out_dir = self.output_dir(run_config)
        try:
            report = run_temporal_loo(
                dataset,
                run_config.attribution,
                run_config.dataset.catalog,
                separability_pairs=run_config.evaluation.pairs,
                seed=run_config.seed,
            )
        except ValueError as exc:
            raise CommandError(str(exc)) from exc

        try:
            written = write_evaluation_outputs(
                report, out_dir, run_config.report_formats, origins=run_config.origins
            )
            if not options.get("no_snapshot"):
                entries = fingerprint_campaigns(dataset, run_config.dataset.catalog)
                kb = knowledge_base_from_entries(entries, run_config.attribution.actor_ids)
                written.append(write_knowledge_base(kb, out_dir / KNOWLEDGE_BASE_FILE))
        except OSError as exc:
            raise CommandError(f"Failed to write reports to {out_dir}: {exc}") from exc

        self.stdout.write(render_summary(report))
        self.stdout.write("")
        self.stdout.write(render_per_actor(report))
        self.stdout.write(self.style.SUCCESS(f"{report.evaluated} campaigns evaluated."))
        self.report_written(written)
