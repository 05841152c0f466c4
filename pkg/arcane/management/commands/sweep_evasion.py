from django.core.management.base import CommandError

from arcane.formatters import render_evasion_sweep
from arcane.reports import write_evasion_sweep_outputs
from arcane.services.evaluation import evasion_sweep

from ._options import ArcaneCommand


class Command(ArcaneCommand):
    help = "Evasion sweep: mean and std of attribution accuracy per evasion level."

    def handle(self, *args, **options):
        run_config = self.load_run_config(options)
        out_dir = self.output_dir(run_config)
        evaluation = run_config.evaluation
        try:
            report = evasion_sweep(
                evaluation.evasion_levels,
                evaluation.trials,
                run_config.dataset,
                run_config.attribution,
                workers=evaluation.workers,
            )
            written = write_evasion_sweep_outputs(report, out_dir, run_config.report_formats)
        except ValueError as exc:
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f"Failed to write reports to {out_dir}: {exc}") from exc

        self.stdout.write(render_evasion_sweep(report))
        self.report_written(written)
