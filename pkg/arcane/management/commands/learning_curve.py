from django.core.management.base import CommandError

from arcane.formatters import render_learning_curve
from arcane.reports import write_learning_curve_outputs
from arcane.services.evaluation import learning_curve, learning_curve_trials

from ._options import ArcaneCommand


class Command(ArcaneCommand):
    help = "Learning curve: accuracy of both attributors per min_train value."

    def handle(self, *args, **options):
        run_config = self.load_run_config(options)
        out_dir = self.output_dir(run_config)
        values = run_config.evaluation.min_train_values
        # A single dataset unless --trials asks for regenerated ones.
        trials = options.get("trials") or 1
        try:
            if trials > 1:
                points = learning_curve_trials(
                    values,
                    trials,
                    run_config.dataset,
                    run_config.attribution,
                    workers=run_config.evaluation.workers,
                )
            else:
                dataset = self.load_dataset(run_config)
                points = learning_curve(dataset, values, run_config.attribution, run_config.dataset.catalog)
            written = write_learning_curve_outputs(points, out_dir, run_config.report_formats)
        except ValueError as exc:
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f"Failed to write reports to {out_dir}: {exc}") from exc

        self.stdout.write(render_learning_curve(points))
        self.report_written(written)
