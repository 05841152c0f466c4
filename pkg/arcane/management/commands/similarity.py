from django.core.management.base import CommandError

from arcane.formatters import render_similarity_matrix
from arcane.reports import write_similarity_outputs
from arcane.services.evaluation import similarity_matrix

from ._options import ArcaneCommand


class Command(ArcaneCommand):
    help = "Inter-actor mean fingerprint similarity matrix and edge list."

    def handle(self, *args, **options):
        run_config = self.load_run_config(options)
        dataset = self.load_dataset(run_config)
        out_dir = self.output_dir(run_config)
        try:
            matrix = similarity_matrix(dataset, run_config.dataset.catalog)
            written = write_similarity_outputs(
                matrix,
                out_dir,
                run_config.report_formats,
                threshold=run_config.attribution.similarity_threshold,
                origins=run_config.origins,
            )
        except ValueError as exc:
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f"Failed to write reports to {out_dir}: {exc}") from exc

        self.stdout.write(render_similarity_matrix(matrix))
        lowest = matrix.min_off_diagonal()
        if lowest is not None:
            self.stdout.write(f"lowest inter-actor similarity: {lowest:.3f}")
        self.report_written(written)
