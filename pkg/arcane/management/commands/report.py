from django.core.management.base import CommandError

from arcane.formatters import render_evasion_sweep, render_learning_curve, render_summary
from arcane.reports import (
    write_evaluation_outputs,
    write_evasion_sweep_outputs,
    write_learning_curve_outputs,
    write_similarity_outputs,
)
from arcane.services.evaluation import (
    evasion_sweep,
    fingerprint_campaigns,
    knowledge_base_from_entries,
    learning_curve,
    run_temporal_loo,
    similarity_matrix_from_entries,
)
from arcane.storage import KNOWLEDGE_BASE_FILE, write_dataset, write_json, write_knowledge_base

from ._options import ArcaneCommand

RUN_CONFIG_FILE = "run_config.json"


class Command(ArcaneCommand):
    help = "Full reproduction: dataset, evaluation, similarity, learning curve and evasion sweep."

    def handle(self, *args, **options):
        run_config = self.load_run_config(options)
        out_dir = self.output_dir(run_config)
        formats = run_config.report_formats
        catalog = run_config.dataset.catalog
        evaluation = run_config.evaluation
        dataset = self.load_dataset(run_config)

        try:
            written = [write_json(out_dir / RUN_CONFIG_FILE, run_config.to_dict())]
            written.extend(write_dataset(dataset, out_dir, run_config.dataset))

            self.stdout.write(self.style.SUCCESS("[1/4] temporal evaluation"))
            report = run_temporal_loo(
                dataset,
                run_config.attribution,
                catalog,
                separability_pairs=evaluation.pairs,
                seed=run_config.seed,
            )
            written.extend(write_evaluation_outputs(report, out_dir, formats, origins=run_config.origins))
            entries = fingerprint_campaigns(dataset, catalog)
            kb = knowledge_base_from_entries(entries, run_config.attribution.actor_ids)
            written.append(write_knowledge_base(kb, out_dir / KNOWLEDGE_BASE_FILE))
            self.stdout.write(render_summary(report))

            self.stdout.write(self.style.SUCCESS("[2/4] similarity matrix"))
            matrix = similarity_matrix_from_entries(entries, run_config.attribution.actor_ids)
            written.extend(
                write_similarity_outputs(
                    matrix,
                    out_dir,
                    formats,
                    threshold=run_config.attribution.similarity_threshold,
                    origins=run_config.origins,
                )
            )

            self.stdout.write(self.style.SUCCESS("[3/4] learning curve"))
            points = learning_curve(dataset, evaluation.min_train_values, run_config.attribution, catalog)
            written.extend(write_learning_curve_outputs(points, out_dir, formats))
            self.stdout.write(render_learning_curve(points))

            self.stdout.write(self.style.SUCCESS("[4/4] evasion sweep"))
            sweep = evasion_sweep(
                evaluation.evasion_levels,
                evaluation.trials,
                run_config.dataset,
                run_config.attribution,
                workers=evaluation.workers,
            )
            written.extend(write_evasion_sweep_outputs(sweep, out_dir, formats))
            self.stdout.write(render_evasion_sweep(sweep))
        except ValueError as exc:
            raise CommandError(str(exc)) from exc
        except OSError as exc:
            raise CommandError(f"Failed to write reports to {out_dir}: {exc}") from exc

        self.report_written(written)
