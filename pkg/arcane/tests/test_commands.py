import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.directory = Path(self.tmp.name)

    def run_command(self, name, **options):
        stdout = StringIO()
        call_command(name, stdout=stdout, **options)
        return stdout.getvalue()

    def csv_lines(self, path: Path) -> list[str]:
        return path.read_text(encoding="utf-8").splitlines()


class GenerateCommandTests(CommandTestCase):
    def test_default_dataset(self):
        output = self.run_command("generate", out=str(self.directory))
        self.assertIn("8 actors, 96 campaigns", output)
        manifest = json.loads((self.directory / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(manifest["actors"], 8)
        self.assertEqual(manifest["campaigns"], 96)
        self.assertEqual(len(self.csv_lines(self.directory / "campaigns.jsonl")), 96)

    def test_rerun_is_byte_identical(self):
        self.run_command("generate", out=str(self.directory / "a"), seed=5)
        self.run_command("generate", out=str(self.directory / "b"), seed=5)
        for name in ("campaigns.jsonl", "manifest.json"):
            self.assertEqual(
                (self.directory / "a" / name).read_bytes(),
                (self.directory / "b" / name).read_bytes(),
            )

    def test_one_campaign_per_actor(self):
        output = self.run_command("generate", out=str(self.directory), campaigns_per_actor=1)
        self.assertIn("8 actors, 8 campaigns", output)

    def test_invalid_seed(self):
        with self.assertRaises(CommandError):
            self.run_command("generate", out=str(self.directory), seed=-1)


class EvaluateCommandTests(CommandTestCase):
    def test_missing_dataset_is_actionable(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_command("evaluate", out=str(self.directory), dataset=str(self.directory / "nothing"))
        self.assertIn("generate", str(ctx.exception))

    def test_evaluates_a_generated_dataset(self):
        data_dir = self.directory / "data"
        self.run_command("generate", out=str(data_dir), campaigns_per_actor=4)
        output = self.run_command("evaluate", out=str(self.directory / "eval"), dataset=str(data_dir), pairs=200)
        self.assertIn("overall accuracy", output)
        self.assertIn("campaigns evaluated.", output)

        report = json.loads((self.directory / "eval" / "evaluation_report.json").read_text(encoding="utf-8"))
        self.assertIn("separability", report)
        per_actor = self.csv_lines(self.directory / "eval" / "per_actor_accuracy.csv")
        self.assertEqual(len(per_actor), 9)
        self.assertTrue((self.directory / "eval" / "knowledge_base.json").exists())

    def test_manifest_actors_must_be_in_the_roster(self):
        data_dir = self.directory / "data"
        self.run_command("generate", out=str(data_dir), campaigns_per_actor=2)
        manifest_path = data_dir / "manifest.json"
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        manifest["campaigns_per_actor"]["APT-999"] = 2
        manifest_path.write_text(json.dumps(manifest), encoding="utf-8")
        with self.assertRaises(CommandError) as ctx:
            self.run_command("evaluate", out=str(self.directory / "eval"), dataset=str(data_dir), pairs=50)
        self.assertIn("APT-999", str(ctx.exception))
        self.assertIn("--roster", str(ctx.exception))

    def test_manifest_campaign_count_must_match(self):
        data_dir = self.directory / "data"
        self.run_command("generate", out=str(data_dir), campaigns_per_actor=2)
        campaigns_path = data_dir / "campaigns.jsonl"
        lines = self.csv_lines(campaigns_path)
        campaigns_path.write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
        with self.assertRaises(CommandError) as ctx:
            self.run_command("similarity", out=str(self.directory / "sim"), dataset=str(data_dir))
        self.assertIn("expects 16 campaigns but 15 were read", str(ctx.exception))

    def test_campaigns_file_without_manifest_is_accepted(self):
        data_dir = self.directory / "data"
        self.run_command("generate", out=str(data_dir), campaigns_per_actor=2)
        (data_dir / "manifest.json").unlink()
        output = self.run_command("similarity", out=str(self.directory / "sim"), dataset=str(data_dir))
        self.assertIn("lowest inter-actor similarity", output)

    def test_json_only_and_no_snapshot(self):
        out_dir = self.directory / "eval"
        self.run_command(
            "evaluate", out=str(out_dir), campaigns_per_actor=3, pairs=50, format="json", no_snapshot=True
        )
        self.assertTrue((out_dir / "evaluation_report.json").exists())
        self.assertFalse((out_dir / "per_actor_accuracy.csv").exists())
        self.assertFalse((out_dir / "knowledge_base.json").exists())

    def test_bad_config_value(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_command("evaluate", out=str(self.directory), min_train=0)
        self.assertIn("min_train", str(ctx.exception))


class AnalysisCommandTests(CommandTestCase):
    def test_similarity_matrix(self):
        output = self.run_command("similarity", out=str(self.directory), campaigns_per_actor=3)
        self.assertIn("lowest inter-actor similarity", output)
        self.assertEqual(len(self.csv_lines(self.directory / "similarity_matrix.csv")), 9)
        self.assertTrue((self.directory / "similarity_edges.csv").exists())

    def test_learning_curve(self):
        self.run_command("learning_curve", out=str(self.directory), campaigns_per_actor=4)
        self.assertEqual(len(self.csv_lines(self.directory / "learning_curve.csv")), 7)

    def test_evasion_sweep(self):
        self.run_command(
            "sweep_evasion",
            out=str(self.directory),
            evasion_levels="0,1",
            trials=1,
            campaigns_per_actor=3,
            format="csv",
        )
        self.assertEqual(len(self.csv_lines(self.directory / "evasion_sweep.csv")), 3)
        self.assertFalse((self.directory / "evasion_sweep.json").exists())

    def test_full_report(self):
        output = self.run_command(
            "report",
            out=str(self.directory),
            campaigns_per_actor=3,
            evasion_levels="0,1",
            trials=1,
            pairs=50,
        )
        self.assertIn("[4/4] evasion sweep", output)
        for name in (
            "run_config.json",
            "campaigns.jsonl",
            "manifest.json",
            "evaluation_report.json",
            "knowledge_base.json",
            "similarity_matrix.json",
            "learning_curve.csv",
            "evasion_sweep.json",
        ):
            with self.subTest(name=name):
                self.assertTrue((self.directory / name).exists())
        run_config = json.loads((self.directory / "run_config.json").read_text(encoding="utf-8"))
        self.assertEqual(run_config["dataset"]["campaigns_per_actor"], 3)
