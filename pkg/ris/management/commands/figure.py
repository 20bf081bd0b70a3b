from pathlib import Path

from django.core.management.base import BaseCommand

from ris import experiments
from ris.errors import ConfigError
from ris.management.commands._shared import add_run_arguments, config_error, run, threads_from


class Command(BaseCommand):
    help = "Reproduce one figure's sweeps; writes <name>.csv and <name>-report.json."

    def add_arguments(self, parser):
        parser.add_argument("name", choices=experiments.FIGURES)
        parser.add_argument("--out-dir", default=".", help="Directory for the CSV and report.")
        parser.add_argument("--trials", type=int, help="Monte Carlo trials per scenario (0 disables Monte Carlo).")
        add_run_arguments(parser)

    def handle(self, *args, **options):
        name = options["name"]
        threads = threads_from(options)
        try:
            configs = experiments.figure_preset(name, trials=options["trials"], seed=options["seed"])
        except ConfigError as exc:
            raise config_error(exc) from exc

        rows = []
        for config in configs:
            self.stdout.write(f"{config.scenario_id} ...")
            rows.extend(run(config, threads=threads))

        out_dir = Path(options["out_dir"])
        csv_path = experiments.write_rows_csv(rows, out_dir / f"{name}.csv")
        report_path = experiments.write_json(experiments.figure_summary(name, rows), out_dir / f"{name}-report.json")
        self.stdout.write(self.style.SUCCESS(f"wrote {len(rows)} rows to {csv_path} and {report_path}"))
