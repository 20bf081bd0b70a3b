from django.core.management.base import BaseCommand

from ris.management.commands._shared import add_run_arguments, load_config, run, threads_from


class Command(BaseCommand):
    help = "Run the analytic and Monte Carlo sweep described by a JSON config and write the rows as CSV."

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="Path to the sweep config (JSON).")
        parser.add_argument("--out", required=True, help="CSV file to write.")
        add_run_arguments(parser)

    def handle(self, *args, **options):
        threads = threads_from(options)
        config = load_config(options["config"], options)
        rows = run(config, threads=threads, out=options["out"])
        self.stdout.write(self.style.SUCCESS(f"{config.scenario_id}: wrote {len(rows)} rows to {options['out']}"))
