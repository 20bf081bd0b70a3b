import json

from django.core.management.base import BaseCommand, CommandError

from ris import experiments
from ris.errors import DomainError, NumericError
from ris.management.commands._shared import (
    EXIT_TOLERANCE,
    add_run_arguments,
    load_config,
    numeric_error,
    run,
    threads_from,
)


class Command(BaseCommand):
    help = "Cross-validate the closed forms against Monte Carlo and gate the errors on tolerances."

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="Path to the sweep config (JSON).")
        parser.add_argument("--tol-outage", type=float, help="Relative tolerance for outage rows.")
        parser.add_argument("--tol-se", type=float, help="Relative tolerance for spectral-efficiency rows.")
        parser.add_argument("--tol-ks", type=float, help="Largest allowed KS distance between the CDFs.")
        parser.add_argument("--report", help="Write the JSON report here instead of stdout.")
        parser.add_argument("--out", help="Also write the sweep rows as CSV.")
        add_run_arguments(parser)

    def handle(self, *args, **options):
        threads = threads_from(options)
        config = load_config(options["config"], options)
        tolerances = dict(config.tolerances)
        for key, option in (("outage", "tol_outage"), ("spectral_efficiency", "tol_se"), ("ks", "tol_ks")):
            if options[option] is not None:
                tolerances[key] = options[option]

        try:
            samples = experiments.draw_samples(config, threads=threads)
            rows = run(config, threads=threads, out=options["out"], samples=samples)
            ks = experiments.cdf_ks_distances(config, samples) if samples is not None else {}
            diagnostics = experiments.printed_formula_diagnostics(config)
            report = experiments.validation_report(
                rows, tolerances, ks=ks, diagnostics=diagnostics, path=options["report"]
            )
        except (NumericError, DomainError) as exc:
            raise numeric_error(exc) from exc

        if options["report"] is None:
            self.stdout.write(json.dumps(report.as_dict(), indent=2, sort_keys=True))
        for metric, entry in sorted(report.metrics.items()):
            if entry.get("gated"):
                status = self.style.SUCCESS("ok") if entry["passed"] else self.style.ERROR("FAIL")
                self.stdout.write(f"{metric}: max rel_error {entry.get('max_rel_error')} ({status})")
        if not report.passed:
            raise CommandError(
                f"tolerance exceeded: {', '.join(report.failures)}", returncode=EXIT_TOLERANCE
            )
        self.stdout.write(self.style.SUCCESS(f"{config.scenario_id}: all gated metrics within tolerance"))
