from django.core.management.base import CommandError

from ris import experiments
from ris.errors import ConfigError, NumericError

EXIT_TOLERANCE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def add_run_arguments(parser):
    parser.add_argument("--seed", type=int, help="Seed for the Monte Carlo substreams (overrides config and RIS_IOI_SEED).")
    parser.add_argument("--threads", type=int, help="Worker threads; changes wall time only.")


def threads_from(options):
    threads = options.get("threads")
    if threads is None:
        threads = experiments.knobs()["THREADS"]
    if threads < 1:
        raise CommandError("--threads must be >= 1", returncode=EXIT_CONFIG)
    return threads


def config_error(exc):
    return CommandError(f"config error: {exc}", returncode=EXIT_CONFIG)


def numeric_error(exc):
    return CommandError(f"numeric error: {exc}", returncode=EXIT_NUMERIC)


def load_config(path, options):
    try:
        config = experiments.parse_config(path)
        return experiments.override_run(config, seed=options.get("seed"), trials=options.get("trials"))
    except ConfigError as exc:
        raise config_error(exc) from exc


def run(config, *, threads, out=None, samples=None):
    try:
        return experiments.run_sweep(config, out=out, threads=threads, samples=samples)
    except NumericError as exc:
        raise numeric_error(exc) from exc
