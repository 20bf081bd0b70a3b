"""
Sweeps, figure presets and validation reports on top of the analytic and
Monte Carlo modules.

Configs are JSON documents (`"schema": 1`) validated with the forms in
`ris.forms`. A config may name a preset; its fragment is deep-merged under the
file's own keys, so any preset value can be overridden. All p values are in
dB on the way in and out; everything in between is linear.
"""

import csv
import json
import logging
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from django.conf import settings

from ris import analytic, montecarlo, specfun
from ris.channel import PERFECT, LinkGeometry, RicianLink, RisUnit, Scenario, parse_quantizer_bits
from ris.errors import ConfigError, DomainError, NumericError, SweepError
from ris.forms import (
    LinkForm,
    PowerRangeForm,
    RisForm,
    RunForm,
    ScenarioForm,
    SweepForm,
    ToleranceForm,
    validate_section,
)

logger = logging.getLogger(__name__)

REL_ERROR_FLOOR = 1e-12
STDERR_BAND = 3.0
WARN_DEVIATION = 0.01

DEFAULT_KNOBS = {
    "SEED": None,
    "THREADS": 1,
    "CHUNKS": 16,
    "OUTAGE_TRIALS": 1_000_000,
    "SE_TRIALS": 100_000,
    "QUAD_NODES": analytic.DEFAULT_QUAD_NODES,
    "QUAD_MAX_NODES": analytic.DEFAULT_QUAD_MAX_NODES,
    "QUAD_RTOL": analytic.DEFAULT_QUAD_RTOL,
}

DEFAULT_P_DB = {"start": 0.0, "stop": 30.0, "step": 10.0}
DEFAULT_OUTPUTS = ("analytic_outage", "mc_outage", "analytic_se", "mc_se")

# metric -> (analytic output, Monte Carlo output it is compared with)
METRICS = {
    "outage": ("analytic_outage", "mc_outage"),
    "outage_asymptotic": ("outage_asymptotic", "mc_outage"),
    "se_asymptotic": ("se_asymptotic", "mc_se"),
    "spectral_efficiency": ("analytic_se", "mc_se"),
}
GATED_METRICS = ("outage", "spectral_efficiency")

# Evaluation setup: direct link 100 m, both RIS hops 30 m, q = 3, κ = (10, 6)
BASELINE_DIRECT = {"distance_m": 100.0, "pathloss_exponent": 3.1}
BASELINE_INBOUND = {"distance_m": 30.0, "pathloss_exponent": 2.2, "k_factor": 10.0}
BASELINE_OUTBOUND = {"distance_m": 30.0, "pathloss_exponent": 2.4, "k_factor": 6.0}
BASELINE_QUANTIZER_BITS = 3

FIGURES = ("fig2-case1", "fig2-case2", "fig3")
FIG2_M_VALUES = (16, 64, 256, 1024)
FIG3_N_VALUES = (100, 400)
FIG3_M_LARGE = 10_000
FIGURE_P_DB = {"start": 0.0, "stop": 30.0, "step": 5.0}
FIGURE_OUTPUTS = ("analytic_se", "mc_se", "se_asymptotic")


def knobs():
    merged = dict(DEFAULT_KNOBS)
    merged.update(getattr(settings, "RIS_IOI", {}) or {})
    return merged


def quadrature_options():
    values = knobs()
    return {
        "nodes": values["QUAD_NODES"],
        "max_nodes": values["QUAD_MAX_NODES"],
        "rtol": values["QUAD_RTOL"],
    }


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class PowerRange:
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError(f"step must be > 0, got {self.step!r}")
        if not self.stop >= self.start:
            raise DomainError(f"stop must be >= start, got {self.start!r}..{self.stop!r}")

    def points(self):
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 12) for i in range(count)]


@dataclass(frozen=True)
class SweepConfig:
    scenario_id: str
    scenario: Scenario
    p_db: PowerRange
    gamma_th_db: float = 0.0
    run: "montecarlo.RunSpec | None" = None
    outputs: tuple = DEFAULT_OUTPUTS
    pseudo_variance: str = "printed"
    tolerances: dict = field(default_factory=dict)

    @property
    def gamma_th(self):
        return db_to_linear(self.gamma_th_db)

    @property
    def wants_monte_carlo(self):
        return self.run is not None and any(o.startswith("mc_") for o in self.outputs)


@dataclass(frozen=True)
class SweepRow:
    scenario_id: str
    p_db: float
    n: int
    m_total: int
    q_bits: object
    metric: str
    analytic: float
    mc_value: "float | None" = None
    mc_stderr: "float | None" = None
    rel_error: "float | None" = None


def relative_error(analytic_value, mc_value):
    return abs(analytic_value - mc_value) / max(abs(mc_value), REL_ERROR_FLOOR)


# Presets


def _ris_fragment(elements):
    return {
        "elements": elements,
        "quantizer_bits": BASELINE_QUANTIZER_BITS,
        "inbound": dict(BASELINE_INBOUND),
        "outbound": dict(BASELINE_OUTBOUND),
    }


def _scenario_fragment(n, m_values):
    return {
        "direct": dict(BASELINE_DIRECT),
        "reference_ris": _ris_fragment(n) if n else None,
        "external_ris": [_ris_fragment(m) for m in m_values if m],
        "external_phases": "continuous",
    }


_PRESET_PATTERNS = (
    (re.compile(r"baseline"), lambda: (64, [64])),
    (re.compile(r"fig2-case1-M(\d+)"), lambda m: (0, [int(m)])),
    (re.compile(r"fig2-case2-(\d+)"), lambda k: (int(k), [int(k)])),
    (re.compile(r"fig3-N(\d+)"), lambda n: (int(n), [FIG3_M_LARGE])),
    (re.compile(r"fig3-N(\d+)-M0"), lambda n: (int(n), [])),
)


def preset_fragment(name):
    """Config fragment for a named single-scenario preset."""
    for pattern, build in _PRESET_PATTERNS:
        match = pattern.fullmatch(str(name))
        if match:
            n, m_values = build(*match.groups())
            return {"id": name, "scenario": _scenario_fragment(n, m_values)}
    raise ConfigError(f"unknown preset {name!r}", key="preset")


def _deep_merge(base, override):
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


# Config parsing


def _build_link(data, path):
    link = validate_section(LinkForm, data, path)
    try:
        return RicianLink(LinkGeometry(link["distance_m"], link["pathloss_exponent"]), link["k_factor"])
    except DomainError as exc:
        raise ConfigError(str(exc), key=path) from exc


def _build_ris(data, path, *, controlled):
    section = validate_section(RisForm, data, path)
    inbound = _build_link(data.get("inbound"), f"{path}.inbound")
    outbound = _build_link(data.get("outbound"), f"{path}.outbound")
    try:
        return RisUnit(section["elements"], section["quantizer_bits"], inbound, outbound, controlled)
    except DomainError as exc:
        raise ConfigError(str(exc), key=path) from exc


def _build_scenario(data, path="scenario"):
    if data is None:
        raise ConfigError("missing scenario", key=path)
    section = validate_section(ScenarioForm, data, path)
    direct = None
    if data.get("direct") is not None:
        direct = _build_link(data["direct"], f"{path}.direct")
    reference = None
    if data.get("reference_ris") is not None:
        reference = _build_ris(data["reference_ris"], f"{path}.reference_ris", controlled=True)
    externals = data.get("external_ris") or []
    if not isinstance(externals, list):
        raise ConfigError("expected a list", key=f"{path}.external_ris")
    external_ris = tuple(
        _build_ris(item, f"{path}.external_ris[{i}]", controlled=False)
        for i, item in enumerate(externals)
    )
    try:
        return Scenario(
            direct=direct,
            reference_ris=reference,
            external_ris=external_ris,
            external_phases=section["external_phases"] or "continuous",
        )
    except DomainError as exc:
        raise ConfigError(str(exc), key=path) from exc


def _build_run(data, outputs):
    section = validate_section(RunForm, data if data is not None else {}, "run")
    values = knobs()
    trials = section["trials"]
    if trials is None:
        trials = values["OUTAGE_TRIALS"] if "mc_outage" in outputs else values["SE_TRIALS"]
    if trials == 0:
        return None
    seed = section["seed"]
    if seed is None:
        seed = values["SEED"] if values["SEED"] is not None else 0
    chunks = section["chunks"]
    if chunks is None:
        chunks = min(values["CHUNKS"], trials)
    try:
        return montecarlo.RunSpec(seed=seed, trials=trials, chunks=chunks)
    except DomainError as exc:
        raise ConfigError(str(exc), key="run") from exc


def build_config(data, *, default_id="sweep"):
    """Validate a decoded config document and build the SweepConfig."""
    if not isinstance(data, dict):
        raise ConfigError("expected a JSON object at the top level")
    data = dict(data)
    preset = data.pop("preset", None)
    if preset:
        data = _deep_merge(preset_fragment(preset), data)

    top = validate_section(SweepForm, data)
    outputs = tuple(top["outputs"]) or DEFAULT_OUTPUTS
    scenario = _build_scenario(data.get("scenario"))
    p_section = validate_section(PowerRangeForm, data.get("p_db", DEFAULT_P_DB), "p_db")
    tolerances = validate_section(ToleranceForm, data.get("tolerances") or {}, "tolerances")
    return SweepConfig(
        scenario_id=top["id"] or default_id,
        scenario=scenario,
        p_db=PowerRange(p_section["start"], p_section["stop"], p_section["step"]),
        gamma_th_db=top["gamma_th_db"] if top["gamma_th_db"] is not None else 0.0,
        run=_build_run(data.get("run"), outputs),
        outputs=outputs,
        pseudo_variance=top["pseudo_variance"] or "printed",
        tolerances={k: v for k, v in tolerances.items() if v is not None},
    )


def parse_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    config = build_config(data, default_id=path.stem)
    logger.info("loaded config %s (%s)", path, config.scenario_id)
    return config


def override_run(config, *, seed=None, trials=None):
    """Apply command-line --seed/--trials on top of the config's run."""
    if seed is None and trials is None:
        return config
    if trials == 0:
        return replace(config, run=None)
    run = config.run
    if run is None and trials is None:
        return config
    values = knobs()
    if seed is None:
        seed = run.seed if run is not None else (values["SEED"] if values["SEED"] is not None else 0)
    if trials is None:
        trials = run.trials
    chunks = min(run.chunks if run is not None else values["CHUNKS"], trials)
    try:
        return replace(config, run=montecarlo.RunSpec(seed=seed, trials=trials, chunks=chunks))
    except DomainError as exc:
        raise ConfigError(str(exc), key="run") from exc


# Analytic models


class GammaModel:
    """Gamma-matched SNR law for scenarios with a reference RIS."""

    def __init__(self, moments, quadrature):
        self.moments = moments
        self.quadrature = quadrature

    def cdf(self, x, p_linear):
        return analytic.snr_cdf(x, p_linear, self.moments)

    def cdf_curve(self, grid, p_linear):
        return analytic.snr_cdf_curve(grid, p_linear, self.moments)

    def outage(self, gamma_th, p_linear):
        return analytic.outage_probability(gamma_th, p_linear, self.moments)

    def outage_asymptotic(self, gamma_th, p_linear):
        return analytic.outage_asymptotic(gamma_th, p_linear, self.moments)

    def spectral_efficiency(self, p_linear):
        return analytic.spectral_efficiency(p_linear, self.moments, **self.quadrature)

    def se_asymptotic(self, p_linear):
        return analytic.spectral_efficiency_asymptotic(p_linear, self.moments)


class ExponentialModel:
    """Exponential SNR law: no reference RIS (direct link and external RISs only)."""

    def __init__(self, m_total_vy, v_d):
        self.m_total_vy = m_total_vy
        self.v_d = v_d

    def mean_snr(self, p_linear):
        return p_linear * (self.v_d + self.m_total_vy)

    def cdf(self, x, p_linear):
        return analytic.no_ris_cdf(x, p_linear, self.m_total_vy, self.v_d)

    def cdf_curve(self, grid, p_linear):
        return analytic.no_ris_cdf_curve(grid, p_linear, self.m_total_vy, self.v_d)

    def outage(self, gamma_th, p_linear):
        return self.cdf(gamma_th, p_linear)

    def outage_asymptotic(self, gamma_th, p_linear):
        # unit diversity order
        return gamma_th / self.mean_snr(p_linear)

    def spectral_efficiency(self, p_linear):
        return analytic.exponential_spectral_efficiency(self.mean_snr(p_linear))

    def se_asymptotic(self, p_linear):
        return (math.log(self.mean_snr(p_linear)) - specfun.EULER_GAMMA) / analytic.LN2


def analytic_model(scenario, *, pseudo_variance="printed", quadrature=None):
    if scenario.num_reference_elements == 0:
        s = analytic.aggregate_external_variance(scenario)
        if s == 0.0 and scenario.direct_gain == 0.0:
            raise DomainError("scenario has no fading source: every gain is zero")
        return ExponentialModel(s, scenario.direct_gain)
    moments = analytic.derive_moments(scenario, pseudo_variance=pseudo_variance)
    logger.debug(
        "m_N = %.6g, gamma_bar = %.6g, nominal diversity %.6g",
        moments.m_n,
        moments.gamma_bar,
        analytic.nominal_diversity_order(moments),
    )
    return GammaModel(moments, quadrature if quadrature is not None else quadrature_options())


# Sweeps


def draw_samples(config, *, threads=1):
    if config.run is None:
        return None
    logger.info(
        "%s: drawing %d channel blocks in %d chunks (seed %d)",
        config.scenario_id,
        config.run.trials,
        config.run.chunks,
        config.run.seed,
    )
    return montecarlo.sample_gains(config.scenario, config.run, threads=threads)


def _quantizer_label(scenario):
    if scenario.reference_ris is not None:
        return scenario.reference_ris.quantizer_bits
    if scenario.external_ris:
        return scenario.external_ris[0].quantizer_bits
    return PERFECT


def _rows_at(config, model, samples, p_db):
    p = db_to_linear(p_db)
    gamma_th = config.gamma_th
    mc = {}
    if samples is not None:
        if "mc_outage" in config.outputs:
            mc["mc_outage"] = montecarlo.outage_from_gains(samples, p, gamma_th)
        if "mc_se" in config.outputs:
            mc["mc_se"] = montecarlo.spectral_efficiency_from_gains(samples, p)
    evaluate = {
        "outage": lambda: model.outage(gamma_th, p),
        "outage_asymptotic": lambda: model.outage_asymptotic(gamma_th, p),
        "se_asymptotic": lambda: model.se_asymptotic(p),
        "spectral_efficiency": lambda: model.spectral_efficiency(p),
    }
    scenario = config.scenario
    for metric, (analytic_key, mc_key) in METRICS.items():
        requested = analytic_key in config.outputs or (
            metric in GATED_METRICS and mc_key in config.outputs
        )
        if not requested:
            continue
        value = evaluate[metric]()
        estimate = mc.get(mc_key)
        yield SweepRow(
            scenario_id=config.scenario_id,
            p_db=p_db,
            n=scenario.num_reference_elements,
            m_total=sum(scenario.external_elements),
            q_bits=_quantizer_label(scenario),
            metric=metric,
            analytic=value,
            mc_value=estimate.value if estimate else None,
            mc_stderr=estimate.std_error if estimate else None,
            rel_error=relative_error(value, estimate.value) if estimate else None,
        )


def run_sweep(config, *, out=None, threads=1, samples=None):
    """
    Evaluate every requested metric at every p of `config`.

    The channel is sampled once (|Ξ|² does not depend on p) unless `samples`
    are passed in. Rows come back sorted by (metric, p_db) and are written to
    `out` as CSV when given.
    """
    try:
        model = analytic_model(
            config.scenario, pseudo_variance=config.pseudo_variance, quadrature=quadrature_options()
        )
    except (NumericError, DomainError) as exc:
        raise SweepError(str(exc)) from exc
    if samples is None and config.wants_monte_carlo:
        samples = draw_samples(config, threads=threads)

    rows = []
    for p_db in config.p_db.points():
        try:
            rows.extend(_rows_at(config, model, samples, p_db))
        except SweepError:
            raise
        except (NumericError, DomainError) as exc:
            raise SweepError(str(exc), p_db=p_db) from exc
    rows.sort(key=lambda row: (row.metric, row.p_db))
    logger.info("%s: %d rows", config.scenario_id, len(rows))
    if out is not None:
        write_rows_csv(rows, out)
    return rows


# CSV


CSV_FIELDS = tuple(f.name for f in fields(SweepRow))


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _optional_float(text):
    return float(text) if text != "" else None


def write_rows_csv(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for row in rows:
            writer.writerow([_format_cell(getattr(row, name)) for name in CSV_FIELDS])
    logger.info("wrote %d rows to %s", len(rows), path)
    return path


def read_rows_csv(path):
    with Path(path).open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ConfigError(f"unexpected CSV header in {path}", line=1)
        return [
            SweepRow(
                scenario_id=record["scenario_id"],
                p_db=float(record["p_db"]),
                n=int(record["n"]),
                m_total=int(record["m_total"]),
                q_bits=parse_quantizer_bits(record["q_bits"]),
                metric=record["metric"],
                analytic=float(record["analytic"]),
                mc_value=_optional_float(record["mc_value"]),
                mc_stderr=_optional_float(record["mc_stderr"]),
                rel_error=_optional_float(record["rel_error"]),
            )
            for record in reader
        ]


# Figures


def figure_preset(name, *, trials=None, seed=None, chunks=None):
    """The sweep configs behind one figure, in plotting order."""
    if name == "fig2-case1":
        presets = [f"fig2-case1-M{m}" for m in FIG2_M_VALUES]
    elif name == "fig2-case2":
        presets = [f"fig2-case2-{k}" for k in FIG2_M_VALUES]
    elif name == "fig3":
        presets = [f"fig3-N{n}{suffix}" for n in FIG3_N_VALUES for suffix in ("-M0", "")]
    else:
        raise ConfigError(f"unknown figure {name!r}; expected one of {', '.join(FIGURES)}")

    run = {"trials": trials if trials is not None else knobs()["SE_TRIALS"]}
    if seed is not None:
        run["seed"] = seed
    if chunks is not None:
        run["chunks"] = chunks
    return [
        build_config(
            {
                "schema": 1,
                "preset": preset,
                "p_db": dict(FIGURE_P_DB),
                "outputs": list(FIGURE_OUTPUTS),
                "run": dict(run),
            }
        )
        for preset in presets
    ]


def _finite_or_none(value):
    if value is None or not math.isfinite(value):
        return None
    return value


def figure_summary(name, rows):
    """
    Per-scenario mean spectral efficiency and, when a scenario appears with
    and without external elements, the relative SE gap per N and p.
    """
    se_rows = [row for row in rows if row.metric == "spectral_efficiency"]
    scenarios = {}
    for row in se_rows:
        entry = scenarios.setdefault(
            row.scenario_id,
            {"n": row.n, "m_total": row.m_total, "q_bits": str(row.q_bits), "analytic": [], "mc": [], "rel": []},
        )
        entry["analytic"].append(row.analytic)
        if row.mc_value is not None:
            entry["mc"].append(row.mc_value)
            entry["rel"].append(row.rel_error)

    summary = {"figure": name, "scenarios": {}}
    for scenario_id, entry in scenarios.items():
        summary["scenarios"][scenario_id] = {
            "n": entry["n"],
            "m_total": entry["m_total"],
            "q_bits": entry["q_bits"],
            "mean_se_analytic": math.fsum(entry["analytic"]) / len(entry["analytic"]),
            "mean_se_mc": math.fsum(entry["mc"]) / len(entry["mc"]) if entry["mc"] else None,
            "max_rel_error": max(entry["rel"]) if entry["rel"] else None,
        }

    by_n = {}
    for row in se_rows:
        by_n.setdefault(row.n, {}).setdefault(row.p_db, {})[row.m_total] = row.analytic
    gaps = {}
    for n, per_p in sorted(by_n.items()):
        for p_db, per_m in sorted(per_p.items()):
            loaded = [m for m in per_m if m > 0]
            if 0 in per_m and loaded:
                baseline = per_m[0]
                worst = per_m[max(loaded)]
                gaps.setdefault(str(n), {})[f"{p_db:g}"] = (baseline - worst) / baseline
    if gaps:
        summary["se_gap"] = gaps
        ns = sorted(gaps, key=int)
        common = set.intersection(*(set(gaps[n]) for n in ns))
        summary["se_gap_shrinks_with_n"] = {
            p: all(gaps[a][p] > gaps[b][p] for a, b in zip(ns, ns[1:]))
            for p in sorted(common, key=float)
        }
    return summary


def write_json(document, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


# Validation


def cdf_ks_distances(config, samples, *, points=512):
    """KS distance between the analytic and empirical SNR CDF at each p of the sweep."""
    model = analytic_model(
        config.scenario, pseudo_variance=config.pseudo_variance, quadrature=quadrature_options()
    )
    ordered = samples.sorted()
    gain_grid = np.quantile(ordered, np.linspace(0.0, 0.999, points))
    distances = {}
    for p_db in config.p_db.points():
        p = db_to_linear(p_db)
        grid = tuple(float(x) for x in p * gain_grid)
        empirical = montecarlo.cdf_from_gains(samples, p, grid)
        distances[f"{p_db:g}"] = montecarlo.ks_distance(model.cdf_curve(grid, p), empirical)
    return distances


def _deviation_entry(form, p_db, printed, reference):
    if printed is None:
        logger.warning("%s at %g dB diverges; only the reference is reported", form, p_db)
        return {
            "form": form,
            "p_db": p_db,
            "printed": None,
            "reference": _finite_or_none(reference),
            "relative_deviation": None,
            "note": "printed form diverges",
        }
    deviation = (printed - reference) / reference
    if abs(deviation) > WARN_DEVIATION:
        logger.warning("%s at %g dB deviates from its reference by %.3g", form, p_db, deviation)
    return {
        "form": form,
        "p_db": p_db,
        "printed": _finite_or_none(printed),
        "reference": _finite_or_none(reference),
        "relative_deviation": _finite_or_none(deviation),
    }


def printed_formula_diagnostics(config):
    """
    Deviations of the two printed closed forms from the values they stand for:
    the high-SNR spectral efficiency against quadrature, and the printed no-RIS
    spectral efficiency against its reduced exponential form. Forms that do
    not apply to the scenario are listed with a note.
    """
    scenario = config.scenario
    quadrature = quadrature_options()
    moments = None
    if scenario.num_reference_elements > 0:
        moments = analytic.derive_moments(scenario, pseudo_variance=config.pseudo_variance)
    s = analytic.aggregate_external_variance(scenario)
    v_d = scenario.direct_gain
    m_total = sum(scenario.external_elements)

    entries = []
    for p_db in config.p_db.points():
        p = db_to_linear(p_db)
        if moments is not None:
            entries.append(
                _deviation_entry(
                    "se_high_snr",
                    p_db,
                    analytic.spectral_efficiency_asymptotic(p, moments),
                    analytic.spectral_efficiency(p, moments, **quadrature),
                )
            )
        else:
            entries.append({"form": "se_high_snr", "p_db": p_db, "note": "needs a reference RIS"})
        if s > 0.0 and v_d > 0.0:
            no_ris = analytic.no_ris_spectral_efficiency(p, s, v_d, v_y=s / m_total)
            entries.append(_deviation_entry("no_ris_se", p_db, no_ris.printed, no_ris.reduced))
        else:
            entries.append(
                {"form": "no_ris_se", "p_db": p_db, "note": "needs a direct link and an external RIS"}
            )
    return entries


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    failures: tuple
    metrics: dict
    ks: dict
    diagnostics: list

    def as_dict(self):
        return {
            "passed": self.passed,
            "failures": list(self.failures),
            "metrics": self.metrics,
            "ks": self.ks,
            "diagnostics": self.diagnostics,
        }


def _row_within(row, tolerance):
    if row.rel_error <= tolerance:
        return True
    return abs(row.analytic - row.mc_value) <= STDERR_BAND * row.mc_stderr


def validation_report(rows, tolerances, *, ks=None, diagnostics=(), path=None):
    """
    Summarize rel_error per metric and gate it against `tolerances`.

    A row is within tolerance when its rel_error is, or when the analytic
    value lies inside three Monte Carlo standard errors. "ks" gates the
    largest KS distance. Metrics without a tolerance are reported only.
    """
    if not rows:
        raise DomainError("validation needs at least one sweep row")
    tolerances = {k: v for k, v in (tolerances or {}).items() if v is not None}
    failures = []
    metrics = {}
    for metric in sorted({row.metric for row in rows}):
        compared = [row for row in rows if row.metric == metric and row.rel_error is not None]
        tolerance = tolerances.get(metric) if metric in GATED_METRICS else None
        entry = {
            "rows": sum(1 for row in rows if row.metric == metric),
            "compared": len(compared),
            "max_rel_error": _finite_or_none(max((row.rel_error for row in compared), default=None)),
            "tolerance": tolerance,
            "gated": tolerance is not None,
        }
        if tolerance is not None:
            outside = [row.p_db for row in compared if not _row_within(row, tolerance)]
            entry["outside_p_db"] = outside
            entry["passed"] = bool(compared) and not outside
            if not entry["passed"]:
                failures.append(metric)
        metrics[metric] = entry

    for metric in GATED_METRICS:
        if metric in tolerances and metric not in metrics:
            metrics[metric] = {"rows": 0, "compared": 0, "tolerance": tolerances[metric], "gated": True, "passed": False}
            failures.append(metric)

    ks_entry = {"distances": dict(ks or {}), "tolerance": tolerances.get("ks")}
    if ks_entry["tolerance"] is not None:
        worst = max(ks_entry["distances"].values(), default=None)
        ks_entry["max"] = worst
        ks_entry["passed"] = worst is not None and worst <= ks_entry["tolerance"]
        if not ks_entry["passed"]:
            failures.append("ks")

    report = ValidationReport(
        passed=not failures,
        failures=tuple(failures),
        metrics=metrics,
        ks=ks_entry,
        diagnostics=list(diagnostics),
    )
    if path is not None:
        write_json(report.as_dict(), path)
    return report
