from django import forms

from ris.channel import EXTERNAL_PHASE_MODES, parse_quantizer_bits
from ris.errors import ConfigError, DomainError

SCHEMA_VERSION = 1

OUTPUT_CHOICES = [
    ("analytic_outage", "analytic outage"),
    ("mc_outage", "Monte Carlo outage"),
    ("analytic_se", "analytic spectral efficiency"),
    ("mc_se", "Monte Carlo spectral efficiency"),
    ("se_asymptotic", "high-SNR spectral efficiency"),
    ("outage_asymptotic", "high-SNR outage"),
]


class LinkForm(forms.Form):
    distance_m = forms.FloatField()
    pathloss_exponent = forms.FloatField()
    k_factor = forms.FloatField(required=False)

    def clean_distance_m(self):
        value = self.cleaned_data["distance_m"]
        if value <= 0:
            raise forms.ValidationError("distance must be > 0")
        return value

    def clean_pathloss_exponent(self):
        value = self.cleaned_data["pathloss_exponent"]
        if value <= 0:
            raise forms.ValidationError("path-loss exponent must be > 0")
        return value

    def clean_k_factor(self):
        value = self.cleaned_data.get("k_factor")
        if value is None:
            return 0.0
        if value < 0:
            raise forms.ValidationError("Rician K-factor must be >= 0")
        return value


class RisForm(forms.Form):
    nested = ("inbound", "outbound")

    elements = forms.IntegerField(min_value=0)
    quantizer_bits = forms.CharField()

    def clean_quantizer_bits(self):
        try:
            return parse_quantizer_bits(self.cleaned_data["quantizer_bits"])
        except DomainError as exc:
            raise forms.ValidationError(str(exc))


class ScenarioForm(forms.Form):
    nested = ("direct", "reference_ris", "external_ris")

    external_phases = forms.ChoiceField(
        choices=[(mode, mode) for mode in EXTERNAL_PHASE_MODES], required=False
    )


class PowerRangeForm(forms.Form):
    start = forms.FloatField()
    stop = forms.FloatField()
    step = forms.FloatField()

    def clean(self):
        cleaned_data = super().clean()
        start, stop, step = (cleaned_data.get(k) for k in ("start", "stop", "step"))
        if step is not None and step <= 0:
            raise forms.ValidationError("step must be > 0")
        if start is not None and stop is not None and stop < start:
            raise forms.ValidationError("stop must be >= start")
        return cleaned_data


class RunForm(forms.Form):
    seed = forms.IntegerField(required=False, min_value=0, max_value=2 ** 64 - 1)
    trials = forms.IntegerField(required=False, min_value=0)
    chunks = forms.IntegerField(required=False, min_value=1)


class ToleranceForm(forms.Form):
    outage = forms.FloatField(required=False, min_value=0)
    spectral_efficiency = forms.FloatField(required=False, min_value=0)
    ks = forms.FloatField(required=False, min_value=0)


class SweepForm(forms.Form):
    nested = ("scenario", "p_db", "run", "tolerances")

    schema = forms.IntegerField()
    id = forms.CharField(required=False)
    gamma_th_db = forms.FloatField(required=False)
    outputs = forms.MultipleChoiceField(choices=OUTPUT_CHOICES, required=False)
    pseudo_variance = forms.ChoiceField(
        choices=[("printed", "printed"), ("circular", "circular")], required=False
    )

    def clean_schema(self):
        value = self.cleaned_data["schema"]
        if value != SCHEMA_VERSION:
            raise forms.ValidationError(f"unsupported schema {value}; expected {SCHEMA_VERSION}")
        return value


def _join(path, key):
    return f"{path}.{key}" if path else key


def validate_section(form_class, data, path=""):
    """
    Validate one JSON object against `form_class`.

    Unknown keys are rejected; keys listed in `form_class.nested` are left for
    the caller. Errors come back as ConfigError naming the dotted key.
    """
    if not isinstance(data, dict):
        raise ConfigError("expected a JSON object", key=path or None)
    allowed = set(form_class.base_fields) | set(getattr(form_class, "nested", ()))
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError("unknown key", key=_join(path, unknown[0]))
    form = form_class(data={k: v for k, v in data.items() if k in form_class.base_fields})
    if not form.is_valid():
        field, errors = next(iter(form.errors.items()))
        key = path if field == "__all__" else _join(path, field)
        raise ConfigError(errors[0], key=key or None)
    return form.cleaned_data
