"""
Channel model for one coherence block of the multi-operator RIS link.

The reference operator aligns its own RIS to the direct link (coherent
detection) with a q-bit phase codebook; every external RIS reflects with
phases it chooses independently, which the reference receiver sees as
incoherent interference. Sampling is exact: no Gaussian approximation of the
RIS sums is made here.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ris import specfun
from ris.errors import DomainError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class Perfect(enum.Enum):
    """Quantizer sentinel: continuous (error-free) phase alignment."""

    PERFECT = "PERFECT"

    def __str__(self):
        return self.value


PERFECT = Perfect.PERFECT

EXTERNAL_PHASE_MODES = ("continuous", "codebook")


def parse_quantizer_bits(value):
    """Accept an int >= 1, PERFECT, or their string spellings."""
    if value is PERFECT:
        return PERFECT
    if isinstance(value, str):
        if value.strip().upper() == PERFECT.value:
            return PERFECT
        try:
            value = int(value)
        except ValueError:
            raise DomainError(f"quantizer bits must be an integer or PERFECT, got {value!r}") from None
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise DomainError(f"quantizer bits must be >= 1, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class LinkGeometry:
    distance_m: float
    pathloss_exponent: float

    def __post_init__(self):
        if not (self.distance_m > 0 and math.isfinite(self.distance_m)):
            raise DomainError(f"distance_m must be > 0, got {self.distance_m!r}")
        if not (self.pathloss_exponent > 0 and math.isfinite(self.pathloss_exponent)):
            raise DomainError(f"pathloss_exponent must be > 0, got {self.pathloss_exponent!r}")

    @property
    def path_gain(self):
        return self.distance_m ** (-self.pathloss_exponent)


@dataclass(frozen=True)
class RicianLink:
    """One hop: geometry plus a Rician K-factor (0 is Rayleigh). Unit fading power."""

    geometry: LinkGeometry
    k_factor: float = 0.0

    def __post_init__(self):
        if not (self.k_factor >= 0 and math.isfinite(self.k_factor)):
            raise DomainError(f"k_factor must be >= 0, got {self.k_factor!r}")

    @property
    def path_gain(self):
        return self.geometry.path_gain

    def amplitude_mean(self):
        # E|h|; another fading law only needs to override this and `sample`
        return specfun.rician_mean_factor(self.k_factor)

    def sample(self, shape, rng):
        return _rician(shape, self.k_factor, rng)


@dataclass(frozen=True)
class RisUnit:
    num_elements: int
    quantizer_bits: "int | Perfect"
    inbound: RicianLink
    outbound: RicianLink
    controlled: bool = False

    def __post_init__(self):
        if isinstance(self.num_elements, bool) or int(self.num_elements) != self.num_elements:
            raise DomainError(f"num_elements must be an integer, got {self.num_elements!r}")
        if self.num_elements < 0:
            raise DomainError(f"num_elements must be >= 0, got {self.num_elements!r}")
        object.__setattr__(self, "num_elements", int(self.num_elements))
        object.__setattr__(self, "quantizer_bits", parse_quantizer_bits(self.quantizer_bits))

    @property
    def cascaded_gain(self):
        return self.inbound.path_gain * self.outbound.path_gain


@dataclass(frozen=True)
class Scenario:
    """
    Full system: optional Rayleigh direct link, optional controlled reference
    RIS, and any number of uncontrolled external RISs.
    """

    direct: "RicianLink | None" = None
    reference_ris: "RisUnit | None" = None
    external_ris: tuple = ()
    external_phases: str = "continuous"

    def __post_init__(self):
        object.__setattr__(self, "external_ris", tuple(self.external_ris))
        if self.direct is None and self.reference_ris is None and not self.external_ris:
            raise DomainError("scenario needs a direct link, a reference RIS or an external RIS")
        if self.direct is not None and self.direct.k_factor != 0:
            logger.warning("direct link is Rayleigh; ignoring k_factor=%s", self.direct.k_factor)
            object.__setattr__(self, "direct", RicianLink(self.direct.geometry, 0.0))
        if self.reference_ris is not None and not self.reference_ris.controlled:
            raise DomainError("the reference RIS must be controlled")
        for unit in self.external_ris:
            if unit.controlled:
                raise DomainError("external RISs are uncontrolled; only one RIS may be controlled")
        if self.external_phases not in EXTERNAL_PHASE_MODES:
            raise DomainError(
                f"external_phases must be one of {EXTERNAL_PHASE_MODES}, got {self.external_phases!r}"
            )

    @property
    def num_reference_elements(self):
        return self.reference_ris.num_elements if self.reference_ris is not None else 0

    @property
    def external_elements(self):
        return [unit.num_elements for unit in self.external_ris]

    @property
    def direct_gain(self):
        return self.direct.path_gain if self.direct is not None else 0.0

    @property
    def total_elements(self):
        return self.num_reference_elements + sum(self.external_elements)


@dataclass(frozen=True)
class ChannelDraw:
    z: float
    x: complex
    y: complex
    xi: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "xi", complex(self.z + self.x + self.y))


@dataclass(frozen=True)
class BlockBatch:
    """A vectorized run of coherence blocks; row i is one ChannelDraw."""

    z: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def xi(self):
        return self.z + self.x + self.y

    @property
    def gains(self):
        xi = self.xi
        return xi.real ** 2 + xi.imag ** 2

    def __len__(self):
        return len(self.z)

    def block(self, i):
        return ChannelDraw(float(self.z[i]), complex(self.x[i]), complex(self.y[i]))


def codebook(q):
    """The 2^q phases l·π/2^(q-1), l = 0 .. 2^q - 1."""
    q = parse_quantizer_bits(q)
    if q is PERFECT:
        raise DomainError("a PERFECT quantizer has no finite codebook")
    return np.arange(2 ** q) * (TWO_PI / 2 ** q)


def quantize_phase(target, q):
    """
    Nearest codebook phase (circular distance) to `target`.

    Ties go to the lower codebook index. A PERFECT quantizer returns the
    target itself, wrapped into [0, 2π).
    """
    q = parse_quantizer_bits(q)
    target = np.asarray(target, dtype=float)
    if q is PERFECT:
        out = np.mod(target, TWO_PI)
    else:
        levels = 2 ** q
        step = TWO_PI / levels
        # position in steps, normalized into [0, levels)
        u = np.mod(target / step, levels)
        index = np.mod(np.ceil(u - 0.5), levels)
        # midway between the last codebook point and the first goes to index 0
        index = np.where(u == levels - 0.5, 0.0, index)
        out = index * step
    return float(out) if out.ndim == 0 else out


def wrap_phase(phase):
    """Wrap into [-π, π)."""
    return np.mod(np.asarray(phase) + math.pi, TWO_PI) - math.pi


def quantization_residual(target, q):
    """Applied minus ideal phase; lies in [-π/2^q, π/2^q] for finite q."""
    if parse_quantizer_bits(q) is PERFECT:
        residual = np.zeros_like(np.asarray(target, dtype=float))
    else:
        residual = wrap_phase(quantize_phase(target, q) - np.asarray(target, dtype=float))
    return float(residual) if np.ndim(residual) == 0 else residual


def _complex_gaussian(shape, rng):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)


def _rician(shape, kappa, rng):
    if kappa < 0:
        raise DomainError(f"K-factor must be >= 0, got {kappa!r}")
    los_phase = rng.uniform(0.0, TWO_PI, shape)
    scatter = _complex_gaussian(shape, rng)
    los = math.sqrt(kappa / (1.0 + kappa)) * np.exp(1j * los_phase)
    return los + math.sqrt(1.0 / (1.0 + kappa)) * scatter


def sample_rician_vector(n, kappa, rng):
    """n i.i.d. unit-power Rician entries with a uniform LoS phase per entry."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    return _rician(int(n), float(kappa), rng)


def _external_phases(unit, shape, mode, rng):
    if mode == "codebook" and unit.quantizer_bits is not PERFECT:
        points = codebook(unit.quantizer_bits)
        return points[rng.integers(0, len(points), shape)]
    return rng.uniform(0.0, TWO_PI, shape)


def draw_blocks(scenario, rng, size):
    """
    Draw `size` independent coherence blocks.

    Random-stream consumption order is fixed: direct link, reference RIS
    (inbound, outbound), then each external RIS (inbound, outbound, phases).
    """
    if size < 1:
        raise DomainError(f"size must be >= 1, got {size!r}")

    if scenario.direct is not None:
        h_d = _complex_gaussian(size, rng)
        z = math.sqrt(scenario.direct.path_gain) * np.abs(h_d)
        rotation = np.angle(h_d)
    else:
        z = np.zeros(size)
        rotation = np.zeros(size)

    x = np.zeros(size, dtype=complex)
    ref = scenario.reference_ris
    if ref is not None and ref.num_elements > 0:
        shape = (size, ref.num_elements)
        h1 = ref.inbound.sample(shape, rng)
        h2 = ref.outbound.sample(shape, rng)
        ideal = rotation[:, None] - np.angle(h1) - np.angle(h2)
        residual = quantization_residual(ideal, ref.quantizer_bits)
        cascade = np.abs(h1) * np.abs(h2) * np.exp(1j * residual)
        x = math.sqrt(ref.cascaded_gain) * cascade.sum(axis=1)

    y = np.zeros(size, dtype=complex)
    derotate = np.exp(-1j * rotation)
    for unit in scenario.external_ris:
        if unit.num_elements == 0:
            continue
        shape = (size, unit.num_elements)
        g1 = unit.inbound.sample(shape, rng)
        g2 = unit.outbound.sample(shape, rng)
        phi = _external_phases(unit, shape, scenario.external_phases, rng)
        reflected = (g2 * np.exp(1j * phi) * g1).sum(axis=1)
        y = y + math.sqrt(unit.cascaded_gain) * derotate * reflected

    return BlockBatch(z=z, x=x, y=y)


def draw_block(scenario, rng):
    return draw_blocks(scenario, rng, 1).block(0)


def instantaneous_snr(draw, p_linear):
    """γ = p·|Ξ|²; works for a ChannelDraw or a BlockBatch."""
    if not p_linear > 0:
        raise DomainError(f"p_linear must be > 0, got {p_linear!r}")
    xi = draw.xi
    gain = np.real(xi) ** 2 + np.imag(xi) ** 2
    snr = p_linear * gain
    return float(snr) if np.ndim(snr) == 0 else snr
