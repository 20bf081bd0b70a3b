"""
Closed-form performance of the reference operator under RIS interference.

Large RIS sums are treated as (non-circular) complex Gaussians; |Ξ|² is then
moment-matched to a Gamma law with shape m_N and scale γ̄ = 4σ². Outage is the
Gamma CDF, spectral efficiency its log-moment (evaluated by generalized
Gauss-Laguerre quadrature), and the N = 0 case has its own exponential law.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ris import specfun
from ris.channel import PERFECT, parse_quantizer_bits
from ris.errors import DomainError, QuadratureError

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
PSEUDO_VARIANCE_MODES = ("printed", "circular")

DEFAULT_QUAD_NODES = 64
DEFAULT_QUAD_MAX_NODES = 1024
DEFAULT_QUAD_RTOL = 1e-9


def _require(condition, message):
    if not condition:
        raise DomainError(message)


@dataclass(frozen=True)
class Moments:
    """Statistical parameters bridging the geometry to the closed forms."""

    mu_x: float
    v_x: float
    p_x: float
    v_d: float
    v_y: tuple
    n: int
    m_list: tuple
    sigma2: float
    gamma_bar: float
    m_n: float

    def __post_init__(self):
        _require(self.v_x >= 0.0, f"v_x must be >= 0, got {self.v_x!r}")
        _require(all(v >= 0.0 for v in self.v_y), "external variances must be >= 0")
        _require(len(self.v_y) == len(self.m_list), "v_y and m_list must align")
        _require(self.sigma2 > 0.0, "sigma2 must be > 0")
        _require(self.gamma_bar == 4.0 * self.sigma2, "gamma_bar must equal 4·sigma2")
        _require(self.m_n > 0.0, "m_n must be > 0")

    @property
    def external_variance(self):
        return math.fsum(m * v for m, v in zip(self.m_list, self.v_y))


@dataclass(frozen=True)
class CdfCurve:
    grid: tuple
    values: tuple

    def __post_init__(self):
        grid = tuple(float(g) for g in self.grid)
        values = tuple(float(v) for v in self.values)
        _require(len(grid) == len(values), "grid and values must have the same length")
        _require(all(g >= 0.0 for g in grid), "grid must be nonnegative")
        _require(all(b >= a for a, b in zip(grid, grid[1:])), "grid must be sorted")
        _require(all(0.0 <= v <= 1.0 for v in values), "CDF values must lie in [0, 1]")
        _require(
            all(b >= a - 1e-12 for a, b in zip(values, values[1:])),
            "CDF values must be nondecreasing",
        )
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class NoRisSpectralEfficiency:
    printed: float
    reduced: float
    relative_deviation: float


def quantizer_moments(q):
    """(ϑ1, ϑ2) = (E[e^{jθ}], E[e^{2jθ}]) for the uniform q-bit residual."""
    q = parse_quantizer_bits(q)
    if q is PERFECT:
        return 1.0, 1.0
    return specfun.sinc(math.ldexp(math.pi, -q)), specfun.sinc(math.ldexp(math.pi, 1 - q))


def aggregate_external_variance(scenario):
    """Σ_u M_u·V_{Y,u}; stands in for M·V_Y for any number of external RISs."""
    return math.fsum(unit.num_elements * unit.cascaded_gain for unit in scenario.external_ris)


def derive_moments(scenario, *, pseudo_variance="printed"):
    """
    Moments of Ξ = Z + X + Y for `scenario`.

    pseudo_variance="printed" puts the whole external term M·V_Y into the real
    part of Ξ; "circular" splits it evenly between real and imaginary parts.
    """
    _require(
        pseudo_variance in PSEUDO_VARIANCE_MODES,
        f"pseudo_variance must be one of {PSEUDO_VARIANCE_MODES}, got {pseudo_variance!r}",
    )
    ref = scenario.reference_ris
    if ref is not None:
        theta1, theta2 = quantizer_moments(ref.quantizer_bits)
        gain = ref.cascaded_gain
        amplitude = theta1 * ref.inbound.amplitude_mean() * ref.outbound.amplitude_mean()
        coherent = amplitude * amplitude
        mu_x = math.sqrt(gain) * amplitude
        v_x = gain * (1.0 - coherent)
        p_x = gain * (theta2 - coherent)
        n = ref.num_elements
    else:
        mu_x = v_x = p_x = 0.0
        n = 0

    v_d = scenario.direct_gain
    v_y = tuple(unit.cascaded_gain for unit in scenario.external_ris)
    m_list = tuple(unit.num_elements for unit in scenario.external_ris)
    external = aggregate_external_variance(scenario)

    if pseudo_variance == "printed":
        sigma2 = 0.5 * (n * p_x + n * v_x + 2.0 * external)
    else:
        sigma2 = 0.5 * (n * p_x + n * v_x + external)
    if v_d == 0.0 and sigma2 <= 0.0:
        raise DomainError("scenario has no fading source: every gain is zero")
    if sigma2 <= 0.0:
        raise DomainError(
            "scenario has no random RIS term (sigma2 = 0); "
            "use the no-RIS closed forms for a direct link alone"
        )

    gamma_bar = 4.0 * sigma2
    numerator = (n * mu_x) ** 2 + v_d + math.sqrt(math.pi * v_d) * n * mu_x
    if numerator <= 0.0:
        raise DomainError(
            "scenario has no coherent term (N·mu_x = 0 and no direct link); the Gamma shape is 0"
        )
    return Moments(
        mu_x=mu_x,
        v_x=v_x,
        p_x=p_x,
        v_d=v_d,
        v_y=v_y,
        n=n,
        m_list=m_list,
        sigma2=sigma2,
        gamma_bar=gamma_bar,
        m_n=numerator / gamma_bar,
    )


def nominal_diversity_order(m):
    """N²/ΣM_u, the large-array diversity order; the exact exponent is m.m_n."""
    total = sum(m.m_list)
    if total == 0:
        return math.inf
    return m.n ** 2 / total


def snr_cdf(x, p_linear, m):
    _require(x >= 0.0, f"x must be >= 0, got {x!r}")
    _require(p_linear > 0.0, f"p_linear must be > 0, got {p_linear!r}")
    return specfun.lower_gamma_regularized(m.m_n, x / (p_linear * m.gamma_bar))


def snr_cdf_curve(grid, p_linear, m):
    return CdfCurve(tuple(grid), tuple(snr_cdf(x, p_linear, m) for x in grid))


def outage_probability(gamma_th, p_linear, m):
    return snr_cdf(gamma_th, p_linear, m)


def outage_asymptotic(gamma_th, p_linear, m):
    """(γ_th/(pγ̄))^{m_N} / Γ(m_N + 1), evaluated in the log domain."""
    _require(gamma_th > 0.0, f"gamma_th must be > 0, got {gamma_th!r}")
    _require(p_linear > 0.0, f"p_linear must be > 0, got {p_linear!r}")
    log_value = m.m_n * math.log(gamma_th / (p_linear * m.gamma_bar)) - specfun.ln_gamma(m.m_n + 1.0)
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


@lru_cache(maxsize=256)
def gamma_quadrature(num_nodes, shape):
    """
    Gauss rule for the Gamma(shape, 1) probability measure.

    Golub-Welsch on the generalized Laguerre recursion with α = shape - 1;
    the weights are normalized to sum to one, so Γ(shape) never appears.
    """
    _require(num_nodes >= 1, f"num_nodes must be >= 1, got {num_nodes!r}")
    _require(shape > 0.0, f"shape must be > 0, got {shape!r}")
    alpha = shape - 1.0
    k = np.arange(num_nodes, dtype=float)
    diagonal = 2.0 * k + alpha + 1.0
    off_diagonal = np.sqrt(k[1:] * (k[1:] + alpha))
    nodes, vectors = eigh_tridiagonal(diagonal, off_diagonal)
    weights = vectors[0] ** 2
    weights /= weights.sum()
    nodes = np.maximum(nodes, 0.0)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def spectral_efficiency(
    p_linear,
    m,
    *,
    nodes=DEFAULT_QUAD_NODES,
    max_nodes=DEFAULT_QUAD_MAX_NODES,
    rtol=DEFAULT_QUAD_RTOL,
):
    """
    E[log2(1 + γ)] under the Gamma(m_N, pγ̄) SNR law.

    With t = x/(pγ̄) the integral is E[ln(1 + pγ̄·T)] for T ~ Gamma(m_N, 1);
    the node count doubles from `nodes` until two successive estimates agree
    to `rtol`.
    """
    _require(p_linear > 0.0, f"p_linear must be > 0, got {p_linear!r}")
    scale = p_linear * m.gamma_bar
    count = nodes
    previous = None
    history = []
    while count <= max_nodes:
        t, w = gamma_quadrature(count, m.m_n)
        estimate = float(np.dot(w, np.log1p(scale * t))) / LN2
        history.append((count, estimate))
        logger.debug("SE quadrature: %d nodes -> %.17g", count, estimate)
        if previous is not None and abs(estimate - previous) <= rtol * abs(estimate):
            if count * 2 > max_nodes:
                logger.warning("SE quadrature settled only at the node cap (%d nodes, m_N = %.6g)", count, m.m_n)
            return estimate
        previous = estimate
        count *= 2
    raise QuadratureError(
        "spectral efficiency quadrature did not converge",
        diagnostics={
            "estimates": history[-2:],
            "m_n": m.m_n,
            "p_gamma_bar": scale,
            "max_nodes": max_nodes,
            "rtol": rtol,
        },
    )


def spectral_efficiency_asymptotic(p_linear, m):
    """The high-SNR form ln(pγ̄)·ψ(pγ̄)/ln 2, evaluated exactly as printed."""
    scale = p_linear * m.gamma_bar
    _require(scale > 0.0, f"p·gamma_bar must be > 0, got {scale!r}")
    return math.log(scale) * specfun.digamma(scale) / LN2


def asymptotic_se_deviation(p_linear, m, **quadrature):
    """Relative deviation of the printed high-SNR form from the quadrature value."""
    exact = spectral_efficiency(p_linear, m, **quadrature)
    approx = spectral_efficiency_asymptotic(p_linear, m)
    return (approx - exact) / exact


def no_ris_conditional_cdf(x, z, p_linear, m_total_vy):
    """
    SNR CDF without a reference RIS, given the direct-path amplitude z.

    Conditioned on z, Ξ = z + Y with Y ~ CN(0, M·V_Y), so |Ξ| is Rician and
    F(x | z) = 1 - Q1(√(2z²/(M·V_Y)), √(2x/(p·M·V_Y))). Averaging over the
    Rayleigh density of z gives `no_ris_cdf`.
    """
    _require(x >= 0.0, f"x must be >= 0, got {x!r}")
    _require(z >= 0.0, f"z must be >= 0, got {z!r}")
    _require(p_linear > 0.0, f"p_linear must be > 0, got {p_linear!r}")
    _require(m_total_vy > 0.0, f"m_total_vy must be > 0, got {m_total_vy!r}")
    a = math.sqrt(2.0 * z * z / m_total_vy)
    b = math.sqrt(2.0 * x / (p_linear * m_total_vy))
    return min(1.0, max(0.0, 1.0 - specfun.marcum_q1(a, b)))


def no_ris_cdf(x, p_linear, m_total_vy, v_d):
    """
    SNR CDF without a reference RIS (direct link plus external RISs).

    Evaluated term by term as printed; algebraically it collapses to
    1 - exp(-x/(p(V_d + M·V_Y))).
    """
    _require(x >= 0.0, f"x must be >= 0, got {x!r}")
    _require(p_linear > 0.0, f"p_linear must be > 0, got {p_linear!r}")
    _require(m_total_vy >= 0.0 and v_d >= 0.0, "variances must be >= 0")
    _require(m_total_vy > 0.0 or v_d > 0.0, "no_ris_cdf needs V_d > 0 or M·V_Y > 0")
    s, v, p = m_total_vy, v_d, p_linear
    if s == 0.0:
        return -math.expm1(-x / (p * v))
    if v == 0.0:
        return -math.expm1(-x / (p * s))
    both = 1.0 / s + 1.0 / v
    value = -math.expm1(-x / (p * s)) - math.exp(-x / (p * s * v * both)) * -math.expm1(
        -x / (p * s ** 2 * both)
    )
    return min(1.0, max(0.0, value))


def no_ris_cdf_curve(grid, p_linear, m_total_vy, v_d):
    return CdfCurve(tuple(grid), tuple(no_ris_cdf(x, p_linear, m_total_vy, v_d) for x in grid))


def exponential_spectral_efficiency(mean_snr):
    """E[log2(1 + γ)] for exponentially distributed γ: e^{1/s}Γ(0, 1/s)/ln 2."""
    _require(mean_snr > 0.0, f"mean_snr must be > 0, got {mean_snr!r}")
    return specfun.exp_integral_gamma0_scaled(1.0 / mean_snr) / LN2


def no_ris_spectral_efficiency(p_linear, m_total_vy, v_d, *, v_y=None):
    """
    Spectral efficiency without a reference RIS, in both forms.

    `printed` follows the published expression term by term and needs the
    per-element variance `v_y` (M = m_total_vy / v_y); when omitted the
    aggregate is treated as a single element. Its middle term e^{a+b}Γ(0, c)
    is evaluated in the log domain; when it overflows the printed form
    diverges and `printed` (with the deviation) is None. `reduced` integrates
    the collapsed exponential CDF and is the value to trust.
    """
    _require(p_linear > 0.0 and m_total_vy > 0.0 and v_d > 0.0, "inputs must be > 0")
    vy = m_total_vy if v_y is None else float(v_y)
    _require(vy > 0.0, f"v_y must be > 0, got {vy!r}")
    p, v = p_linear, v_d
    big_m = m_total_vy / vy
    s = m_total_vy

    a = 1.0 / (p * s + p * v * vy ** 2)
    c = (v + s) / (p * big_m * vy ** 2 * (big_m + v * vy))
    d = 1.0 / (p * s)
    # b - c over a common denominator; the v·s² terms cancel exactly
    b_minus_c = ((big_m - 1.0) * v * v * vy ** 3 - s ** 3 - s * v * vy ** 3) / (
        p * (s * s + v * vy ** 3) * (s * s + big_m * v * vy ** 3)
    )
    scaled = specfun.exp_integral_gamma0_scaled
    log_middle = a + b_minus_c + math.log(scaled(c))

    reduced = exponential_spectral_efficiency(p * (v + m_total_vy))
    printed = deviation = None
    try:
        middle = math.exp(log_middle)
    except OverflowError:
        logger.debug("printed no-RIS spectral efficiency diverges (log middle term %.6g)", log_middle)
    else:
        printed = (scaled(a) - middle + scaled(d)) / LN2
        deviation = (printed - reduced) / reduced
        logger.debug("printed no-RIS spectral efficiency deviates from the reduced form by %.3g", deviation)
    return NoRisSpectralEfficiency(printed=printed, reduced=reduced, relative_deviation=deviation)
