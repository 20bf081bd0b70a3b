"""
Special-function kernels behind the closed-form outage and capacity formulas.

The incomplete gamma split (series below a + 1, Lentz continued fraction
above) follows "Numerical Recipes in C", 2nd edition, chapter 6. Everything
here is a pure function of its arguments.
"""

import math
import sys

import numpy as np
from scipy.special import i0e, i1e, ive

from ris.errors import ConvergenceError, DomainError

EULER_GAMMA = 0.5772156649015329
FPMIN = sys.float_info.min / sys.float_info.epsilon
EPS = 1.0e-15

_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# B_2k / (2k) for the digamma asymptotic series
_DIGAMMA_TAIL = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def _require(condition, message):
    if not condition:
        raise DomainError(message)


def _max_iterations(a):
    # terms needed near x ~ a grow like sqrt(a)
    return 500 + int(40.0 * math.sqrt(a))


def ln_gamma(x):
    """ln Γ(x) for x > 0 (Lanczos, g = 7)."""
    x = float(x)
    _require(x > 0.0 and math.isfinite(x), f"ln_gamma needs x > 0, got {x!r}")
    if x < 0.5:
        return ln_gamma(x + 1.0) - math.log(x)
    x -= 1.0
    acc = _LANCZOS_COEFFS[0]
    for i, coeff in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += coeff / (x + i)
    t = x + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (x + 0.5) * math.log(t) - t + math.log(acc)


def _gamma_prefactor(a, x):
    return math.exp(-x + a * math.log(x) - ln_gamma(a))


def _lower_series(a, x):
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_max_iterations(a)):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            return total * _gamma_prefactor(a, x)
    raise ConvergenceError(f"incomplete gamma series did not converge for a={a!r}, x={x!r}")


def _upper_continued_fraction(a, x):
    b = x + 1.0 - a
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _max_iterations(a) + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return _gamma_prefactor(a, x) * h
    raise ConvergenceError(
        f"incomplete gamma continued fraction did not converge for a={a!r}, x={x!r}"
    )


def regularized_gamma_pair(a, x):
    """Return (P(a, x), Q(a, x)), computing whichever side is accurate directly."""
    a = float(a)
    x = float(x)
    _require(a > 0.0, f"incomplete gamma needs a > 0, got {a!r}")
    _require(x >= 0.0, f"incomplete gamma needs x >= 0, got {x!r}")
    if x == 0.0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    if x < a + 1.0:
        p = min(1.0, _lower_series(a, x))
        return p, 1.0 - p
    q = min(1.0, _upper_continued_fraction(a, x))
    return 1.0 - q, q


def upper_gamma_regularized(a, x):
    """Q(a, x) = Γ(a, x) / Γ(a)."""
    return regularized_gamma_pair(a, x)[1]


def lower_gamma_regularized(a, x):
    """P(a, x) = 1 - Q(a, x), accurate in the lower tail."""
    return regularized_gamma_pair(a, x)[0]


def digamma(x):
    x = float(x)
    _require(x > 0.0 and math.isfinite(x), f"digamma needs x > 0, got {x!r}")
    shift = 0.0
    while x < 10.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = 0.0
    power = inv2
    for coeff in _DIGAMMA_TAIL:
        tail += coeff * power
        power *= inv2
    return shift + math.log(x) - 0.5 / x - tail


def _e1_series(x):
    total = 0.0
    term = 1.0
    for k in range(1, 200):
        term *= -x / k
        piece = term / k
        total += piece
        if abs(piece) < abs(total) * EPS:
            return -EULER_GAMMA - math.log(x) - total
    raise ConvergenceError(f"E1 series did not converge for x={x!r}")


def _e1_scaled_continued_fraction(x):
    # e^x E1(x) by Lentz's method
    b = x + 1.0
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ConvergenceError(f"E1 continued fraction did not converge for x={x!r}")


def exp_integral_gamma0(x):
    """Γ(0, x) = E1(x) for x > 0."""
    x = float(x)
    _require(x > 0.0, f"Γ(0, x) diverges at x <= 0, got {x!r}")
    if x <= 1.0:
        return _e1_series(x)
    if x > 745.0:
        return 0.0
    return math.exp(-x) * _e1_scaled_continued_fraction(x)


def exp_integral_gamma0_scaled(x):
    """e^x · Γ(0, x), finite for every x > 0."""
    x = float(x)
    _require(x > 0.0, f"Γ(0, x) diverges at x <= 0, got {x!r}")
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)
    return _e1_scaled_continued_fraction(x)


def rician_mean_factor(kappa):
    """
    E[|h|] of a unit-power Rician variate with K-factor kappa.

    Uses 1F1(-1/2, 1; -κ) = e^{-κ/2}[(1 + κ) I0(κ/2) + κ I1(κ/2)], with the
    exponential already folded into the scaled Bessel functions.
    """
    kappa = float(kappa)
    _require(kappa >= 0.0, f"K-factor must be >= 0, got {kappa!r}")
    half = 0.5 * kappa
    hyper = (1.0 + kappa) * i0e(half) + kappa * i1e(half)
    return float(math.sqrt(math.pi / (4.0 * (kappa + 1.0))) * hyper)


def sinc(x):
    """Unnormalized sinc: sin(x) / x."""
    x = float(x)
    if x == 0.0:
        return 1.0
    return math.sin(x) / x


def marcum_q1(a, b, *, block=64, max_terms=100_000, tol=1.0e-14):
    """
    First-order Marcum Q via the Bessel series.

    For a < b, Q1 = e^{-(a²+b²)/2} Σ_{k≥0} (a/b)^k I_k(ab); otherwise the
    complement 1 - e^{-(a²+b²)/2} Σ_{k≥1} (b/a)^k I_k(ab). Terms decrease
    monotonically, so summation stops once a term drops below tol · sum.
    """
    a = float(a)
    b = float(b)
    _require(a >= 0.0 and b >= 0.0, f"marcum_q1 needs a, b >= 0, got ({a!r}, {b!r})")
    if b == 0.0:
        return 1.0
    if a == 0.0:
        return math.exp(-0.5 * b * b)

    if a < b:
        ratio, start, complement = a / b, 0, False
    else:
        ratio, start, complement = b / a, 1, True
    arg = a * b
    envelope = math.exp(-0.5 * (a - b) ** 2)
    if envelope == 0.0:
        return 1.0 if complement else 0.0

    total = 0.0
    log_ratio = math.log(ratio)
    k0 = start
    while k0 < max_terms:
        ks = np.arange(k0, k0 + block, dtype=float)
        terms = envelope * np.exp(ks * log_ratio) * ive(ks, arg)
        total += float(np.sum(terms))
        last = float(terms[-1])
        if last <= tol * total or last == 0.0:
            break
        k0 += block
    else:
        raise ConvergenceError(f"Marcum Q series did not converge for a={a!r}, b={b!r}")

    value = 1.0 - total if complement else total
    return min(1.0, max(0.0, value))
