"""Discrete-time Poisson channel law, gamma inputs and the decoder distance.

Everything is in nats and natural logs.  Random draws take an explicit
``numpy.random.Generator`` (see :func:`poisson_gmi.montecarlo.rng_stream`).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

# gamma draws below this fraction of eps_s are redrawn (keeps y**2/x finite)
UNDERFLOW_CLAMP = 1e-300
TAIL_MASS = 1e-12


@dataclass(frozen=True)
class EnergyBudget:
    eps_s: float

    def __post_init__(self):
        if not (self.eps_s > 0 and math.isfinite(self.eps_s)):
            raise ValueError(f"eps_s must be positive and finite, got {self.eps_s}")


@dataclass(frozen=True)
class GammaInput:
    """Gamma input law with shape `nu` and mean `eps_s`."""

    eps_s: float
    nu: float = 0.5

    def __post_init__(self):
        if not self.eps_s > 0:
            raise ValueError(f"eps_s must be positive, got {self.eps_s}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")

    @property
    def scale(self):
        return self.eps_s / self.nu


@dataclass(frozen=True)
class DecoderConfig:
    """Metric coefficient `a`, tilt `s` and exponential weighting rate."""

    a: float
    s: float
    weight_rate: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not self.s >= 0:
            raise ValueError(f"s must be nonnegative, got {self.s}")
        if not self.weight_rate >= 0:
            raise ValueError(f"weight_rate must be nonnegative, got {self.weight_rate}")


@dataclass(frozen=True)
class ChannelSample:
    x: float
    y: int

    def __post_init__(self):
        if not self.x >= 0:
            raise ValueError("x must be nonnegative")
        if int(self.y) != self.y or self.y < 0:
            raise ValueError("y must be a nonnegative integer")


_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirling_error(n):
    """lgamma(n + 1) - (n + 1/2) log n + n - log sqrt(2 pi), for n >= 1."""
    n = np.asarray(n, dtype=np.float64)
    out = np.empty_like(n)
    small = n <= 15
    if np.any(small):
        ns = n[small]
        out[small] = gammaln(ns + 1.0) - (ns + 0.5) * np.log(ns) + ns - _LOG_SQRT_2PI
    big = ~small
    if np.any(big):
        nb = n[big]
        nn = nb * nb
        out[big] = (1.0 / 12 - (1.0 / 360 - (1.0 / 1260 - (1.0 / 1680
                    - 1.0 / (1188 * nn)) / nn) / nn) / nn) / nb
    return out


def _deviance(y, x):
    """y log(y/x) + x - y, accurate when y is close to x."""
    out = np.empty_like(x)
    close = np.abs(y - x) < 0.1 * (y + x)
    if np.any(close):
        yc, xc = y[close], x[close]
        v = (yc - xc) / (yc + xc)
        acc = (yc - xc) * v
        term = 2.0 * yc * v
        v2 = v * v
        for j in range(1, 200):
            term = term * v2
            new = acc + term / (2 * j + 1)
            if np.all(new == acc):
                break
            acc = new
        out[close] = acc
    far = ~close
    if np.any(far):
        yf, xf = y[far], x[far]
        out[far] = yf * np.log(yf / xf) + xf - yf
    return out


def poisson_log_pmf(y, x):
    """log W(y|x); -inf where the probability is zero.

    Uses Loader's saddle-point form, which keeps full relative precision
    when y and x are large.
    """
    y, x = np.broadcast_arrays(np.asarray(y, dtype=np.float64),
                               np.asarray(x, dtype=np.float64))
    out = np.empty(y.shape)
    zero_x = x == 0
    out[zero_x] = np.where(y[zero_x] == 0, 0.0, -np.inf)
    y0 = (y == 0) & ~zero_x
    out[y0] = -x[y0]
    rest = ~zero_x & ~y0
    if np.any(rest):
        yr, xr = y[rest], x[rest]
        out[rest] = (-_stirling_error(yr) - _deviance(yr, xr)
                     - _LOG_SQRT_2PI - 0.5 * np.log(yr))
    return out[()] if out.ndim == 0 else out


def poisson_pmf(y, x):
    """W(y|x) = exp(-x) x**y / y!, evaluated in the log domain."""
    return np.exp(poisson_log_pmf(y, x))


def poisson_truncation(x):
    """Smallest cutoff with Poisson(x) tail mass below 1e-12.

    Uses the Chernoff bound P(Y >= k) <= exp(-x) (e x / k)**k, and never
    returns less than x + 12 sqrt(x) + 20.
    """
    x = float(x)
    floor = math.ceil(x + 12.0 * math.sqrt(x) + 20.0)
    if x == 0:
        return floor
    log_tol = math.log(TAIL_MASS)
    k = max(int(math.floor(x)) + 1, 1)
    # log bound is decreasing in k for k > x
    while -x + k * (1.0 + math.log(x) - math.log(k)) >= log_tol:
        k += 1
    return max(k, floor)


def gamma_density(x, inp):
    """Density of the gamma input with shape ``inp.nu`` and mean ``inp.eps_s``.

    For nu = 1/2 this is (2 pi eps_s x)**-1/2 exp(-x / (2 eps_s)).
    Rejects x <= 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("gamma_density is defined for x > 0 only")
    nu, theta = inp.nu, inp.scale
    logp = (nu - 1.0) * np.log(x) - x / theta - gammaln(nu) - nu * math.log(theta)
    out = np.exp(logp)
    return out[()] if out.ndim == 0 else out


def sample_gamma_input(inp, rng, size=None):
    """Draw from the gamma(1/2) input as eps_s * Z**2 with Z standard normal."""
    if inp.nu != 0.5:
        raise ValueError("only nu = 1/2 has an exact squared-normal sampler")
    x = inp.eps_s * np.square(rng.standard_normal(size))
    floor = UNDERFLOW_CLAMP * inp.eps_s
    if np.ndim(x) == 0:
        while x < floor:
            x = inp.eps_s * rng.standard_normal() ** 2
        return float(x)
    bad = x < floor
    while bad.any():
        x[bad] = inp.eps_s * np.square(rng.standard_normal(int(bad.sum())))
        bad = x < floor
    return x


def sample_poisson(x, rng):
    """Exact Poisson draw(s) with mean `x`; x = 0 always yields 0."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("Poisson mean must be finite")
    if np.any(x < 0):
        raise ValueError("Poisson mean must be nonnegative")
    y = rng.poisson(x)
    return int(y) if np.ndim(y) == 0 else y


def decoder_distance(x, y, a, reduced=False):
    """Per-symbol distance (y - sqrt(a) x)**2 / x.

    The reduced form y**2/x + a x drops the x-free term -2 y sqrt(a), which
    leaves every argmin over candidate inputs unchanged.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("decoder distance is singular at x <= 0")
    y = np.asarray(y, dtype=np.float64)
    if reduced:
        out = y * y / x + a * x
    else:
        out = (y - math.sqrt(a) * x) ** 2 / x
    return out[()] if out.ndim == 0 else out


def metric_value(x, y, config):
    """s log q(x, y) = -s (a x + y**2 / x)."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0):
        raise ValueError("metric is singular at x <= 0")
    y = np.asarray(y, dtype=np.float64)
    out = -config.s * (config.a * x + y * y / x)
    return out[()] if out.ndim == 0 else out
