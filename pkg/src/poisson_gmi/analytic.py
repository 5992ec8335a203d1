"""Closed-form rates for the discrete-time Poisson channel.

Covers the GMI of the metric q(x, y) = exp(-a x - y**2 / x) under a
gamma(1/2) input, its linear-term cancellation point, the weighted (LM)
variant, the Lapidoth-Moser lower bound, and the exact mutual information
of gamma inputs together with a brute-force oracle for it.  All values are
in nats.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .channel import GammaInput
from .quadrature import (
    DEFAULT_MAX_SUBDIVISIONS,
    QuadratureError,
    integrate_adaptive,
    mi_u_integral,
)

BOUND_IDS = ("theorem-rate", "gmi", "lm", "lapidoth-moser", "exact-mi")


@dataclass(frozen=True)
class GmiEvaluation:
    eps_s: float
    a: float
    s: float
    value: float


@dataclass(frozen=True)
class BoundPoint:
    eps_s: float
    bound_id: str
    value: float


@dataclass(frozen=True)
class GmiScan:
    s_best: float
    value_best: float
    s_hat: float
    value_at_s_hat: float


def _check_positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")


# --------------------------------------------------------------------------
# GMI of the modified minimum-distance metric

def gmi_terms(eps_s, a, s):
    """The three summands of the GMI closed form, as a tuple."""
    lin = -s * ((a + 1.0) * eps_s + 1.0)
    root = np.sqrt(2.0 * eps_s * s * (1.0 + 2.0 * a * eps_s * s))
    log_term = 0.5 * np.log1p(2.0 * a * eps_s * s)
    return lin, root, log_term


def gmi_closed_form(eps_s, a, s):
    """GMI of q(x,y) = exp(-a x - y^2/x) at tilt s, gamma(1/2) input.

    -s((a+1) eps_s + 1) + sqrt(2 eps_s s (1 + 2 a eps_s s)) + log(1 + 2 a eps_s s)/2
    """
    lin, root, log_term = gmi_terms(eps_s, a, s)
    return lin + root + log_term


def gmi_evaluation(eps_s, a=None, s=None):
    """GMI at (a, s), defaulting to a = 1 + 1/eps_s and s = s_hat."""
    _check_positive(eps_s=eps_s)
    if a is None:
        a = 1.0 + 1.0 / eps_s
    if s is None:
        s = s_hat(eps_s, a)
    if not a > 0 or not s >= 0:
        raise ValueError("need a > 0 and s >= 0")
    return GmiEvaluation(eps_s, a, s, float(gmi_closed_form(eps_s, a, s)))


def s_hat(eps_s, a):
    """Tilt at which the two s-linear summands of the GMI cancel."""
    return 2.0 * eps_s / ((a - 1.0) ** 2 * eps_s ** 2 + 2.0 * eps_s * (a + 1.0) + 1.0)


def theorem_rate(eps_s):
    """The achievable rate log(1 + eps_s) / 2."""
    return 0.5 * np.log1p(eps_s)


def lapidoth_moser_bound(eps_s):
    """log((1 + 1/eps)^(1+eps) sqrt(eps)) - (1 + sqrt(pi / (24 eps))).

    Goes to -inf as eps_s -> 0.
    """
    eps_s = np.asarray(eps_s, dtype=np.float64)
    out = ((1.0 + eps_s) * np.log1p(1.0 / eps_s) + 0.5 * np.log(eps_s)
           - 1.0 - np.sqrt(np.pi / (24.0 * eps_s)))
    return out[()] if out.ndim == 0 else out


def scan_gmi(eps_s, a=None, s_values=None):
    """Grid scan of the GMI over s, reported next to the value at s_hat.

    No claim is made that s_hat maximizes the GMI; this is how to look.
    """
    if a is None:
        a = 1.0 + 1.0 / eps_s
    sh = s_hat(eps_s, a)
    if s_values is None:
        s_values = np.geomspace(sh / 10.0, 10.0 * sh, 2001)
    s_values = np.asarray(s_values, dtype=np.float64)
    vals = gmi_closed_form(eps_s, a, s_values)
    k = int(np.argmax(vals))
    return GmiScan(float(s_values[k]), float(vals[k]), float(sh),
                   float(gmi_closed_form(eps_s, a, sh)))


def scan_gmi_grid(eps_s, a_values, s_values):
    """GMI on the outer product of `a_values` and `s_values` (rows are a)."""
    a = np.asarray(a_values, dtype=np.float64)[:, None]
    s = np.asarray(s_values, dtype=np.float64)[None, :]
    return gmi_closed_form(eps_s, a, s)


# --------------------------------------------------------------------------
# denominator and the weighted (LM) variant

def weighted_metric_denominator(y, eps_s, config):
    """E_X[exp(-w X) q(X, y)^s] for the gamma(1/2) input, in closed form.

    With c = 1 + 2 eps_s (a s + w) this is exp(-y sqrt(2 s c / eps_s)) / sqrt(c).
    The weight exp(-w x) is left unnormalized; the LM ratio is invariant to
    scaling it.
    """
    c = 1.0 + 2.0 * eps_s * (config.a * config.s + config.weight_rate)
    return np.exp(-np.asarray(y, dtype=np.float64)
                  * np.sqrt(2.0 * config.s * c / eps_s)) / np.sqrt(c)


def lm_terms(eps_s, s, a=1.0):
    """Summands of the LM rate with weighting exp(-(s/eps_s) x).

    Taking expectations with the Poisson moments gives
    -s((a+1) eps_s + 2) + sqrt(2 eps_s s c) + log(c)/2, c = 1 + 2 s (a eps_s + 1).
    """
    c = 1.0 + 2.0 * s * (a * eps_s + 1.0)
    lin = -s * ((a + 1.0) * eps_s + 2.0)
    root = np.sqrt(2.0 * eps_s * s * c)
    return lin, root, 0.5 * np.log(c)


def lm_closed_form(eps_s, s, a=1.0):
    lin, root, log_term = lm_terms(eps_s, s, a)
    return lin + root + log_term


def lm_cancellation_s(eps_s, a=1.0, tol=1e-12, max_iter=400):
    """Positive root of the linear-plus-root part of the LM rate, by bisection.

    The sum is positive just above s = 0 and negative for large s; the
    bracket is grown by doubling and then bisected until its width is below
    ``tol * max(1, s)`` or stops shrinking in floating point.
    """
    _check_positive(eps_s=eps_s)

    def g(s):
        lin, root, _ = lm_terms(eps_s, s, a)
        return lin + root

    lo, hi = 1e-300, 1.0
    if not g(lo) > 0:
        raise ArithmeticError("no sign change at the lower bracket")
    for _ in range(2000):
        if g(hi) < 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ArithmeticError("failed to bracket the LM cancellation point")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= tol * max(1.0, lo) * 1e-3:
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    else:
        raise ArithmeticError("bisection for the LM cancellation point did not converge")
    return 0.5 * (lo + hi)


def lm_rate_check(eps_s):
    """LM rate with a = 1 at its cancellation tilt; equals log(1 + eps_s)/2."""
    if eps_s == 0:
        return 0.0
    return float(lm_closed_form(eps_s, lm_cancellation_s(eps_s)))


# --------------------------------------------------------------------------
# digamma

# B_{2k} / (2k) for k = 1..7
_ASYMPTOTIC = (1.0 / 12, -1.0 / 120, 1.0 / 252, -1.0 / 240, 1.0 / 132,
               -691.0 / 32760, 1.0 / 12)


def digamma(z):
    """Euler's digamma for z > 0: upward recurrence to z >= 10, then the
    asymptotic series log z - 1/(2z) - sum B_2k / (2k z^2k)."""
    z = float(z)
    if not z > 0:
        raise ValueError("digamma is implemented for z > 0 only")
    shift = 0.0
    while z < 10.0:
        shift += 1.0 / z
        z += 1.0
    inv2 = 1.0 / (z * z)
    series = 0.0
    for c in reversed(_ASYMPTOTIC):
        series = series * inv2 + c
    return math.log(z) - 0.5 / z - series * inv2 - shift


# --------------------------------------------------------------------------
# exact mutual information for gamma inputs

def _check_nu(nu):
    if not 0 < nu <= 4:
        raise ValueError(f"nu must lie in (0, 4], got {nu}")


def exact_mi_gamma(eps_s, nu=0.5, tol=1e-9, full_output=False):
    """I(X;Y) for a gamma(nu) input of mean eps_s, via the u-integral form

        int_0^1 (...) du / log u + (eps + nu) log((eps + nu)/nu) + eps (psi(nu+1) - 1)

    Raises :class:`QuadratureError` if the integral does not converge.
    With ``full_output`` returns ``(value, IntegrationResult)``.
    """
    _check_nu(nu)
    if not eps_s >= 0:
        raise ValueError("eps_s must be nonnegative")
    if tol < 1e-10:
        raise ValueError("tol below 1e-10 is not supported")
    if eps_s == 0:
        return (0.0, None) if full_output else 0.0
    res = mi_u_integral(eps_s, nu, rel_tol=tol, abs_tol=1e-14)
    res.require("mutual-information u-integral")
    value = (res.value + (eps_s + nu) * math.log1p(eps_s / nu)
             + eps_s * (digamma(nu + 1.0) - 1.0))
    return (value, res) if full_output else value


def output_log_marginal(y, eps_s, nu=0.5):
    y = np.asarray(y, dtype=np.float64)
    return (gammaln(y + nu) - gammaln(y + 1.0) - gammaln(nu)
            + nu * math.log(nu / (nu + eps_s)) + y * math.log(eps_s / (nu + eps_s)))


def output_marginal(y, eps_s, nu=0.5):
    """P_Y(y) under the gamma(nu) input: a negative binomial law,

    Gamma(y+nu) / (y! Gamma(nu)) (nu/(nu+eps))^nu (eps/(nu+eps))^y.
    """
    _check_positive(eps_s=eps_s, nu=nu)
    out = np.exp(output_log_marginal(y, eps_s, nu))
    return out[()] if np.ndim(out) == 0 else out


def marginal_truncation(eps_s, nu=0.5, tail=1e-12):
    """Smallest y_max whose negative-binomial tail beyond it is below `tail`.

    Uses the geometric bound P(Y > y) <= P(y) q / (1 - q), q the largest
    successive-probability ratio past y.
    """
    r = eps_s / (nu + eps_s)
    y = max(int(math.ceil(eps_s)), 1)
    while True:
        q = r * max((y + nu) / (y + 1.0), 1.0)
        if q < 1 and output_marginal(y, eps_s, nu) * q / (1.0 - q) < tail:
            return y
        y += 1


def output_entropy(eps_s, nu=0.5):
    """Entropy of the output law, summed up to the truncation point."""
    ys = np.arange(marginal_truncation(eps_s, nu, 1e-15) + 1)
    lp = output_log_marginal(ys, eps_s, nu)
    return -math.fsum(np.exp(lp) * lp)


def _peak_points(y, eps_s, nu):
    """Breakpoints around the peak of x^(y+nu-1) exp(-x (1 + nu/eps))."""
    rate = 1.0 + nu / eps_s
    mode = max(y + nu - 1.0, 0.0) / rate
    width = math.sqrt(y + nu) / rate
    pts = [mode + k * width for k in (-8, -3, -1, 0, 1, 3, 8, 20)]
    return sorted({p for p in pts if p > 0})


def exact_mi_direct(eps_s, nu=0.5, tol=1e-10,
                    max_subdivisions=DEFAULT_MAX_SUBDIVISIONS):
    """I(X;Y) by brute force: sum over y of x-integrals.

    For each y, P_Y(y) = int P_X W dx and int P_X W log W dx are integrated
    numerically (the negative-binomial formula is not used), then
    I = sum_y int P_X W log W dx - sum_y P_Y log P_Y.
    Intended as an independent check on :func:`exact_mi_gamma`.
    """
    _check_nu(nu)
    if eps_s == 0:
        return 0.0
    inp = GammaInput(eps_s, nu)
    log_norm = -gammaln(nu) - nu * math.log(inp.scale)
    y_max = marginal_truncation(eps_s, nu, 1e-14)
    cond, marg = [], []
    for y in range(y_max + 1):
        lgy = gammaln(y + 1.0)

        def log_joint(x, y=y, lgy=lgy):
            with np.errstate(divide="ignore"):
                log_w = -x + y * np.log(x) - lgy
            return log_w, (nu - 1.0) * np.log(x) - x / inp.scale + log_norm + log_w

        def joint(x):
            return np.exp(log_joint(x)[1])

        def joint_log_w(x):
            log_w, lj = log_joint(x)
            return np.exp(lj) * log_w

        pts = _peak_points(y, eps_s, nu)
        kw = dict(rel_tol=tol, abs_tol=1e-300, max_subdivisions=max_subdivisions,
                  points=pts)
        b = integrate_adaptive(joint, 0.0, math.inf, **kw)
        a = integrate_adaptive(joint_log_w, 0.0, math.inf, **kw)
        if not (b.converged and a.converged):
            raise QuadratureError(f"x-integral for y={y} did not converge",
                                  b if not b.converged else a)
        cond.append(a.value)
        marg.append(b.value)
    marg = np.array(marg)
    with np.errstate(divide="ignore", invalid="ignore"):
        h_y = -np.where(marg > 0, marg * np.log(marg), 0.0)
    return math.fsum(cond) + math.fsum(h_y)


def bound_point(eps_s, bound_id, **kw):
    """Evaluate one named bound at eps_s as a :class:`BoundPoint`."""
    if bound_id == "theorem-rate":
        v = theorem_rate(eps_s)
    elif bound_id == "gmi":
        v = gmi_evaluation(eps_s, kw.get("a"), kw.get("s")).value
    elif bound_id == "lm":
        v = lm_rate_check(eps_s)
    elif bound_id == "lapidoth-moser":
        v = lapidoth_moser_bound(eps_s)
    elif bound_id == "exact-mi":
        v = exact_mi_gamma(eps_s, kw.get("nu", 0.5), kw.get("tol", 1e-9))
    else:
        raise ValueError(f"unknown bound {bound_id!r}")
    return BoundPoint(float(eps_s), bound_id, float(v))
