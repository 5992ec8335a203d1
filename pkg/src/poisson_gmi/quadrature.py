"""Adaptive Gauss-Kronrod integration for improper one-dimensional integrals.

The engine is globally adaptive: every pass evaluates the 21-point Kronrod
rule (with its embedded 10-point Gauss rule) on all live subintervals in a
single vectorized call, then bisects the intervals that carry the bulk of
the error.  Nodes are strictly interior, so integrable endpoint
singularities are never evaluated.  Infinite limits are mapped onto (0, 1)
with x = anchor +/- t / (1 - t).

:func:`tanh_sinh` is an independent double-exponential rule kept as a
cross-check; production code never calls it.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

# 21-point Kronrod extension of the 10-point Gauss-Legendre rule, positive
# half (the rule is symmetric).  Odd entries are the Gauss nodes.
_XK = np.array([
    0.9956571630258081, 0.9739065285171717, 0.9301574913557082,
    0.8650633666889845, 0.7808177265864169, 0.6794095682990244,
    0.5627571346686047, 0.4333953941292472, 0.2943928627014602,
    0.14887433898163122, 0.0,
])
_WK = np.array([
    0.011694638867371874, 0.032558162307964725, 0.054755896574351995,
    0.07503967481091996, 0.0931254545836976, 0.10938715880229764,
    0.12349197626206584, 0.13470921731147334, 0.14277593857706009,
    0.14773910490133849, 0.1494455540029169,
])
_WG = np.array([
    0.06667134430868714, 0.14945134915058053, 0.21908636251598224,
    0.26926671930999674, 0.2955242247147533,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]

_EPMACH = np.finfo(float).eps
_UFLOW = np.finfo(float).tiny

DEFAULT_REL_TOL = 1e-9
DEFAULT_ABS_TOL = 1e-12
DEFAULT_MAX_SUBDIVISIONS = 2000

_FINITE, _UPPER_INF, _LOWER_INF = 0, 1, 2


class QuadratureError(ArithmeticError):
    """Raised by callers that cannot use a non-converged integral."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class IntegrationResult:
    value: float
    error_estimate: float
    subdivisions_used: int
    converged: bool

    def __add__(self, other):
        return IntegrationResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.subdivisions_used + other.subdivisions_used,
            self.converged and other.converged,
        )

    def require(self, what="integral"):
        if not self.converged:
            raise QuadratureError(
                f"{what} did not converge (value={self.value!r}, "
                f"error estimate={self.error_estimate!r})", self)
        return self.value


@dataclass(frozen=True)
class IntegrationRequest:
    integrand: Callable
    lower: float
    upper: float
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    max_subdivisions: int = DEFAULT_MAX_SUBDIVISIONS
    points: Optional[Sequence[float]] = None

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("integration requires lower < upper")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")

    def solve(self):
        return integrate_adaptive(
            self.integrand, self.lower, self.upper, rel_tol=self.rel_tol,
            abs_tol=self.abs_tol, max_subdivisions=self.max_subdivisions,
            points=self.points)


def _initial_segments(lower, upper, points):
    cuts = sorted({float(p) for p in (points or ()) if lower < p < upper})
    if math.isinf(lower) and math.isinf(upper) and not cuts:
        cuts = [0.0]
    edges = [lower] + cuts + [upper]
    segs = []
    for a, b in zip(edges[:-1], edges[1:]):
        if math.isinf(a) and math.isinf(b):
            raise ValueError("segment with two infinite ends")
        if math.isinf(b):
            segs.append((0.0, 1.0, _UPPER_INF, a))
        elif math.isinf(a):
            segs.append((0.0, 1.0, _LOWER_INF, b))
        else:
            segs.append((a, b, _FINITE, 0.0))
    return segs


def _map(t, kind, anchor):
    """Original abscissae and Jacobian for transformed nodes `t`."""
    x = t.copy()
    jac = np.ones_like(t)
    inf = kind != _FINITE
    if np.any(inf):
        ti = t[inf]
        one_minus = 1.0 - ti
        step = ti / one_minus
        sign = np.where(kind[inf] == _UPPER_INF, 1.0, -1.0)
        x[inf] = anchor[inf] + sign * step
        jac[inf] = 1.0 / (one_minus * one_minus)
    return x, jac


def _kronrod(f, left, right, kind, anchor):
    """Apply the 21-point pair to every interval; returns (value, error)."""
    centre = 0.5 * (left + right)
    half = 0.5 * (right - left)
    t = centre[:, None] + half[:, None] * NODES[None, :]
    kk = np.broadcast_to(kind[:, None], t.shape).ravel()
    aa = np.broadcast_to(anchor[:, None], t.shape).ravel()
    x, jac = _map(t.ravel(), kk, aa)
    fx = np.asarray(f(x), dtype=np.float64).reshape(t.shape)
    fx = fx * jac.reshape(t.shape)
    resk = fx @ KRONROD_WEIGHTS
    resg = fx @ GAUSS_WEIGHTS
    reskh = 0.5 * resk
    resabs = np.abs(fx) @ KRONROD_WEIGHTS
    resasc = np.abs(fx - reskh[:, None]) @ KRONROD_WEIGHTS
    ahalf = np.abs(half)
    value = resk * half
    resabs *= ahalf
    resasc *= ahalf
    err = np.abs((resk - resg) * half)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    floor = 50.0 * _EPMACH * resabs
    err = np.where(resabs > _UFLOW / (50.0 * _EPMACH), np.maximum(err, floor), err)
    return value, err


def integrate_adaptive(f, lower, upper, rel_tol=DEFAULT_REL_TOL,
                       abs_tol=DEFAULT_ABS_TOL,
                       max_subdivisions=DEFAULT_MAX_SUBDIVISIONS,
                       points=None, vectorized=True):
    """Integrate `f` over (lower, upper), either limit possibly infinite.

    `f` must accept and return numpy arrays unless ``vectorized=False``.
    `points` are optional interior breakpoints (peaks, kinks); they are the
    way to point the engine at narrow features it could otherwise miss.

    Never raises on non-convergence: the result carries ``converged=False``
    and the best available value and error estimate.
    """
    lower, upper = float(lower), float(upper)
    if not lower < upper:
        raise ValueError("integration requires lower < upper")
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError("tolerances must be positive")
    if not vectorized:
        f = np.vectorize(f, otypes=[float])

    segs = _initial_segments(lower, upper, points)
    left = np.array([s[0] for s in segs])
    right = np.array([s[1] for s in segs])
    kind = np.array([s[2] for s in segs], dtype=np.int8)
    anchor = np.array([s[3] for s in segs])
    val, err = _kronrod(f, left, right, kind, anchor)
    n_initial = len(segs)
    limit = max(max_subdivisions, n_initial)
    frozen = np.zeros(len(segs), dtype=bool)

    while True:
        total = float(val.sum())
        errsum = float(err.sum())
        if not (np.isfinite(total) and np.isfinite(errsum)):
            return IntegrationResult(float("nan"), float("inf"),
                                     len(val) - n_initial, False)
        tol = max(abs_tol, rel_tol * abs(total))
        if errsum <= tol:
            return IntegrationResult(total, errsum, len(val) - n_initial, True)
        room = limit - len(val)
        live = np.flatnonzero(~frozen)
        if room <= 0 or live.size == 0:
            return IntegrationResult(total, errsum, len(val) - n_initial, False)

        # bisect every interval above its fair share of the tolerance,
        # largest errors first
        order = live[np.argsort(-err[live], kind="stable")]
        share = tol / len(val)
        pick = order[err[order] > share]
        if pick.size == 0:
            pick = order[:1]
        pick = pick[:room]

        mid = 0.5 * (left[pick] + right[pick])
        splittable = (mid > left[pick]) & (mid < right[pick])
        frozen[pick[~splittable]] = True
        pick, mid = pick[splittable], mid[splittable]
        if pick.size == 0:
            continue

        new_left = np.concatenate([left[pick], mid])
        new_right = np.concatenate([mid, right[pick]])
        new_kind = np.concatenate([kind[pick], kind[pick]])
        new_anchor = np.concatenate([anchor[pick], anchor[pick]])
        new_val, new_err = _kronrod(f, new_left, new_right, new_kind, new_anchor)

        keep = np.ones(len(val), dtype=bool)
        keep[pick] = False
        left = np.concatenate([left[keep], new_left])
        right = np.concatenate([right[keep], new_right])
        kind = np.concatenate([kind[keep], new_kind])
        anchor = np.concatenate([anchor[keep], new_anchor])
        val = np.concatenate([val[keep], new_val])
        err = np.concatenate([err[keep], new_err])
        frozen = np.concatenate([frozen[keep], np.zeros(new_val.size, dtype=bool)])


# --------------------------------------------------------------------------
# Martinez-form mutual information integrand for gamma inputs

def _binomial_tail_ratio(z, nu, terms=90):
    """((1 + z)**-nu - 1 + nu z) / z for 0 <= z < 1/2, by its power series."""
    coef = 0.5 * nu * (nu + 1.0)
    acc = np.zeros_like(z)
    zk = z.copy()
    for k in range(2, terms):
        acc += coef * zk
        coef *= -(nu + k) / (k + 1.0)
        zk = zk * z
    return acc


def _bracket_ratio(eps_s, nu, t):
    """(eps_s t - 1 + (1 + eps_s t / nu)**-nu) / t without cancellation."""
    z = eps_s * t / nu
    small = z < 0.5
    out = np.empty_like(z)
    if np.any(small):
        out[small] = (eps_s / nu) * _binomial_tail_ratio(z[small], nu)
    big = ~small
    if np.any(big):
        zb, tb = z[big], t[big]
        out[big] = (np.expm1(-nu * np.log1p(zb)) + nu * zb) / tb
    return out


def _mi_integrand_scaled(eps_s, nu, log_u, t, log_jac=None):
    """Integrand of the u-integral times an optional Jacobian exp(log_jac).

    With u = 1 - t the integrand is

        (eps_s - (1 - nu**nu / (nu + eps_s t)**nu) u**(nu-1) / t) / log u

    which is rewritten as

        (-eps_s expm1((nu-1) log u) + u**(nu-1) R(t)) / log u

    where R is :func:`_bracket_ratio`.  Both pieces are free of the
    cancellation that the original form suffers as u -> 1.  Supplying
    ``log u`` directly keeps the u -> 0 end accurate under substitutions.
    """
    log_u = np.asarray(log_u, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if log_jac is None:
        log_jac = 0.0
    jac = np.exp(log_jac)
    first = -eps_s * np.expm1((nu - 1.0) * log_u) * jac
    second = np.exp((nu - 1.0) * log_u + log_jac) * _bracket_ratio(eps_s, nu, t)
    return (first + second) / log_u


def integrate_mi_integrand(eps_s, nu, u):
    """Integrand of the u-integral in the gamma-input mutual information.

    Evaluates (eps_s - (1 - nu**nu/(nu + eps_s (1-u))**nu) u**(nu-1)/(1-u)) / log u
    for u strictly inside (0, 1); finite as u -> 1.
    """
    u = np.asarray(u, dtype=np.float64)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("u must lie strictly inside (0, 1)")
    t = 1.0 - u
    with np.errstate(divide="ignore"):
        log_u = np.where(u < 0.5, np.log(u), np.log1p(-t))
    out = _mi_integrand_scaled(eps_s, nu, np.atleast_1d(log_u), np.atleast_1d(t))
    return out[0] if u.ndim == 0 else out


def mi_u_integral(eps_s, nu, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                  max_subdivisions=DEFAULT_MAX_SUBDIVISIONS):
    """The u-integral over (0, 1), split at 1/2.

    On (0, 1/2] the substitution u = w**m with m = 1/min(nu, 1) removes the
    u**(nu-1) endpoint singularity; on [1/2, 1) the integral is taken in
    t = 1 - u so that nodes crowd toward u = 1 without rounding.
    """
    m = 1.0 / min(nu, 1.0)
    w_top = 0.5 ** (1.0 / m)

    def near_zero(w):
        log_w = np.log(w)
        log_u = m * log_w
        t = -np.expm1(log_u)
        log_jac = math.log(m) + (m - 1.0) * log_w
        return _mi_integrand_scaled(eps_s, nu, log_u, t, log_jac)

    def near_one(t):
        return _mi_integrand_scaled(eps_s, nu, np.log1p(-t), t)

    kw = dict(rel_tol=rel_tol, abs_tol=abs_tol, max_subdivisions=max_subdivisions)
    return (integrate_adaptive(near_zero, 0.0, w_top, **kw)
            + integrate_adaptive(near_one, 0.0, 0.5, **kw))


# --------------------------------------------------------------------------
# independent double-exponential oracle

def tanh_sinh(f, lower, upper, tol=1e-12, max_level=14, t_max=6.5):
    """Double-exponential quadrature of a vectorized `f`.

    Finite limits use the tanh-sinh map, a semi-infinite upper limit the
    exp-sinh map.  Returns ``(value, error)`` where error is the change
    between the last two levels.  Endpoints are never evaluated.
    """
    lower, upper = float(lower), float(upper)
    if not lower < upper:
        raise ValueError("tanh_sinh requires lower < upper")
    if math.isinf(lower):
        raise ValueError("tanh_sinh supports an infinite upper limit only")

    def level_sum(h, offset, step):
        k = np.arange(offset, int(t_max / h) + 1, step)
        t = np.concatenate([-k[::-1] * h, k[k > 0] * h]) if offset == 0 else \
            np.concatenate([-k[::-1] * h, k * h])
        if math.isinf(upper):
            arg = 0.5 * math.pi * np.sinh(t)
            with np.errstate(over="ignore"):
                x = lower + np.exp(arg)
                w = 0.5 * math.pi * np.cosh(t) * np.exp(arg)
            ok = np.isfinite(x) & np.isfinite(w) & (x > lower)
        else:
            half = 0.5 * (upper - lower)
            arg = 0.5 * math.pi * np.sinh(np.abs(t))
            with np.errstate(over="ignore"):
                # distance to the nearer endpoint, computed without 1 - tanh
                gap = half * 2.0 / (np.exp(2.0 * arg) + 1.0)
                w = half * 0.5 * math.pi * np.cosh(t) / np.cosh(arg) ** 2
            x = np.where(t > 0, upper - gap, lower + gap)
            ok = (gap > 0) & (w > 0) & (x > lower) & (x < upper)
        if not np.any(ok):
            return 0.0
        return float(np.sum(w[ok] * f(x[ok])))

    h = 1.0
    total = level_sum(h, 0, 1)
    estimate = h * total
    err = float("inf")
    for _ in range(max_level):
        h *= 0.5
        total += level_sum(h, 1, 2)
        new = h * total
        err = abs(new - estimate)
        estimate = new
        if err <= tol * max(abs(new), 1e-300):
            break
    return estimate, err
