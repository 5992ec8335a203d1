"""Hot inner loops, each with a numba kernel and a pure-numpy twin.

The numba path is used when numba imports cleanly and the environment
variable ``POISSON_GMI_DISABLE_NUMBA`` is unset (or ``0``).  Both paths
produce the same decisions; sums may differ in the last ulp because the
numpy path uses pairwise reduction.
"""

import os

import numpy as np

_flag = os.environ.get("POISSON_GMI_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba
except ImportError:
    numba = None

USE_NUMBA = numba is not None


# --------------------------------------------------------------------------
# numpy versions

def codeword_distances_numpy(x, y, a, full):
    """Summed decoder distance of every row of `x` against outputs `y`."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if full:
        d = (y - np.sqrt(a) * x) ** 2 / x
    else:
        d = y * y / x + a * x
    return d.sum(axis=1)


def first_not_worse_numpy(x, y, a, full, threshold):
    d = codeword_distances_numpy(x, y, a, full)
    hits = np.flatnonzero(d <= threshold)
    return int(hits[0]) if hits.size else -1


def gmi_sample_values_numpy(x, y, eps_s, a, s, weight_rate):
    c = 1.0 + 2.0 * eps_s * (a * s + weight_rate)
    y = y.astype(np.float64)
    return (-weight_rate * x + s * (-a * x - y * y / x)
            + y * np.sqrt(2.0 * s * c / eps_s) + 0.5 * np.log(c))


# --------------------------------------------------------------------------
# numba versions

if USE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _codeword_distances_nb(x, y, a, full):
        m, n = x.shape
        out = np.empty(m)
        sa = np.sqrt(a)
        for i in range(m):
            acc = 0.0
            for j in range(n):
                xi = x[i, j]
                if full:
                    r = y[j] - sa * xi
                    acc += r * r / xi
                else:
                    acc += y[j] * y[j] / xi + a * xi
            out[i] = acc
        return out

    @numba.njit(cache=True, nogil=True)
    def _first_not_worse_nb(x, y, a, full, threshold):
        m, n = x.shape
        sa = np.sqrt(a)
        for i in range(m):
            acc = 0.0
            for j in range(n):
                xi = x[i, j]
                if full:
                    r = y[j] - sa * xi
                    acc += r * r / xi
                else:
                    acc += y[j] * y[j] / xi + a * xi
            if acc <= threshold:
                return i
        return -1

    @numba.njit(cache=True, nogil=True)
    def _gmi_sample_values_nb(x, y, eps_s, a, s, weight_rate):
        c = 1.0 + 2.0 * eps_s * (a * s + weight_rate)
        root = np.sqrt(2.0 * s * c / eps_s)
        half_log_c = 0.5 * np.log(c)
        out = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            yi = float(y[i])
            out[i] = (-weight_rate * x[i] + s * (-a * x[i] - yi * yi / x[i])
                      + yi * root + half_log_c)
        return out


def codeword_distances(x, y, a, full=False):
    if not USE_NUMBA:
        return codeword_distances_numpy(x, y, a, full)
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return _codeword_distances_nb(np.atleast_2d(x), y, float(a), bool(full))


def first_not_worse(x, y, a, full, threshold):
    """Index of the first row whose distance is <= `threshold`, else -1."""
    if not USE_NUMBA:
        return first_not_worse_numpy(x, y, a, full, threshold)
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return int(_first_not_worse_nb(x, y, float(a), bool(full), float(threshold)))


def gmi_sample_values(x, y, eps_s, a, s, weight_rate):
    """Per-sample log metric ratio; the integrand of the GMI/LM expectation."""
    if not USE_NUMBA:
        return gmi_sample_values_numpy(x, y, eps_s, a, s, weight_rate)
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    return _gmi_sample_values_nb(x, y, float(eps_s), float(a), float(s),
                                 float(weight_rate))
