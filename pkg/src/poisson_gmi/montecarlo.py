"""Monte Carlo checks: GMI / LM estimators and a random-coding experiment.

Every unit of work (a chunk of samples, a decoding trial) owns the stream
``rng_stream(seed, index)``, so results do not depend on how many workers
run them.  Chunk statistics are merged in index order.
"""

import decimal
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel import GammaInput, sample_gamma_input

DEFAULT_CHUNK = 1 << 16
MAX_CODEBOOK = 1 << 22
_U64 = (1 << 64) - 1


def rng_stream(seed, stream_index=0):
    """Counter-based Philox generator keyed by (seed, stream_index).

    Distinct keys give independent streams; a key always reproduces the
    same sequence on every platform.
    """
    key = np.array([int(seed) & _U64, int(stream_index) & _U64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int

    def studentized(self, target):
        return (self.mean - target) / self.stderr


def _map_ordered(fn, items, workers):
    if workers is None or workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _merge(stats):
    """Chan et al. pairwise update of (count, mean, M2), left to right."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def _estimate(eps_s, a, s, weight_rate, n_samples, seed, chunk_size, workers):
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    if not eps_s > 0:
        raise ValueError("eps_s must be positive")
    inp = GammaInput(eps_s, 0.5)
    n_chunks = -(-n_samples // chunk_size)

    def chunk(k):
        rng = rng_stream(seed, k)
        size = min(chunk_size, n_samples - k * chunk_size)
        x = sample_gamma_input(inp, rng, size)
        y = rng.poisson(x)
        v = _kernels.gmi_sample_values(x, y, eps_s, a, s, weight_rate)
        mu = float(v.mean())
        return size, mu, float(np.sum((v - mu) ** 2))

    n, mean, m2 = _merge(_map_ordered(chunk, range(n_chunks), workers))
    stderr = math.sqrt(m2 / (n - 1) / n)
    return McEstimate(mean, stderr, n, seed)


def estimate_gmi_mc(eps_s, a, s, n_samples, seed, chunk_size=DEFAULT_CHUNK,
                    workers=1):
    """Sample mean of s log q(X,Y) - log E_X'[q(X',Y)^s] with X gamma(1/2),
    Y ~ Poisson(X).  The inner expectation uses its closed form."""
    return _estimate(eps_s, a, s, 0.0, n_samples, seed, chunk_size, workers)


def estimate_lm_mc(eps_s, s, n_samples, seed, chunk_size=DEFAULT_CHUNK,
                   workers=1):
    """Like :func:`estimate_gmi_mc` with a = 1 and weighting exp(-(s/eps_s) x)."""
    return _estimate(eps_s, 1.0, s, s / eps_s, n_samples, seed, chunk_size, workers)


# --------------------------------------------------------------------------
# random coding with the minimum-distance decoder

class CodebookSizeError(ValueError):
    pass


@dataclass(frozen=True)
class CodingResult:
    eps_s: float
    a: float
    rate: float
    n: int
    M: int
    trials: int
    errors: int
    seed: int

    @property
    def error_rate(self):
        return self.errors / self.trials


def codebook_size(rate, n):
    """M = ceil(exp(rate * n)), as an exact integer."""
    e = rate * n
    if e <= 700:
        return int(math.ceil(math.exp(e)))
    # float exp would overflow
    ctx = decimal.Context(prec=int(e / math.log(10)) + 30)
    return int(ctx.exp(decimal.Decimal(e)).to_integral_value(decimal.ROUND_CEILING))


def decode_trials(eps_s, a, rate, n, trials, seed, full_distance=False,
                  chunk_rows=8192, max_codebook=MAX_CODEBOOK, workers=1):
    """Per-trial index of the first wrong codeword that is not worse than the
    transmitted one, or -1 when the decoder is correct.

    Competitors are drawn chunk by chunk from the trial's stream and the
    search stops at the first tie-or-better competitor; the remaining
    codewords cannot change the error event.  Codebooks larger than
    `max_codebook` are rejected with :class:`CodebookSizeError`.
    """
    if n < 2:
        raise ValueError("blocklength must be at least 2")
    if trials < 1:
        raise ValueError("trials must be positive")
    if not (eps_s > 0 and a > 0 and rate >= 0):
        raise ValueError("need eps_s > 0, a > 0 and rate >= 0")
    M = codebook_size(rate, n)
    if M > max_codebook:
        raise CodebookSizeError(
            f"n={n}: codebook size M={M} exceeds the limit {max_codebook}")
    inp = GammaInput(eps_s, 0.5)

    def trial(t):
        if M == 1:
            return -1
        rng = rng_stream(seed, t)
        x_true = sample_gamma_input(inp, rng, (1, n))
        y = rng.poisson(x_true[0]).astype(np.float64)
        threshold = _kernels.codeword_distances(x_true, y, a, full_distance)[0]
        done = 0
        while done < M - 1:
            rows = min(chunk_rows, M - 1 - done)
            xs = sample_gamma_input(inp, rng, (rows, n))
            hit = _kernels.first_not_worse(xs, y, a, full_distance, threshold)
            if hit >= 0:
                return done + hit
            done += rows
        return -1

    return np.array(_map_ordered(trial, range(trials), workers), dtype=np.int64)


def run_random_coding(eps_s, a, rate, n, trials, seed, full_distance=False,
                      workers=1, max_codebook=MAX_CODEBOOK):
    """Block error count of i.i.d. gamma(1/2) codebooks over the Poisson
    channel with minimum summed distance decoding (ties count as errors)."""
    outcome = decode_trials(eps_s, a, rate, n, trials, seed,
                            full_distance=full_distance, workers=workers,
                            max_codebook=max_codebook)
    return CodingResult(float(eps_s), float(a), float(rate), int(n),
                        codebook_size(rate, n), int(trials),
                        int(np.count_nonzero(outcome >= 0)), int(seed))
