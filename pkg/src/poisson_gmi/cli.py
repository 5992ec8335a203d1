"""Command-line front end: CSV sweeps and single-point reports.

Exit codes: 0 success, 1 usage or validation error, 2 numerical
non-convergence (rows that failed carry the value ``NA``).
"""

import argparse
import csv
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytic, montecarlo
from .quadrature import QuadratureError

CSV_HEADER = ("eps_s", "quantity", "value", "stderr", "samples", "seed")
CODING_HEADER = ("eps_s", "a", "rate", "n", "M", "trials", "errors", "error_rate", "seed")
QUANTITIES = ("theorem-rate", "gmi", "lm", "lapidoth-moser", "exact-mi", "mc-gmi", "mc-lm")
DEFAULT_SEED = 12345
NA = "NA"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def fmt(v):
    return f"{v:.12g}"


@dataclass
class SweepSpec:
    eps_values: tuple
    quantities: tuple
    samples: int = 10 ** 6
    seed: int = DEFAULT_SEED
    nu: float = 0.5
    tol: float = 1e-9
    a: float = None
    s: float = None
    bits: bool = False

    def __post_init__(self):
        if not self.eps_values:
            raise UsageError("empty eps grid")
        if any(not (e > 0 and math.isfinite(e)) for e in self.eps_values):
            raise UsageError("eps values must be positive and finite")
        if not self.quantities:
            raise UsageError("at least one quantity is required")
        bad = [q for q in self.quantities if q not in QUANTITIES]
        if bad:
            raise UsageError(f"unknown quantities: {', '.join(bad)}")
        if self.samples < 1000:
            raise UsageError("--samples must be at least 1000")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        if not 0 < self.nu <= 4:
            raise UsageError("--nu must lie in (0, 4]")
        if not self.tol >= 1e-10:
            raise UsageError("--tol must be at least 1e-10")
        if self.a is not None and not self.a > 0:
            raise UsageError("--a must be positive")
        if self.s is not None and not self.s >= 0:
            raise UsageError("--s must be nonnegative")


def eps_grid(eps_min, eps_max, points, scale="log"):
    if not (eps_min > 0 and eps_max > 0):
        raise UsageError("eps bounds must be positive")
    if not eps_min < eps_max:
        raise UsageError("--eps-min must be below --eps-max")
    if points < 2:
        raise UsageError("--points must be at least 2")
    if scale == "log":
        return tuple(float(v) for v in np.geomspace(eps_min, eps_max, points))
    if scale == "linear":
        return tuple(float(v) for v in np.linspace(eps_min, eps_max, points))
    raise UsageError(f"unknown scale {scale!r}")


def evaluate_point(eps_s, quantity, spec):
    """One CSV row (as a tuple of strings) for `quantity` at `eps_s`."""
    unit = math.log(2.0) if spec.bits else 1.0
    stderr = samples = seed = ""
    if quantity == "theorem-rate":
        v = analytic.theorem_rate(eps_s)
    elif quantity == "gmi":
        v = analytic.gmi_evaluation(eps_s, spec.a, spec.s).value
    elif quantity == "lm":
        v = (analytic.lm_closed_form(eps_s, spec.s) if spec.s is not None
             else analytic.lm_rate_check(eps_s))
    elif quantity == "lapidoth-moser":
        v = analytic.lapidoth_moser_bound(eps_s)
    elif quantity == "exact-mi":
        try:
            v = analytic.exact_mi_gamma(eps_s, spec.nu, spec.tol)
        except QuadratureError:
            return (fmt(eps_s), quantity, NA, "", "", "")
    elif quantity in ("mc-gmi", "mc-lm"):
        if quantity == "mc-gmi":
            g = analytic.gmi_evaluation(eps_s, spec.a, spec.s)
            est = montecarlo.estimate_gmi_mc(eps_s, g.a, g.s, spec.samples, spec.seed)
        else:
            s = spec.s if spec.s is not None else analytic.lm_cancellation_s(eps_s)
            est = montecarlo.estimate_lm_mc(eps_s, s, spec.samples, spec.seed)
        v = est.mean
        stderr, samples, seed = fmt(est.stderr / unit), str(est.n_samples), str(est.seed)
    else:
        raise UsageError(f"unknown quantity {quantity!r}")
    return (fmt(eps_s), quantity, fmt(float(v) / unit), stderr, samples, seed)


def cmd_bounds(spec, jobs=1):
    """All (grid point x quantity) rows, in grid order."""
    tasks = [(e, q) for e in spec.eps_values for q in spec.quantities]

    def run(task):
        return evaluate_point(task[0], task[1], spec)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, tasks))
    return [run(t) for t in tasks]


def write_csv(rows, header, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def _emit(rows, header, out):
    if out:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            write_csv(rows, header, fh)
    else:
        write_csv(rows, header, sys.stdout)


def _summary(rows, out, unit):
    print(f"wrote {len(rows)} rows to {out} ({unit})")
    by_q = {}
    for r in rows:
        by_q.setdefault(r[1], []).append(r[2])
    for q, vals in by_q.items():
        ok = [float(v) for v in vals if v != NA]
        failed = len(vals) - len(ok)
        line = f"  {q:15s} n={len(vals)}"
        if ok:
            line += f" min={fmt(min(ok))} max={fmt(max(ok))}"
        if failed:
            line += f" failed={failed}"
        print(line)


# --------------------------------------------------------------------------
# argument handling

def _common(p):
    p.add_argument("--eps", type=float, help="single energy point")
    p.add_argument("--eps-min", type=float)
    p.add_argument("--eps-max", type=float)
    p.add_argument("--points", type=int, default=2)
    p.add_argument("--scale", choices=("log", "linear"), default="log")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--samples", type=int, default=10 ** 6)
    p.add_argument("--bits", action="store_true", help="report bits instead of nats")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--jobs", type=int, default=1)


def build_parser():
    p = _Parser(prog="poisson-gmi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bounds", help="sweep several bounds into a CSV")
    _common(b)
    b.add_argument("--quantities", default="theorem-rate,gmi,lm,lapidoth-moser,exact-mi",
                   help="comma-separated subset of " + ",".join(QUANTITIES))
    b.add_argument("--nu", type=float, default=0.5)
    b.add_argument("--a", type=float)
    b.add_argument("--s", type=float)

    g = sub.add_parser("gmi", help="GMI at one point, defaults a=1+1/eps, s=s_hat")
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--a", type=float)
    g.add_argument("--s", type=float)
    g.add_argument("--bits", action="store_true")

    m = sub.add_parser("mi", help="exact mutual information of a gamma input")
    _common(m)
    m.add_argument("--nu", type=float, default=0.5)

    lm = sub.add_parser("lm", help="LM rate with a=1 and exponential weighting")
    _common(lm)
    lm.add_argument("--s", type=float)

    for name, helptext in (("mc-gmi", "Monte Carlo GMI estimate"),
                           ("mc-lm", "Monte Carlo LM estimate")):
        mc = sub.add_parser(name, help=helptext)
        _common(mc)
        if name == "mc-gmi":
            mc.add_argument("--a", type=float)
        mc.add_argument("--s", type=float)

    sim = sub.add_parser("simulate", help="random-coding error counts")
    sim.add_argument("--eps", type=float, required=True)
    sim.add_argument("--a", type=float)
    sim.add_argument("--rate", type=float, required=True)
    sim.add_argument("--n", type=int, nargs="+", required=True)
    sim.add_argument("--trials", type=int, default=200)
    sim.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sim.add_argument("--out", metavar="FILE")
    sim.add_argument("--jobs", type=int, default=1)
    return p


def _grid_from_args(args):
    if args.eps is not None:
        if args.eps_min is not None or args.eps_max is not None:
            raise UsageError("use either --eps or --eps-min/--eps-max")
        return (args.eps,)
    if args.eps_min is None or args.eps_max is None:
        raise UsageError("give --eps or both --eps-min and --eps-max")
    return eps_grid(args.eps_min, args.eps_max, args.points, args.scale)


def _sweep(args, quantities):
    spec = SweepSpec(
        eps_values=_grid_from_args(args), quantities=tuple(quantities),
        samples=args.samples, seed=args.seed, nu=getattr(args, "nu", 0.5),
        tol=args.tol, a=getattr(args, "a", None), s=getattr(args, "s", None),
        bits=args.bits)
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    rows = cmd_bounds(spec, jobs=args.jobs)
    _emit(rows, CSV_HEADER, args.out)
    if args.out:
        _summary(rows, args.out, "bits" if args.bits else "nats")
    return 2 if any(r[2] == NA for r in rows) else 0


def cmd_gmi(eps_s, a=None, s=None, bits=False, stream=None):
    stream = stream or sys.stdout
    if not eps_s > 0:
        raise UsageError("--eps must be positive")
    if a is not None and not a > 0:
        raise UsageError("--a must be positive")
    if s is not None and not s >= 0:
        raise UsageError("--s must be nonnegative")
    g = analytic.gmi_evaluation(eps_s, a, s)
    unit = math.log(2.0) if bits else 1.0
    label = "bits" if bits else "nats"
    print(f"eps_s = {fmt(eps_s)}", file=stream)
    print(f"a = {fmt(g.a)}", file=stream)
    print(f"s = {fmt(g.s)}", file=stream)
    print(f"gmi = {fmt(g.value / unit)} {label}", file=stream)
    print(f"theorem_rate = {fmt(analytic.theorem_rate(eps_s) / unit)} {label}", file=stream)
    return g


def cmd_simulate(eps_s, a, rate, n_list, trials, seed, jobs=1):
    """CodingResult rows, one per blocklength; the size guard is checked
    for every n before any simulation runs."""
    if not eps_s > 0:
        raise UsageError("--eps must be positive")
    if a is None:
        a = 1.0 + 1.0 / eps_s
    if not a > 0 or rate < 0 or trials < 1:
        raise UsageError("need a > 0, rate >= 0 and trials >= 1")
    for n in n_list:
        if n < 2:
            raise UsageError(f"blocklength n={n} must be at least 2")
        M = montecarlo.codebook_size(rate, n)
        if M > montecarlo.MAX_CODEBOOK:
            raise UsageError(f"n={n}: codebook size M={M} exceeds the limit "
                             f"{montecarlo.MAX_CODEBOOK}")
    results = [montecarlo.run_random_coding(eps_s, a, rate, n, trials, seed, workers=jobs)
               for n in n_list]
    return [(fmt(r.eps_s), fmt(r.a), fmt(r.rate), str(r.n), str(r.M), str(r.trials),
             str(r.errors), fmt(r.error_rate), str(r.seed)) for r in results]


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bounds":
            qs = [q.strip() for q in args.quantities.split(",") if q.strip()]
            return _sweep(args, qs)
        if args.command == "gmi":
            cmd_gmi(args.eps, args.a, args.s, args.bits)
            return 0
        if args.command == "mi":
            return _sweep(args, ["exact-mi"])
        if args.command in ("lm", "mc-gmi", "mc-lm"):
            return _sweep(args, [args.command])
        if args.command == "simulate":
            rows = cmd_simulate(args.eps, args.a, args.rate, args.n, args.trials,
                                args.seed, args.jobs)
            _emit(rows, CODING_HEADER, args.out)
            return 0
    except UsageError as exc:
        print(f"poisson-gmi: error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
