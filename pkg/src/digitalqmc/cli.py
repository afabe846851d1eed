"""Command-line driver.

Subcommands
-----------
integrate           single adaptive integration; exit 0 if the tolerance is met,
                    2 if the sampling budget ran out, 1 on bad arguments
keister-experiment  replicated Keister runs written as CSV
                    ``run,d,n,estimate,true_value,abs_error,bound,met,elapsed_seconds``
dump-net            Sobol' net as CSV ``i,x1,...,xd``
transform-bench     fast transform timings as CSV ``m,n,seconds,ratio,direct_seconds``
keister-ref         reference values as CSV ``d,value,abs_error_bound``

All numeric CSV fields use 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cubature import ConeSpec, integrate
from .integrands import WalshPolynomial, keister, keister_reference, write_reference_table
from .sobol import DirectionNumberError, sobol_generator
from .transform import direct_transform, fast_transform

EXIT_OK, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2
EXPERIMENT_HEADER = ["run", "d", "n", "estimate", "true_value", "abs_error", "bound", "met", "elapsed_seconds"]
MAX_RANDOM_DIM = 20


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _g(x) -> str:
    return f"{x:.17g}"


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return v


# -- integrate ----------------------------------------------------------------------


def _make_integrand(spec: str, dim: int | None, const_value: float):
    """Return ``(f, d, exact_or_None)`` for an ``--integrand`` value."""
    if spec == "keister":
        d = dim or 1
        return keister, d, None
    if spec == "const":
        d = dim or 1
        return (lambda x: np.full(len(x), const_value)), d, const_value
    if spec.startswith("walshpoly:"):
        with open(spec.split(":", 1)[1]) as fh:
            poly = WalshPolynomial.from_csv(fh.read())
        if dim is not None and dim != poly.dim:
            raise ValueError(f"--dim {dim} does not match the polynomial dimension {poly.dim}")

        def f(x):
            v = poly(x)
            if np.abs(v.imag).max(initial=0.0) > 1e-12 * max(1.0, np.abs(v.real).max(initial=0.0)):
                raise ValueError("Walsh polynomial is not real-valued")
            return v.real

        return f, poly.dim, poly.integral.real
    raise ValueError(f"unknown integrand {spec!r}")


def cmd_integrate(args) -> int:
    try:
        f, d, exact = _make_integrand(args.integrand, args.dim, args.const_value)
        res = integrate(f, d, args.tol, ConeSpec(), m_max=args.mmax, seed=args.seed)
    except (ValueError, OSError) as exc:
        # NonFiniteIntegrandError and DirectionNumberError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"estimate={_g(res.estimate)}")
    print(f"error_bound={_g(res.error_bound)}")
    print(f"n={res.n}")
    print(f"met={'true' if res.met_tolerance else 'false'}")
    if exact is not None:
        print(f"abs_error={_g(abs(res.estimate - exact))}")
    if args.history:
        with open(args.history, "w") as fh:
            fh.write(res.history_csv())
    return EXIT_OK if res.met_tolerance else EXIT_BUDGET


# -- keister experiment ---------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    replications: int = 200
    tol: float = 1e-3
    dim: int | None = None  # None: d = floor(e^D), D ~ U[0, log 20]
    seed: int = 0
    m_max: int = 24
    output: str | None = None
    timing: bool = True
    jobs: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.dim is not None and self.dim < 1:
            raise ValueError("dimension must be at least 1")


def _run_seeds(seed: int, run: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    # counter-based: run i always gets the same child regardless of how many runs exist
    child = np.random.SeedSequence(seed, spawn_key=(run,))
    dim_seq, scramble_seq = child.spawn(2)
    return dim_seq, scramble_seq


def draw_dimension(rng: np.random.Generator) -> int:
    """``floor(e^D)`` with ``D`` uniform on ``[0, log 20]``."""
    return min(MAX_RANDOM_DIM, int(math.floor(math.exp(rng.uniform(0.0, math.log(MAX_RANDOM_DIM))))))


def run_replication(cfg: ExperimentConfig, run: int) -> dict:
    dim_seq, scramble_seq = _run_seeds(cfg.seed, run)
    d = cfg.dim if cfg.dim is not None else draw_dimension(np.random.default_rng(dim_seq))
    t0 = time.perf_counter()
    gen = sobol_generator(d, cfg.m_max, seed=scramble_seq)
    res = integrate(keister, d, cfg.tol, ConeSpec(), gen=gen, m_max=cfg.m_max)
    elapsed = time.perf_counter() - t0
    true = keister_reference(d)
    return {
        "run": run,
        "d": d,
        "n": res.n,
        "estimate": res.estimate,
        "true_value": true,
        "abs_error": abs(res.estimate - true),
        "bound": res.error_bound,
        "met": res.met_tolerance,
        "elapsed_seconds": elapsed,
    }


def _format_row(row: dict, timing: bool) -> list[str]:
    return [
        str(row["run"]),
        str(row["d"]),
        str(row["n"]),
        _g(row["estimate"]),
        _g(row["true_value"]),
        _g(row["abs_error"]),
        _g(row["bound"]),
        "true" if row["met"] else "false",
        _g(row["elapsed_seconds"]) if timing else "",
    ]


def experiment_csv(rows: list[dict], timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EXPERIMENT_HEADER)
    for row in rows:
        w.writerow(_format_row(row, timing))
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """All replications, ordered by run index."""
    runs = range(cfg.replications)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            return list(pool.map(run_replication, [cfg] * cfg.replications, runs))
    return [run_replication(cfg, i) for i in runs]


def summarize(rows: list[dict], tol: float) -> str:
    err = np.array([r["abs_error"] for r in rows])
    secs = np.array([r["elapsed_seconds"] for r in rows])
    dims = np.array([r["d"] for r in rows])
    ok = err <= tol
    q = [0.1, 0.25, 0.5, 0.75, 0.9, 1.0]
    lines = [
        f"runs={len(rows)}",
        f"success_rate={ok.mean():.4f}",
        f"bound_met_rate={np.mean([r['met'] for r in rows]):.4f}",
        f"median_d={np.median(dims):g}",
        f"median_failing_d={np.median(dims[~ok]):g}" if (~ok).any() else "median_failing_d=none",
        "error_quantiles " + " ".join(f"q{p:g}={v:.3g}" for p, v in zip(q, np.quantile(err, q))),
        "time_quantiles " + " ".join(f"q{p:g}={v:.3g}" for p, v in zip(q, np.quantile(secs, q))),
    ]
    return "\n".join(lines)


def cmd_keister_experiment(args) -> int:
    try:
        cfg = ExperimentConfig(
            args.replications, args.tol, args.dim, args.seed, args.mmax, args.output, not args.no_timing, args.jobs
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rows = run_experiment(cfg)
    text = experiment_csv(rows, cfg.timing)
    if cfg.output:
        try:
            with open(cfg.output, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {cfg.output}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(summarize(rows, cfg.tol))
    else:
        sys.stdout.write(text)
        print(summarize(rows, cfg.tol), file=sys.stderr)
    return EXIT_OK


# -- dump-net -----------------------------------------------------------------------------


def net_csv(dim: int, m: int, seed=None, scrambled: bool = True) -> str:
    gen = sobol_generator(dim, max(m, 1), seed=seed if seed is not None else 0, scramble=scrambled)
    x = gen.point_floats(0, 2**m, shifted=scrambled)
    buf = io.StringIO()
    buf.write(",".join(["i"] + [f"x{j + 1}" for j in range(dim)]) + "\n")
    for i, row in enumerate(x):
        buf.write(f"{i}," + ",".join(_g(v) for v in row) + "\n")
    return buf.getvalue()


def cmd_dump_net(args) -> int:
    try:
        text = net_csv(args.dim, args.m, args.seed, not args.raw)
    except (ValueError, DirectionNumberError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(text)
    return EXIT_OK


# -- transform-bench ----------------------------------------------------------------------


def _best_time(fn, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def transform_bench(m_lo: int, m_hi: int, repeats: int = 5, direct_max: int = 12, seed: int = 0) -> list[dict]:
    """Minimum-of-``repeats`` wall time of :func:`fast_transform` on random real data."""
    rng = np.random.default_rng(seed)
    rows = []
    prev = None
    for m in range(m_lo, m_hi + 1):
        y = rng.standard_normal(2**m)
        secs = _best_time(lambda: fast_transform(y, 2), repeats)
        direct = _best_time(lambda: direct_transform(y, 2), 1) if m <= direct_max else None
        rows.append({"m": m, "n": 2**m, "seconds": secs, "ratio": None if prev is None else secs / prev,
                     "direct_seconds": direct})
        prev = secs
    return rows


def cmd_transform_bench(args) -> int:
    if not 10 <= args.mmax <= 24:
        print("error: --mmax must be between 10 and 24", file=sys.stderr)
        return EXIT_USAGE
    rows = transform_bench(10, args.mmax, args.repeats, args.direct_max)
    print("m,n,seconds,ratio,direct_seconds")
    for r in rows:
        ratio = "" if r["ratio"] is None else _g(r["ratio"])
        direct = "" if r["direct_seconds"] is None else _g(r["direct_seconds"])
        print(f"{r['m']},{r['n']},{_g(r['seconds'])},{ratio},{direct}")
    return EXIT_OK


# -- keister-ref --------------------------------------------------------------------------


def cmd_keister_ref(args) -> int:
    if not 1 <= args.max_dim <= 30:
        print("error: --max-dim must be between 1 and 30", file=sys.stderr)
        return EXIT_USAGE
    write_reference_table(args.output, range(1, args.max_dim + 1))
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="digitalqmc", description="Adaptive digital-sequence cubature.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("integrate", help="integrate one function")
    s.add_argument("--integrand", default="keister", help="keister | const | walshpoly:<file>")
    s.add_argument("--dim", type=_positive_int, default=None)
    s.add_argument("--tol", type=_positive_float, default=1e-3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mmax", type=_positive_int, default=24)
    s.add_argument("--const-value", type=float, default=1.0)
    s.add_argument("--history", default=None, help="write the per-level history CSV here")
    s.set_defaults(func=cmd_integrate)

    s = sub.add_parser("keister-experiment", help="replicated Keister runs")
    s.add_argument("--replications", type=_positive_int, default=200)
    s.add_argument("--tol", type=_positive_float, default=1e-3)
    s.add_argument("--dim", type=_positive_int, default=None, help="fixed d (default: random law)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mmax", type=_positive_int, default=24)
    s.add_argument("--output", default=None)
    s.add_argument("--no-timing", action="store_true", help="leave elapsed_seconds empty")
    s.add_argument("--jobs", type=_positive_int, default=1)
    s.set_defaults(func=cmd_keister_experiment)

    s = sub.add_parser("dump-net", help="print net points")
    s.add_argument("--dim", type=_positive_int, default=2)
    s.add_argument("--m", type=_nonneg_int, default=8)
    s.add_argument("--seed", type=int, default=0)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--raw", action="store_true", help="unscrambled, unshifted")
    g.add_argument("--scrambled", action="store_true", help="scrambled and shifted (default)")
    s.set_defaults(func=cmd_dump_net)

    s = sub.add_parser("transform-bench", help="time the fast transform")
    s.add_argument("--mmax", type=int, default=22)
    s.add_argument("--repeats", type=_positive_int, default=5)
    s.add_argument("--direct-max", type=int, default=12)
    s.set_defaults(func=cmd_transform_bench)

    s = sub.add_parser("keister-ref", help="write keister_ref.csv")
    s.add_argument("--max-dim", type=int, default=20)
    s.add_argument("--output", default="keister_ref.csv")
    s.set_defaults(func=cmd_keister_ref)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
