"""Command-line interface.

Exit codes: 0 success, 1 property failure, 2 usage or configuration
error, 3 cost ceiling exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .entangled import (
    EntangledSystem,
    average_kernel,
    average_time_domain,
    limit_general,
    limit_pair_partition,
)
from .errors import ErgodicError, ResourceError
from .fileformat import emit, format_matrix, read_matrix, write_atomic
from .lab.convergence import DEFAULT_SCHEDULE, convergence_study, geometric_schedule
from .lab.generators import (
    gen_diagonal_unitary,
    gen_haar_unitary,
    gen_operator,
    gen_shift_unitary,
    parse_phase,
)
from .lab.suite import SuiteConfig, dumps_report, run_suite
from .partitions import MAX_PAIR_K, enumerate_pair_partitions, parse_partition
from .spectral import EPS_CLUSTER, EPS_RES, decompose

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ config

_JOB_KEYS = {
    "unitary", "ops", "partition", "n", "schedule", "engine", "eps_cluster",
    "eps_res", "seed", "out", "suite",
}


def load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(data) - _JOB_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def merged(args: argparse.Namespace, cfg: dict) -> dict:
    """Config file values overridden by any flag the user actually passed."""
    out = dict(cfg)
    for key in ("unitary", "partition", "n", "engine", "eps_cluster", "eps_res",
                "seed", "out", "schedule"):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    if getattr(args, "op", None):
        out["ops"] = args.op
    return out


def _unitary(source: str, seed: int) -> np.ndarray:
    if not source.startswith("gen:"):
        return _read(source)
    parts = source.split(":", 2)
    name = parts[1]
    arg = parts[2] if len(parts) > 2 else ""
    if name == "diag":
        if not arg:
            raise UsageError("gen:diag needs phases, e.g. gen:diag:0,1/2")
        return gen_diagonal_unitary([parse_phase(p) for p in arg.split(",")])
    try:
        d = int(arg)
    except ValueError:
        raise UsageError(f"generator {source!r} needs an integer dimension") from None
    if name == "identity":
        return np.eye(d, dtype=np.complex128)
    if name == "shift":
        return gen_shift_unitary(d)
    if name == "haar":
        return gen_haar_unitary(d, seed)
    raise UsageError(f"unknown unitary generator {name!r}")


def _operator(source: str, d: int, seed: int) -> np.ndarray:
    if not source.startswith("gen:"):
        return _read(source)
    parts = source.split(":")
    kind = parts[1]
    if len(parts) > 2:
        try:
            seed = int(parts[2])
        except ValueError:
            raise UsageError(f"bad seed in {source!r}") from None
    if kind == "identity":
        return np.eye(d, dtype=np.complex128)
    if kind == "ones":
        return np.ones((d, d), dtype=np.complex128)
    if kind == "zero":
        return np.zeros((d, d), dtype=np.complex128)
    return gen_operator(d, kind, seed)


def _read(path: str) -> np.ndarray:
    try:
        return read_matrix(path)
    except OSError as exc:
        raise UsageError(f"cannot read matrix {path}: {exc}") from None


def _schedule(value) -> tuple[int, ...]:
    if value is None:
        return DEFAULT_SCHEDULE
    if isinstance(value, str):
        value = value.split(",")
    try:
        start, factor, count = (int(v) for v in value)
    except (TypeError, ValueError):
        raise UsageError(f"schedule must be start,factor,count; got {value!r}") from None
    return geometric_schedule(start, factor, count)


def build_job(job: dict):
    """``(U, system)`` from a merged job config."""
    if "unitary" not in job:
        raise UsageError("no unitary given (--unitary or config 'unitary')")
    if "partition" not in job:
        raise UsageError("no partition given (--partition or config 'partition')")
    seed = int(job.get("seed", 0))
    u = _unitary(str(job["unitary"]), seed)
    part = parse_partition(str(job["partition"]))
    sources = list(job.get("ops", []))
    if len(sources) != part.m - 1:
        raise UsageError(
            f"partition {part} needs {part.m - 1} operators, got {len(sources)}"
        )
    d = u.shape[0]
    ops = [_operator(str(s), d, seed + 1 + i) for i, s in enumerate(sources)]
    sd = decompose(u, float(job.get("eps_cluster", EPS_CLUSTER)),
                   float(job.get("eps_res", EPS_RES)))
    return u, EntangledSystem.build(sd, ops, part)


# ---------------------------------------------------------------- commands


def cmd_limit(args, job) -> int:
    u, system = build_job(job)
    eps_res = float(job.get("eps_res", EPS_RES))
    general, tuples = limit_general(system, eps_res)
    if system.partition.is_pair():
        matrix, formula = limit_pair_partition(system), "pair-partition projection sum"
    else:
        matrix, formula = general, "resonance-indicator sum"
    comments = [f"limit partition={system.partition} formula={formula}",
                f"resonant tuples: {len(tuples)}"]
    comments += ["tuple " + ",".join(str(c) for c in t.assignment) for t in tuples]
    emit(format_matrix(matrix, comments), job.get("out"), sys.stdout)
    return EXIT_OK


def cmd_average(args, job) -> int:
    if "n" not in job:
        raise UsageError("average needs --n")
    n = int(job["n"])
    if n < 1:
        raise UsageError(f"N must be >= 1, got {n}")
    engine = job.get("engine", "kernel")
    if engine not in ("time", "kernel"):
        raise UsageError(f"engine must be 'time' or 'kernel', got {engine!r}")
    u, system = build_job(job)
    if engine == "time":
        matrix = average_time_domain(system, u, n)
    else:
        matrix = average_kernel(system, n)
    comments = [f"average partition={system.partition} N={n} engine={engine}"]
    emit(format_matrix(matrix, comments), job.get("out"), sys.stdout)
    return EXIT_OK


def cmd_converge(args, job) -> int:
    u, system = build_job(job)
    schedule = _schedule(job.get("schedule"))
    report = convergence_study(system, schedule, float(job.get("eps_res", EPS_RES)),
                               check=False)
    csv_text = report.to_csv()
    summary = json.dumps(report.summary(), sort_keys=True, indent=2) + "\n"
    out = job.get("out")
    if out:
        base = Path(out)
        if base.suffix in (".csv", ".json"):
            base = base.with_suffix("")
        write_atomic(base.with_suffix(".csv"), csv_text)
        write_atomic(base.with_suffix(".json"), summary)
    else:
        sys.stdout.write(csv_text)
        sys.stdout.write(summary)
    return EXIT_OK if report.dominated else EXIT_FAIL


def cmd_verify(args, job) -> int:
    suite = dict(job.get("suite", {}))
    for key in ("seed", "eps_cluster", "eps_res"):
        if key in job:
            suite[key] = job[key]
    report = run_suite(SuiteConfig.from_dict(suite))
    emit(dumps_report(report), job.get("out"), sys.stdout)
    if report["status"] != "pass":
        sys.stderr.write("failing properties: " + ", ".join(report["failed"]) + "\n")
        return EXIT_FAIL
    return EXIT_OK


def cmd_partitions(args, job) -> int:
    k = args.k
    if not 1 <= k <= MAX_PAIR_K:
        raise UsageError(f"k must be in 1..{MAX_PAIR_K}, got {k}")
    parts = enumerate_pair_partitions(k)
    text = "".join(p.literal() + "\n" for p in parts) + f"count={len(parts)}\n"
    emit(text, getattr(args, "out", None), sys.stdout)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergodic-entangle",
        description="Entangled ergodic averages of a unitary matrix and their limits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, job=True):
        p.add_argument("--config", help="JSON job config; flags override its keys")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--eps-cluster", dest="eps_cluster", type=float)
        p.add_argument("--eps-res", dest="eps_res", type=float)
        if job:
            p.add_argument("--unitary", help="matrix file or gen:identity:D, gen:shift:D, "
                                             "gen:haar:D, gen:diag:P1,P2,...")
            p.add_argument("--op", action="append",
                           help="matrix file or gen:KIND[:SEED]; repeat once per operator")
            p.add_argument("--partition", help="partition literal, e.g. 1,2,1,2")

    p = sub.add_parser("limit", help="closed-form limit of the entangled average")
    common(p)
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("average", help="finite-N entangled average")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--engine", choices=("time", "kernel"))
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("converge", help="distance to the limit over a schedule of N")
    common(p)
    p.add_argument("--schedule", help="start,factor,count (default 8,2,8)")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("verify", help="run the property suite")
    common(p, job=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("partitions", help="list the pair partitions of {1..2k}")
    p.add_argument("k", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_partitions)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        job = merged(args, load_config(getattr(args, "config", None)))
        return args.func(args, job)
    except ResourceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RESOURCE
    except (UsageError, ErgodicError, ValueError, TypeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
