"""Seeded property sweep over every invariant of the library.

Each trial draws its own generator from ``SeedSequence([seed, property_id,
trial])``, so a failing instance is replayed from the triple alone.  The
report is plain JSON with sorted keys and no timestamps; identical configs
give byte-identical output.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from ..entangled import (
    Ceilings,
    EntangledSystem,
    average_kernel,
    average_time_domain,
    lemma1_bound_check,
    limit_general,
    limit_pair_partition,
    qper_identities,
    reduce_partition,
)
from ..errors import ConfigError, ResourceError
from ..partitions import (
    MAX_PAIR_K,
    enumerate_pair_partitions,
    enumerate_partitions,
    make_partition,
)
from ..spectral import EPS_CLUSTER, EPS_RES, check_tolerances, decompose, partial_sum_norm
from .convergence import BOUND_SLACK, DEFAULT_SCHEDULE, convergence_study
from .exact import float_resonance_by_phase, resonance_tuples_exact
from .generators import (
    GENERATOR_NAME,
    OPERATOR_KINDS,
    conjugated_unitary,
    gen_diagonal_unitary,
    gen_shift_unitary,
    haar_from_rng,
    operator_from_rng,
    parse_phase,
    random_rational_phases,
)

PROPERTIES = (
    "spectral_projections",
    "spectral_reconstruction",
    "pythagoras_nested",
    "engine_agreement",
    "bound_domination",
    "convergence_final",
    "convergence_rate",
    "pair_general_equality",
    "lemma1_bound",
    "reduction_identity",
    "qper_identities",
    "exact_float_agreement",
)

_MAX_RECORDED_FAILURES = 5


@dataclass
class SuiteConfig:
    trials: int = 100
    seed: int = 0
    max_dim: int = 6
    engine_max_dim: int = 5
    spectral_max_dim: int = 8
    max_k: int = 3
    engine_max_m: int = 4
    n_values: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64)
    schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    max_den: int = 12
    eps_cluster: float = EPS_CLUSTER
    eps_res: float = EPS_RES
    sub_trials: int = 50
    exact_trials: int = 20
    exact_max_dim: int = 4
    exact_max_m: int = 5
    exact_phase_sets: Optional[list[list[str]]] = None
    properties: Optional[list[str]] = None

    @classmethod
    def from_dict(cls, data: dict) -> "SuiteConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown suite config keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("n_values", "schedule"):
            if key in data:
                data[key] = tuple(int(n) for n in data[key])
        return cls(**data)

    def validate(self, ceilings: Ceilings) -> None:
        check_tolerances(self.eps_cluster, self.eps_res)
        if self.trials < 0 or self.sub_trials < 0 or self.exact_trials < 0:
            raise ConfigError("trial counts must be non-negative")
        if self.max_dim < 1 or self.engine_max_dim < 1 or self.spectral_max_dim < 1:
            raise ConfigError("dimensions must be >= 1")
        if self.properties is not None:
            bad = set(self.properties) - set(PROPERTIES)
            if bad:
                raise ConfigError(f"unknown properties: {sorted(bad)}")
        if not 1 <= self.max_k:
            raise ConfigError("max_k must be >= 1")
        if self.max_k > MAX_PAIR_K:
            raise ResourceError(f"max_k={self.max_k} exceeds the enumeration limit {MAX_PAIR_K}")
        worst = max(self.max_dim, self.engine_max_dim) ** (2 * self.max_k)
        if worst > ceilings.tuples:
            raise ResourceError(
                f"max_k={self.max_k} at dimension {self.max_dim} needs up to {worst} "
                f"cluster tuples; ceiling is {ceilings.tuples:g}",
                estimate=worst, ceiling=ceilings.tuples,
            )


@dataclass
class PropertyResult:
    name: str
    tolerance: float
    trials: int = 0
    checks: int = 0
    worst_residual: float = 0.0
    failures: list = field(default_factory=list)
    failure_count: int = 0

    @property
    def passed(self) -> bool:
        return self.failure_count == 0

    def record(self, residual: float, ok: bool, seed, inputs: Callable[[], dict]):
        self.checks += 1
        if math.isfinite(residual):
            self.worst_residual = max(self.worst_residual, float(residual))
        else:
            self.worst_residual = math.inf
        if not ok:
            self.failure_count += 1
            if len(self.failures) < _MAX_RECORDED_FAILURES:
                self.failures.append({"seed": list(seed), "residual": _num(residual),
                                      "inputs": inputs()})

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "trials": self.trials,
            "checks": self.checks,
            "tolerance": self.tolerance,
            "worst_residual": _num(self.worst_residual),
            "failure_count": self.failure_count,
            "failures": self.failures,
        }


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _matrix_json(a) -> list:
    a = np.asarray(a)
    return [[[float(v.real), float(v.imag)] for v in row] for row in a]


def _rng(cfg: SuiteConfig, prop: str, trial: int):
    seed = (cfg.seed, PROPERTIES.index(prop), trial)
    return np.random.default_rng(np.random.SeedSequence(list(seed))), seed


def _random_unitary(rng, d: int, kind: str, max_den: int):
    """``(U, phases or None)`` for one of haar / rational / shift / identity."""
    if kind == "haar":
        return haar_from_rng(rng, d), None
    if kind == "rational":
        phases = random_rational_phases(rng, d, max_den)
        return conjugated_unitary(rng, phases), phases
    if kind == "shift":
        return gen_shift_unitary(d), [Fraction(j, d) for j in range(d)]
    if kind == "identity":
        return np.eye(d, dtype=np.complex128), [Fraction(0)] * d
    raise ValueError(kind)


def _random_ops(rng, d: int, count: int):
    kinds = [OPERATOR_KINDS[int(rng.integers(len(OPERATOR_KINDS)))] for _ in range(count)]
    return [operator_from_rng(rng, d, kind) for kind in kinds]


def _phases_json(phases):
    return None if phases is None else [str(Fraction(p)) for p in phases]


# ------------------------------------------------------------- properties


def _spectral(cfg: SuiteConfig, n: int):
    proj = PropertyResult("spectral_projections", 1e-8, n)
    recon = PropertyResult("spectral_reconstruction", 1e-7, n)
    for t in range(n):
        rng, seed = _rng(cfg, "spectral_projections", t)
        d = int(rng.integers(1, cfg.spectral_max_dim + 1))
        kind = ("haar", "rational", "shift")[t % 3]
        u, phases = _random_unitary(rng, d, kind, cfg.max_den)
        sd = decompose(u, cfg.eps_cluster, cfg.eps_res)
        es = sd.projections
        eye = np.eye(d)
        res = [np.linalg.norm(es.sum(axis=0) - eye)]
        for e in es:
            res.append(np.linalg.norm(e @ e - e))
            res.append(np.linalg.norm(e - e.conj().T))
        for a, b in itertools.permutations(range(len(es)), 2):
            res.append(np.linalg.norm(es[a] @ es[b]))
        worst = float(max(res))

        def inputs():
            return {"d": d, "kind": kind, "phases": _phases_json(phases), "U": _matrix_json(u)}

        proj.record(worst, worst <= proj.tolerance, seed, inputs)
        r = float(np.linalg.norm(sd.reconstruct() - u))
        recon.record(r, r <= recon.tolerance, seed, inputs)
    return [proj, recon]


def _resonant_phase_set(rng, count: int, max_den: int) -> list:
    """Phases whose adjoint part has exactly ``count`` clusters, plus generic extras."""
    if count == 2:
        n_self = 2 * int(rng.integers(2))
    else:
        n_self = count % 2
    res: list = [[Fraction(0), Fraction(1, 2)][i]
                 for i in rng.permutation(2)[:n_self]]
    while len(res) < count:
        den = int(rng.integers(3, max_den + 1))
        p = Fraction(int(rng.integers(1, den)), den)
        if p != Fraction(1, 2) and p not in res and 1 - p not in res:
            res += [p, 1 - p]
    out = list(res)
    for _ in range(int(rng.integers(0, 3))):
        while True:
            g = float(rng.uniform())
            if all(abs(((g - float(q)) + 0.5) % 1 - 0.5) > 1e-3
                   and abs(((g + float(q)) + 0.5) % 1 - 0.5) > 1e-3 for q in out) \
                    and abs((2 * g + 0.5) % 1 - 0.5) > 1e-3:
                out.append(g)
                break
    if rng.uniform() < 0.5:
        out.append(out[int(rng.integers(len(out)))])
    return out


def _pythagoras(cfg: SuiteConfig, n: int):
    prop = PropertyResult("pythagoras_nested", 1e-9, n)
    for t in range(n):
        rng, seed = _rng(cfg, "pythagoras_nested", t)
        r = 1 + t % 3
        phases = _resonant_phase_set(rng, r, cfg.max_den)
        u = conjugated_unitary(rng, phases)
        d = len(phases)
        sd = decompose(u, cfg.eps_cluster, cfg.eps_res)
        a = operator_from_rng(rng, d, "dense")
        x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        adj = list(sd.adjoint_part)
        terms = {c: sd.clusters[c].projection @ a @ sd.clusters[sd.partner[c]].projection @ x
                 for c in adj}

        def partial(sub):
            return sum((terms[c] for c in sub), np.zeros(d, dtype=np.complex128))

        worst = 0.0
        ok = len(adj) == r
        subsets = [s for size in range(len(adj) + 1) for s in itertools.combinations(adj, size)]
        for g in subsets:
            try:
                partial_sum_norm(sd, a, g, x)
            except Exception:
                ok = False
            for size in range(len(g) + 1):
                for f in itertools.combinations(g, size):
                    lhs = np.linalg.norm(partial(g) - partial(f)) ** 2
                    rhs = sum(np.linalg.norm(terms[c]) ** 2 for c in g if c not in f)
                    worst = max(worst, abs(lhs - rhs))
        prop.record(worst, ok and worst <= prop.tolerance, seed,
                    lambda: {"phases": [str(p) for p in phases], "adjoint_part": adj})
    return [prop]


def _random_labels(rng, m: int, max_k: int):
    return make_partition([int(rng.integers(1, max_k + 1)) for _ in range(m)])


def _engines(cfg: SuiteConfig, n: int):
    prop = PropertyResult("engine_agreement", 1e-9, n)
    for t in range(n):
        rng, seed = _rng(cfg, "engine_agreement", t)
        d = int(rng.integers(1, cfg.engine_max_dim + 1))
        m = int(rng.integers(1, cfg.engine_max_m + 1))
        part = _random_labels(rng, m, cfg.max_k)
        kind = ("haar", "rational", "shift", "rational")[t % 4]
        u, phases = _random_unitary(rng, d, kind, cfg.max_den)
        ops = _random_ops(rng, d, m - 1)
        sys = EntangledSystem.build(decompose(u, cfg.eps_cluster, cfg.eps_res), ops, part)
        scale = max(1.0, float(np.prod([np.linalg.norm(a) for a in ops])))
        for n_ in cfg.n_values:
            diff = np.linalg.norm(average_time_domain(sys, u, n_) - average_kernel(sys, n_))
            rel = float(diff) / scale
            prop.record(rel, rel <= prop.tolerance, seed, lambda: {
                "d": d, "partition": part.literal(), "N": n_, "kind": kind,
                "phases": _phases_json(phases), "U": _matrix_json(u),
                "ops": [_matrix_json(a) for a in ops]})
    return [prop]


def _convergence(cfg: SuiteConfig, n: int):
    dom = PropertyResult("bound_domination", BOUND_SLACK, n)
    final = PropertyResult("convergence_final", 1e-2, n)
    rate = PropertyResult("convergence_rate", 0.0, n)
    pairs = enumerate_pair_partitions(2)
    for t in range(n):
        rng, seed = _rng(cfg, "bound_domination", t)
        d = int(rng.integers(2, min(cfg.max_dim, 5) + 1))
        phases = random_rational_phases(rng, d, cfg.max_den)
        u = conjugated_unitary(rng, phases)
        sd = decompose(u, cfg.eps_cluster, cfg.eps_res)
        ops = _random_ops(rng, d, 3)
        for part in pairs:
            sys = EntangledSystem(sd, tuple(ops), part)
            rep = convergence_study(sys, cfg.schedule, cfg.eps_res, check=False)

            def inputs():
                return {"partition": part.literal(), "phases": [str(p) for p in phases],
                        "distances": list(rep.distances), "bounds": list(rep.bounds)}

            excess = max(dd - b for dd, b in zip(rep.distances, rep.bounds))
            dom.record(max(excess, 0.0), rep.dominated, seed, inputs)
            if rep.resonance_gap >= 0.1:
                final.record(rep.distances[-1], rep.distances[-1] <= final.tolerance,
                             seed, inputs)
            gap, count, chain = rep.resonance_gap, rep.nonresonant_tuples, rep.max_chain_norm
            if count and gap >= 1e-3:
                n_last = rep.schedule[-1]
                closed = 2.0 / (n_last * gap) * count * chain
                excess = rep.distances[-1] - closed
                rate.record(max(excess, 0.0), excess <= rep.slack, seed, inputs)
    return [dom, final, rate]


def _pair_general(cfg: SuiteConfig, n: int):
    prop = PropertyResult("pair_general_equality", 1e-10, n)
    pairs = [p for k in range(1, cfg.max_k + 1) for p in enumerate_pair_partitions(k)]
    for t in range(n):
        rng, seed = _rng(cfg, "pair_general_equality", t)
        part = pairs[int(rng.integers(len(pairs)))]
        d = int(rng.integers(1, cfg.max_dim + 1))
        kind = ("rational", "shift", "haar", "rational")[t % 4]
        u, phases = _random_unitary(rng, d, kind, cfg.max_den)
        ops = _random_ops(rng, d, part.m - 1)
        sys = EntangledSystem.build(decompose(u, cfg.eps_cluster, cfg.eps_res), ops, part)
        diff = float(np.linalg.norm(limit_pair_partition(sys) - limit_general(sys, cfg.eps_res)[0]))
        prop.record(diff, diff <= prop.tolerance, seed, lambda: {
            "d": d, "partition": part.literal(), "kind": kind,
            "phases": _phases_json(phases), "U": _matrix_json(u)})
    return [prop]


def _lemma1(cfg: SuiteConfig, n: int):
    prop = PropertyResult("lemma1_bound", 1e-6, n)
    pairs = [p for k in range(1, cfg.max_k + 1) for p in enumerate_pair_partitions(k)]
    for t in range(n):
        rng, seed = _rng(cfg, "lemma1_bound", t)
        part = pairs[int(rng.integers(len(pairs)))]
        d = int(rng.integers(1, cfg.max_dim + 1))
        if t % 10 == 0:
            # saturating case: U = I, all A_j = I, x = y
            u, phases = np.eye(d, dtype=np.complex128), [Fraction(0)] * d
            ops = [np.eye(d, dtype=np.complex128)] * (part.m - 1)
            x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            x /= np.linalg.norm(x)
            y = x
        else:
            kind = ("rational", "shift", "haar")[t % 3]
            u, phases = _random_unitary(rng, d, kind, cfg.max_den)
            ops = [a * rng.uniform(0.5, 2.0) for a in _random_ops(rng, d, part.m - 1)]
            x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            y = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        sys = EntangledSystem.build(decompose(u, cfg.eps_cluster, cfg.eps_res), ops, part)
        try:
            lhs, rhs = lemma1_bound_check(sys, x, y)
            excess, ok = lhs / rhs - 1.0 if rhs > 0 else 0.0, True
        except AssertionError:
            excess, ok = math.inf, False
        prop.record(max(excess, 0.0), ok and excess <= prop.tolerance, seed, lambda: {
            "d": d, "partition": part.literal(), "phases": _phases_json(phases)})
    return [prop]


def _reduction(cfg: SuiteConfig, n: int):
    prop = PropertyResult("reduction_identity", 1e-9, n)
    pairs = [p for k in (2, 3) if k <= max(cfg.max_k, 2) for p in enumerate_pair_partitions(k)]
    for t in range(n):
        rng, seed = _rng(cfg, "reduction_identity", t)
        part = pairs[int(rng.integers(len(pairs)))]
        d = int(rng.integers(2, cfg.max_dim + 1))
        phases = _resonant_phase_set(rng, int(rng.integers(1, 4)), cfg.max_den)[:d]
        phases += random_rational_phases(rng, d - len(phases), cfg.max_den)
        u = conjugated_unitary(rng, phases)
        sd = decompose(u, cfg.eps_cluster, cfg.eps_res)
        ops = _random_ops(rng, d, part.m - 1)
        sys = EntangledSystem(sd, tuple(ops), part)
        c = int(rng.integers(len(sd)))
        x = sd.clusters[c].projection @ (rng.standard_normal(d) + 1j * rng.standard_normal(d))
        x /= np.linalg.norm(x)
        y = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        red = reduce_partition(sys, c)
        lhs = np.vdot(y, limit_pair_partition(sys) @ x)
        rhs = np.vdot(y, red.left @ limit_pair_partition(red.system) @ red.right @ x)
        diff = float(abs(lhs - rhs))
        prop.record(diff, diff <= prop.tolerance, seed, lambda: {
            "partition": part.literal(), "phases": [str(Fraction(p)) if not isinstance(p, float)
                                                    else repr(p) for p in phases],
            "cluster": c})
    return [prop]


def _qper(cfg: SuiteConfig, n: int):
    prop = PropertyResult("qper_identities", 1e-9, n)
    for t in range(n):
        rng, seed = _rng(cfg, "qper_identities", t)
        d = int(rng.integers(1, cfg.max_dim + 1))
        phases = random_rational_phases(rng, d, cfg.max_den)
        u = conjugated_unitary(rng, phases) if t % 2 else gen_diagonal_unitary(phases)
        sd = decompose(u, cfg.eps_cluster, cfg.eps_res)
        a, b, c = _random_ops(rng, d, 3)
        res = qper_identities(sd, a, b, c)
        worst = max(res.values())
        prop.record(worst, worst <= prop.tolerance, seed, lambda: {
            "phases": [str(p) for p in phases], "residuals": res})
    return [prop]


def _exact(cfg: SuiteConfig, n: int):
    prop = PropertyResult("exact_float_agreement", 0.0, n)
    if cfg.exact_phase_sets is not None:
        sets = [[parse_phase(str(p)) for p in s] for s in cfg.exact_phase_sets]
        prop.trials = len(sets)
    else:
        sets = []
        for t in range(n):
            rng, _ = _rng(cfg, "exact_float_agreement", t)
            d = int(rng.integers(1, cfg.exact_max_dim + 1))
            sets.append(random_rational_phases(rng, d, cfg.max_den, distinct=True))
    parts = [p for m in range(1, cfg.exact_max_m + 1) for p in enumerate_partitions(m)]
    for t, phases in enumerate(sets):
        seed = (cfg.seed, PROPERTIES.index("exact_float_agreement"), t)
        sd = decompose(gen_diagonal_unitary(phases), cfg.eps_cluster, cfg.eps_res)
        for part in parts:
            exact = sorted(r.assignment for r in resonance_tuples_exact(phases, part))
            fl = float_resonance_by_phase(sd, phases, part, cfg.eps_res)
            ok = fl == exact
            mismatch = math.inf if fl is None else len(set(exact) ^ set(fl))
            prop.record(mismatch, ok, seed, lambda: {
                "phases": [str(p) for p in phases], "partition": part.literal(),
                "exact_count": len(exact),
                "float_count": None if fl is None else len(fl),
                "clusters": len(sd)})
    return [prop]


_RUNNERS = (
    (("spectral_projections", "spectral_reconstruction"), _spectral, "trials"),
    (("pythagoras_nested",), _pythagoras, "trials"),
    (("engine_agreement",), _engines, "trials"),
    (("bound_domination", "convergence_final", "convergence_rate"), _convergence, "sub"),
    (("pair_general_equality",), _pair_general, "trials"),
    (("lemma1_bound",), _lemma1, "trials"),
    (("reduction_identity",), _reduction, "sub"),
    (("qper_identities",), _qper, "sub"),
    (("exact_float_agreement",), _exact, "exact"),
)


def run_suite(cfg: SuiteConfig, ceilings: Optional[Ceilings] = None) -> dict:
    """Run every selected property; returns the report as a dict."""
    ceilings = ceilings or Ceilings.from_env()
    cfg.validate(ceilings)
    wanted = set(cfg.properties) if cfg.properties is not None else set(PROPERTIES)
    results: list[PropertyResult] = []
    if cfg.trials > 0:
        for names, runner, budget in _RUNNERS:
            if not wanted & set(names):
                continue
            n = {"trials": cfg.trials,
                 "sub": min(cfg.trials, cfg.sub_trials),
                 "exact": min(cfg.trials, cfg.exact_trials)}[budget]
            results += [r for r in runner(cfg, n) if r.name in wanted]
    return {
        "header": {
            "generator": GENERATOR_NAME,
            "seeding": "SeedSequence([seed, property_index, trial])",
            "config": _config_json(cfg),
        },
        "properties": [r.to_dict() for r in results],
        "status": "pass" if all(r.passed for r in results) else "fail",
        "failed": [r.name for r in results if not r.passed],
    }


def _config_json(cfg: SuiteConfig) -> dict:
    out = asdict(cfg)
    for key in ("n_values", "schedule"):
        out[key] = list(out[key])
    return out


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
