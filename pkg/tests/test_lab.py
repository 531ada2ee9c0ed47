import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import resonant_by_angles
from ergodic_entangle.entangled import Ceilings, EntangledSystem, cesaro_kernel
from ergodic_entangle.errors import (
    ConfigError,
    ContractViolation,
    DomainError,
    RangeError,
    ResourceError,
)
from ergodic_entangle.lab.convergence import (
    DEFAULT_SCHEDULE,
    ConvergenceReport,
    convergence_study,
    geometric_schedule,
    tail_slope,
)
from ergodic_entangle.lab.exact import (
    common_denominator,
    float_resonance_by_phase,
    resonance_tuples_exact,
)
from ergodic_entangle.lab.generators import (
    conjugated_unitary,
    gen_diagonal_unitary,
    gen_haar_unitary,
    gen_operator,
    gen_shift_unitary,
    parse_phase,
    phase_rational,
    random_rational_phases,
)
from ergodic_entangle.lab.suite import PROPERTIES, SuiteConfig, dumps_report, run_suite
from ergodic_entangle.numerics import frob_norm, is_unitary, op_norm_estimate
from ergodic_entangle.partitions import enumerate_partitions, make_partition
from ergodic_entangle.spectral import decompose

seeds = st.integers(min_value=0, max_value=2**32 - 1)
GOLDEN = (3 - math.sqrt(5)) / 2


class TestPhases:
    def test_normalization(self):
        assert phase_rational(5, 4) == Fraction(1, 4)
        assert phase_rational(-1, 3) == Fraction(2, 3)
        assert parse_phase("1/2") == Fraction(1, 2)
        assert parse_phase(" 0.05 ") == Fraction(1, 20)
        assert parse_phase("3/2") == Fraction(1, 2)

    def test_malformed(self):
        for bad in ("", "1/", "a", "1/0"):
            with pytest.raises(DomainError):
                parse_phase(bad)


class TestUnitaryGenerators:
    def test_diagonal_examples(self):
        assert np.array_equal(gen_diagonal_unitary([0]), [[1]])
        assert np.array_equal(gen_diagonal_unitary([0, Fraction(1, 2)]), np.diag([1, -1]))
        assert np.array_equal(gen_diagonal_unitary([0, 0.25, 0.5, 0.75]),
                              np.diag([1, 1j, -1, -1j]))
        with pytest.raises(DomainError):
            gen_diagonal_unitary([1.0])

    def test_shift_examples(self):
        assert np.array_equal(gen_shift_unitary(2), [[0, 1], [1, 0]])
        sd = decompose(gen_shift_unitary(3))
        assert [c.phase for c in sd.clusters] == pytest.approx([0, 1 / 3, 2 / 3], abs=1e-12)
        assert len(decompose(gen_shift_unitary(4)).adjoint_part) == 4

    @given(seeds, st.integers(min_value=1, max_value=8))
    @settings(max_examples=50, deadline=None)
    def test_haar_unitary(self, seed, d):
        u = gen_haar_unitary(d, seed)
        assert frob_norm(u.conj().T @ u - np.eye(d)) <= 1e-8
        assert np.array_equal(u, gen_haar_unitary(d, seed))

    def test_haar_variation_and_scalar(self):
        assert gen_haar_unitary(1, 3).shape == (1, 1)
        assert abs(abs(gen_haar_unitary(1, 3)[0, 0]) - 1) <= 1e-12
        assert frob_norm(gen_haar_unitary(4, 1) - gen_haar_unitary(4, 2)) > 1e-3

    def test_haar_phases_are_uniform(self):
        # the phase fix makes eigenphases spread over the whole circle
        phases = np.concatenate([np.angle(np.linalg.eigvals(gen_haar_unitary(3, s)))
                                 for s in range(400)])
        hist, _ = np.histogram(phases, bins=4, range=(-np.pi, np.pi))
        assert hist.min() > 0.8 * hist.mean()

    def test_conjugated_spectrum(self, rng):
        phases = [Fraction(1, 3), Fraction(2, 3), Fraction(0)]
        u = conjugated_unitary(rng, phases)
        assert is_unitary(u, 1e-10)
        got = sorted(np.angle(np.linalg.eigvals(u)) / (2 * np.pi) % 1)
        assert got == pytest.approx([0, 1 / 3, 2 / 3], abs=1e-10)


class TestOperatorGenerators:
    @pytest.mark.parametrize("d", [1, 2, 4, 6])
    def test_kinds(self, d):
        for seed in range(5):
            r1 = gen_operator(d, "rankOne", seed)
            sv = np.linalg.svd(r1, compute_uv=False)
            assert len(sv) < 2 or sv[1] <= 1e-8
            h = gen_operator(d, "hermitian", seed)
            assert frob_norm(h - h.conj().T) <= 1e-12
            for kind in ("rankOne", "dense", "hermitian"):
                assert op_norm_estimate(gen_operator(d, kind, seed)) == pytest.approx(1, abs=1e-6)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            gen_operator(2, "sparse", 0)

    def test_random_rational_phases(self, rng):
        for _ in range(20):
            ph = random_rational_phases(rng, 5, 12, distinct=True)
            assert len(set(ph)) == 5
            assert all(0 <= p < 1 and p.denominator <= 12 for p in ph)


class TestExactResonance:
    def test_single_phase(self):
        for labels in [(1,), (1, 1), (1, 2, 1, 3)]:
            got = resonance_tuples_exact([Fraction(0)], make_partition(labels))
            assert [t.assignment for t in got] == [(0,) * len(labels)]

    def test_sign(self):
        got = resonance_tuples_exact([Fraction(0), Fraction(1, 2)], make_partition((1, 1)))
        assert [t.assignment for t in got] == [(0, 0), (1, 1)]

    def test_cube_roots(self):
        phases = [Fraction(0), Fraction(1, 3), Fraction(2, 3)]
        got = resonance_tuples_exact(phases, make_partition((1, 1, 1)))
        assert len(got) == 9
        assert [t.assignment for t in got] == resonant_by_angles(phases, (1, 1, 1))

    def test_guards(self):
        with pytest.raises(DomainError):
            resonance_tuples_exact([Fraction(1, 2), Fraction(3, 2)], make_partition((1, 1)))
        big = [Fraction(1, p) for p in (65521, 65519, 65497)]
        with pytest.raises(RangeError):
            common_denominator(big)

    @given(seeds)
    @settings(max_examples=40, deadline=None)
    def test_matches_angle_oracle(self, seed):
        r = np.random.default_rng(seed)
        phases = random_rational_phases(r, int(r.integers(1, 5)), 12, distinct=True)
        part = make_partition([int(r.integers(1, 4)) for _ in range(int(r.integers(1, 5)))])
        got = [t.assignment for t in resonance_tuples_exact(phases, part)]
        assert got == resonant_by_angles(phases, part.labels)

    def test_float_agreement_all_partitions(self, rng):
        parts = [p for m in range(1, 6) for p in enumerate_partitions(m)]
        for _ in range(6):
            phases = random_rational_phases(rng, int(rng.integers(1, 5)), 12, distinct=True)
            sd = decompose(gen_diagonal_unitary(phases))
            for part in parts:
                exact = [t.assignment for t in resonance_tuples_exact(phases, part)]
                assert float_resonance_by_phase(sd, phases, part, 1e-8) == exact

    def test_float_mapping_fails_when_clusters_merge(self):
        phases = [Fraction(0), Fraction(1, 20)]
        sd = decompose(gen_diagonal_unitary(phases), eps_cluster=0.1, eps_res=0.1)
        assert float_resonance_by_phase(sd, phases, make_partition((1, 1)), 0.1) is None


def _system(u, ops, labels):
    return EntangledSystem.build(decompose(u), ops, make_partition(labels))


class TestConvergence:
    def test_schedule(self):
        assert DEFAULT_SCHEDULE == (8, 16, 32, 64, 128, 256, 512, 1024)
        assert geometric_schedule(3, 3, 3) == (3, 9, 27)
        with pytest.raises(DomainError):
            geometric_schedule(0, 2, 3)
        with pytest.raises(DomainError):
            ConvergenceReport((4, 4), (0, 0), (0, 0), None, 1.0)

    def test_tail_slope(self):
        ns = [8, 16, 32, 64]
        assert tail_slope(ns, [1 / n for n in ns]) == pytest.approx(-1)
        assert tail_slope(ns, [0, 0, 0, 0]) is None
        assert tail_slope([8], [0.1]) is None

    def test_identity(self, rng):
        sys_ = _system(np.eye(3), [gen_operator(3, "dense", 1)] * 3, (1, 2, 1, 2))
        rep = convergence_study(sys_)
        assert rep.distances == (0.0,) * 8
        assert rep.fitted_slope is None
        assert rep.summary()["fittedSlope"] == "n/a"
        assert rep.summary()["boundDomination"] == "pass"

    def test_golden_ratio(self):
        u = np.diag([1, np.exp(2j * np.pi * GOLDEN)])
        a = np.array([[0, 1], [1, 0]], dtype=complex)
        rep = convergence_study(_system(u, [a], (1, 1)))
        # each off-diagonal entry carries mu = z (or its conjugate); z^2 is never resonant
        mu = np.exp(2j * np.pi * GOLDEN)
        for n, dist, bound, ratio in rep.rows():
            assert dist == pytest.approx(math.sqrt(2) * abs(cesaro_kernel(mu, n)), abs=1e-12)
            assert dist <= 2 * math.sqrt(2) / (n * abs(1 - mu)) + 1e-12
            assert ratio <= 1
        assert rep.fitted_slope == pytest.approx(-1, abs=0.3)

    def test_golden_ratio_on_diagonal_squares(self):
        # the squared-phase kernel appears for A = ones with partition (1,1)
        z = np.exp(2j * np.pi * GOLDEN)
        u = np.diag([1, z])
        rep = convergence_study(_system(u, [np.ones((2, 2))], (1, 2)))
        assert rep.dominated

    def test_haar_rank_one(self):
        u = gen_haar_unitary(4, 7)
        ops = [gen_operator(4, "rankOne", s) for s in (1, 2, 3)]
        rep = convergence_study(_system(u, ops, (1, 2, 1, 2)))
        tail = rep.distances[len(rep.distances) // 2:]
        assert all(b < a for a, b in zip(tail, tail[1:]))
        assert rep.distances[-1] <= 1e-1
        assert rep.dominated

    def test_domination_failure_is_raised(self, monkeypatch):
        import ergodic_entangle.lab.convergence as conv

        def broken(sys_, n, eps_res, ceilings):
            z = np.zeros((2, 2))
            return z + 1, z, 0.5, 1.0, 1, 1.0

        monkeypatch.setattr(conv, "_kernel_study", broken)
        sys_ = _system(np.eye(2), [np.eye(2)], (1, 1))
        with pytest.raises(ContractViolation):
            conv.convergence_study(sys_, (1, 2))
        rep = conv.convergence_study(sys_, (1, 2), check=False)
        assert rep.summary()["boundDomination"] == "fail"
        assert "inf" not in rep.to_csv()

    def test_csv_layout(self):
        sys_ = _system(np.diag([1, -1]), [np.ones((2, 2))], (1, 1))
        rep = convergence_study(sys_, (1, 2, 3))
        lines = rep.to_csv().splitlines()
        assert lines[0] == "N,distance,bound,ratio"
        assert len(lines) == 4
        assert lines[2].startswith("2,")

    def test_deterministic(self):
        u = gen_haar_unitary(3, 4)
        ops = [gen_operator(3, "dense", s) for s in (1, 2, 3)]
        a = convergence_study(_system(u, ops, (1, 2, 2, 1)))
        b = convergence_study(_system(u, ops, (1, 2, 2, 1)))
        assert a.to_csv() == b.to_csv()
        assert json.dumps(a.summary()) == json.dumps(b.summary())


SMALL = dict(trials=6, sub_trials=4, exact_trials=3,
             n_values=[1, 2, 4])


class TestSuite:
    def test_small_run_passes(self):
        rep = run_suite(SuiteConfig.from_dict(SMALL))
        assert rep["status"] == "pass", rep["failed"]
        assert [p["name"] for p in rep["properties"]] == list(PROPERTIES)
        assert rep["header"]["generator"].startswith("numpy")

    def test_empty_trials(self):
        rep = run_suite(SuiteConfig(trials=0))
        assert rep["properties"] == [] and rep["status"] == "pass"

    def test_negative_control(self):
        cfg = SuiteConfig.from_dict({"eps_res": 0.1, "eps_cluster": 0.1,
                                     "exact_phase_sets": [["0", "1/20"]],
                                     "properties": ["exact_float_agreement"]})
        rep = run_suite(cfg)
        assert rep["status"] == "fail"
        assert rep["failed"] == ["exact_float_agreement"]
        fail = rep["properties"][0]["failures"][0]
        assert fail["inputs"]["phases"] == ["0", "1/20"]
        assert fail["seed"] == [0, PROPERTIES.index("exact_float_agreement"), 0]

    def test_selection_and_determinism(self):
        cfg = dict(SMALL, properties=["qper_identities", "lemma1_bound"])
        a = dumps_report(run_suite(SuiteConfig.from_dict(cfg)))
        b = dumps_report(run_suite(SuiteConfig.from_dict(cfg)))
        assert a == b
        names = [p["name"] for p in json.loads(a)["properties"]]
        assert names == ["lemma1_bound", "qper_identities"]

    def test_seed_changes_report(self):
        cfg = dict(SMALL, properties=["lemma1_bound"])
        a = dumps_report(run_suite(SuiteConfig.from_dict(cfg)))
        b = dumps_report(run_suite(SuiteConfig.from_dict(dict(cfg, seed=1))))
        assert a != b

    def test_config_errors(self):
        with pytest.raises(ConfigError):
            SuiteConfig.from_dict({"trails": 3})
        with pytest.raises(ConfigError):
            run_suite(SuiteConfig(properties=["nope"]))
        with pytest.raises(ConfigError):
            run_suite(SuiteConfig(eps_res=1e-6, eps_cluster=1e-8))
        with pytest.raises(ConfigError):
            run_suite(SuiteConfig(trials=-1))
        with pytest.raises(ResourceError):
            run_suite(SuiteConfig(max_k=7))
        with pytest.raises(ResourceError):
            run_suite(SuiteConfig(max_k=5), Ceilings(tuples=1e6))
