"""Benchmark tests: autocorrelation energy and merit factor, the weighted CNF
parser and evaluators, the mixed Ackley function, problem construction, and
the random-search baseline.
"""

import math

import numpy as np
import pytest

from bodikit.benchmarks import (
    ACKLEY_CONTINUOUS_BOUNDS,
    KNOWN_OPTIMAL_MERIT_N50_CONVENTIONAL,
    MeritConvention,
    Problem,
    WcnfInstance,
    ackley_mixed,
    labs_energy,
    labs_merit,
    load_wcnf,
    make_problem,
    maxsat_value,
    maxsat_value_unsat,
    parse_wcnf,
    random_search,
    serialize_wcnf,
    synthetic_wcnf,
)
from bodikit.exceptions import (
    ConfigError,
    ProblemFileNotFoundError,
    WcnfParseError,
)

BARKER_13 = [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1]


def _energy_reference(seq):
    """Double loop over lags, written independently of the implementation."""
    n = len(seq)
    total = 0
    for k in range(1, n):
        c = 0
        for i in range(n - k):
            c += seq[i] * seq[i + k]
        total += c * c
    return total


class TestLabsEnergy:
    def test_barker_13(self):
        assert labs_energy(BARKER_13) == 6

    def test_alternating_sequence(self):
        # [1,-1,1,-1]: C_1 = -3, C_2 = 2, C_3 = -1 -> 9 + 4 + 1 = 14
        assert labs_energy([1, -1, 1, -1]) == 14

    def test_matches_double_loop_reference(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 40))
            seq = rng.choice([-1, 1], size=n)
            assert labs_energy(seq) == _energy_reference(seq.tolist())

    def test_negation_and_reversal_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            seq = rng.choice([-1, 1], size=int(rng.integers(3, 25)))
            e = labs_energy(seq)
            assert labs_energy(-seq) == e
            assert labs_energy(seq[::-1]) == e

    def test_brute_force_minima_small_n(self):
        # exhaustive minimum over all 2^n sequences, n = 3 checked by hand
        expected_min = {}
        for n in range(3, 13):
            best = None
            for code in range(2 ** n):
                seq = [1 if (code >> k) & 1 else -1 for k in range(n)]
                e = _energy_reference(seq)
                best = e if best is None else min(best, e)
            expected_min[n] = best
        assert expected_min[3] == 1
        for n in range(3, 13):
            best_impl = min(
                labs_energy([1 if (code >> k) & 1 else -1 for k in range(n)])
                for code in range(2 ** n)
            )
            assert best_impl == expected_min[n]

    def test_rejects_non_pm_one(self):
        with pytest.raises(ValueError):
            labs_energy([1, 0, 1])
        with pytest.raises(ValueError):
            labs_energy([1])


class TestLabsMerit:
    def test_barker_13_conventional(self):
        merit = labs_merit(BARKER_13)
        assert merit == pytest.approx(169 / 12, rel=1e-12)

    def test_doubled_convention_is_twice_conventional(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            seq = rng.choice([-1, 1], size=int(rng.integers(3, 30)))
            conventional = labs_merit(seq, convention=MeritConvention.CONVENTIONAL)
            doubled = labs_merit(seq, convention=MeritConvention.DOUBLED)
            assert doubled == pytest.approx(2 * conventional, rel=1e-12)

    def test_documented_n50_constant(self):
        assert KNOWN_OPTIMAL_MERIT_N50_CONVENTIONAL == pytest.approx(8.170)


WCNF_GOLDEN = """\
c three variables, four clauses
p wcnf 3 4 10
1 1 -2 0
2 2 3 0
10 -1 0
5 1 2 3 0
"""


class TestWcnfParser:
    def test_golden_instance(self):
        inst = parse_wcnf(WCNF_GOLDEN)
        assert inst.num_vars == 3
        assert inst.num_clauses == 4
        assert inst.top == 10
        assert inst.clauses[0] == (1, (1, -2))
        assert inst.clauses[2] == (10, (-1,))
        assert inst.total_weight == 18

    def test_header_without_top(self):
        inst = parse_wcnf("p wcnf 2 1\n3 1 2 0\n")
        assert inst.top is None

    def test_blank_lines_and_comments_skipped(self):
        text = "c hi\n\nc more\np wcnf 1 1 5\n\nc mid\n1 1 0\n\n"
        assert parse_wcnf(text).num_clauses == 1

    def test_error_lines_are_reported(self):
        cases = [
            ("p wcnf 2 1 5\np wcnf 2 1 5\n1 1 0\n", 2, "duplicate"),
            ("p cnf 2 1\n1 1 0\n", 1, "malformed header"),
            ("p wcnf two 1\n1 1 0\n", 1, "non-integer"),
            ("1 1 0\np wcnf 1 1\n", 1, "before header"),
            ("p wcnf 2 1\n1 1 2\n", 2, "terminating 0"),
            ("p wcnf 2 1\n1 1 0 2 0\n", 2, "0 inside"),
            ("p wcnf 2 1\n0 1 0\n", 2, "positive"),
            ("p wcnf 2 1\n-3 1 0\n", 2, "positive"),
            ("p wcnf 2 1\n1 0\n", 2, "empty clause"),
            ("p wcnf 2 1\n1 5 0\n", 2, "out of range"),
            ("p wcnf 2 1\n1 x 0\n", 2, "non-integer"),
            ("c only comments\n", 1, "missing"),
            ("p wcnf 2 3 9\n1 1 0\n", 1, "declares 3 clauses"),
        ]
        for text, line, fragment in cases:
            with pytest.raises(WcnfParseError) as err:
                parse_wcnf(text)
            assert err.value.line == line, text
            assert fragment in str(err.value), text
            assert f"line {line}:" in str(err.value)

    def test_round_trip_corpus(self):
        instances = [
            parse_wcnf(WCNF_GOLDEN),
            WcnfInstance(num_vars=1, clauses=((1, (1,)),), top=None),
            WcnfInstance(num_vars=1, clauses=((7, (-1,)),), top=7),
            WcnfInstance(num_vars=4, clauses=((2, (1, -2, 3, -4)),), top=None),
            WcnfInstance(num_vars=2, clauses=((1, (1,)), (1, (-1,)),), top=None),
            WcnfInstance(num_vars=3, clauses=tuple((w, (1, 2)) for w in range(1, 6)),
                         top=100),
            WcnfInstance(num_vars=5, clauses=((10 ** 9, (5, -4)),), top=10 ** 9),
            synthetic_wcnf(10, 30, seed=0),
            synthetic_wcnf(3, 5, seed=1, max_clause_len=2, max_weight=2),
            synthetic_wcnf(60, 120, seed=2),
        ]
        assert len(instances) >= 10
        for inst in instances:
            text = serialize_wcnf(inst)
            back = parse_wcnf(text)
            assert back == inst
            assert serialize_wcnf(back) == text

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ProblemFileNotFoundError):
            load_wcnf(str(tmp_path / "nope.wcnf"))

    def test_load_reads_file(self, tmp_path):
        path = tmp_path / "inst.wcnf"
        path.write_text(WCNF_GOLDEN)
        assert load_wcnf(str(path)) == parse_wcnf(WCNF_GOLDEN)


class TestMaxsatValue:
    def test_golden_assignment(self):
        inst = parse_wcnf(WCNF_GOLDEN)
        # [1,0,1]: clause 3 (weight 10) is falsified, others satisfied
        assert maxsat_value(inst, [1, 0, 1]) == 8
        assert maxsat_value_unsat(inst, [1, 0, 1]) == 10

    def test_all_true_all_false(self):
        inst = parse_wcnf(WCNF_GOLDEN)
        assert maxsat_value(inst, [1, 1, 1]) == 1 + 2 + 0 + 5
        assert maxsat_value(inst, [0, 0, 0]) == 1 + 0 + 10 + 0

    def test_complementarity(self):
        """Satisfied plus falsified weight equals total weight, via two
        independent evaluators."""
        rng = np.random.default_rng(4)
        for seed in range(20):
            inst = synthetic_wcnf(12, 40, seed=seed)
            for _ in range(10):
                a = rng.integers(0, 2, size=12)
                sat = maxsat_value(inst, a)
                unsat = maxsat_value_unsat(inst, a)
                assert sat + unsat == inst.total_weight

    def test_exclude_top_drops_hard_clauses(self):
        inst = parse_wcnf(WCNF_GOLDEN)
        # a = [0,1,0]: clauses worth 2 and 5 are satisfied, the hard
        # clause (weight 10 = top) is satisfied but excluded
        assert maxsat_value(inst, [0, 1, 0], exclude_top=True) == 7
        assert maxsat_value(inst, [0, 1, 0], exclude_top=False) == 17
        # only the weight-10 clause equals top; the weight-5 clause stays
        assert maxsat_value(inst, [1, 0, 1], exclude_top=True) == 8

    def test_rejects_wrong_assignment_length(self):
        inst = parse_wcnf(WCNF_GOLDEN)
        with pytest.raises(ValueError):
            maxsat_value(inst, [1, 0])


class TestSyntheticWcnf:
    def test_shape_and_validity(self):
        inst = synthetic_wcnf(60, 128, seed=7)
        assert inst.num_vars == 60
        assert inst.num_clauses == 128
        for weight, lits in inst.clauses:
            assert 1 <= weight <= 10
            assert 1 <= len(lits) <= 3
            assert all(1 <= abs(l) <= 60 for l in lits)
            # no duplicate or complementary literals within a clause
            assert len({abs(l) for l in lits}) == len(lits)

    def test_deterministic(self):
        a = synthetic_wcnf(20, 50, seed=3)
        b = synthetic_wcnf(20, 50, seed=3)
        assert a == b
        assert synthetic_wcnf(20, 50, seed=4) != a


class TestAckleyMixed:
    def test_zero_at_origin(self):
        assert ackley_mixed(np.zeros(5, dtype=int), np.zeros(3)) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_all_ones_value(self):
        # every coordinate equal to 1 gives a dimension-free value
        expected = (
            -20 * math.exp(-0.2) - math.exp(1.0) + 20 + math.e
        )
        assert ackley_mixed(np.ones(4, dtype=int), np.ones(2)) == pytest.approx(
            expected, rel=1e-12
        )
        assert expected == pytest.approx(3.6254, abs=5e-5)

    def test_nonnegative_over_random_inputs(self):
        rng = np.random.default_rng(9)
        lo, hi = ACKLEY_CONTINUOUS_BOUNDS
        values = []
        for _ in range(100_000):
            z = rng.integers(0, 2, size=6)
            x = rng.uniform(lo, hi, size=2)
            values.append(ackley_mixed(z, x))
        values = np.array(values)
        assert values.min() >= 0.0
        assert values.max() > 1.0

    def test_permutation_invariance_within_blocks(self):
        rng = np.random.default_rng(10)
        z = rng.integers(0, 2, size=8)
        x = rng.uniform(-1, 1, size=3)
        base = ackley_mixed(z, x)
        assert ackley_mixed(z[::-1], x) == pytest.approx(base, rel=1e-12)
        assert ackley_mixed(z, x[::-1]) == pytest.approx(base, rel=1e-12)
        # mixing a binary coordinate into the continuous block also holds,
        # since the function only sees the concatenation
        assert ackley_mixed(np.concatenate([z, [0]]), x[:2]) == pytest.approx(
            ackley_mixed(z, np.concatenate([x[:2], [0.0]])), rel=1e-12
        )

    def test_binary_only(self):
        value = ackley_mixed(np.ones(3, dtype=int), np.zeros(0))
        expected = -20 * math.exp(-0.2) - math.exp(1.0) + 20 + math.e
        assert value == pytest.approx(expected, rel=1e-12)


class TestMakeProblem:
    def test_labs_problem(self):
        from bodikit import Point

        problem = make_problem("labs:10")
        assert problem.space.is_binary
        assert problem.space.dim == 10
        assert problem.metadata["direction"] == "maximize"
        # maximization is negated at the problem boundary; merit of the
        # all-ones sequence has all C_k = n - k
        value = problem.evaluate(Point(discrete=(1,) * 10))
        e = sum((10 - k) ** 2 for k in range(1, 10))
        assert value == pytest.approx(-100 / (2 * e), rel=1e-12)

    def test_labs_binary_encoding_covers_both_signs(self):
        from bodikit import Point

        problem = make_problem("labs:13")
        # Barker-13 in 0/1 encoding (1 -> 1, -1 -> 0)
        bits = tuple(1 if v == 1 else 0 for v in BARKER_13)
        assert problem.evaluate(Point(discrete=bits)) == pytest.approx(-169 / 12)

    def test_labs_convention_switch(self):
        from bodikit import Point

        doubled = make_problem("labs:13", merit_convention=MeritConvention.DOUBLED)
        bits = tuple(1 if v == 1 else 0 for v in BARKER_13)
        assert doubled.evaluate(Point(discrete=bits)) == pytest.approx(-169 / 6)
        assert doubled.metadata["merit_convention"] == "doubled"

    def test_maxsat_problem(self, tmp_path):
        from bodikit import Point

        path = tmp_path / "golden.wcnf"
        path.write_text(WCNF_GOLDEN)
        problem = make_problem(f"maxsat:{path}")
        assert problem.space.dim == 3
        assert problem.evaluate(Point(discrete=(1, 0, 1))) == -8
        assert problem.metadata["direction"] == "maximize"

    def test_maxsat_missing_file(self, tmp_path):
        with pytest.raises(ProblemFileNotFoundError):
            make_problem(f"maxsat:{tmp_path}/absent.wcnf")

    def test_ackley_problem(self):
        from bodikit import Point

        problem = make_problem("ackley-mixed:6:2")
        assert problem.space.dim == 6
        assert problem.space.n_continuous == 2
        assert problem.optimum == 0.0
        assert problem.metadata["direction"] == "minimize"
        value = problem.evaluate(Point(discrete=(0,) * 6, continuous=(0.0, 0.0)))
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_bad_specs_raise_config_error(self):
        for bad in ("labs", "labs:x", "labs:1", "ackley-mixed:4",
                    "ackley-mixed:0:2", "unknown:3", ""):
            with pytest.raises(ConfigError):
                make_problem(bad)


class TestRandomSearch:
    def test_record_shape_and_monotonicity(self):
        problem = make_problem("labs:12")
        record = random_search(problem, budget=30, seed=5)
        assert len(record.rows) == 30
        assert record.problem_name == problem.name
        values = [row.value for row in record.rows]
        best = [row.best_so_far for row in record.rows]
        assert best == list(np.minimum.accumulate(values))
        assert all(row.iteration == i + 1 for i, row in enumerate(record.rows))
        assert all(row.dict_seed == -1 for row in record.rows)

    def test_determinism(self):
        problem = make_problem("ackley-mixed:5:1")
        a = random_search(problem, budget=20, seed=9)
        b = random_search(problem, budget=20, seed=9)
        assert a.to_csv() == b.to_csv()
        c = random_search(problem, budget=20, seed=10)
        assert a.to_csv() != c.to_csv()

    def test_maximization_negates_internally(self):
        problem = make_problem("labs:8")
        record = random_search(problem, budget=15, seed=1)
        # stored values are negated merits; the reported objective is positive
        assert record.best_value < 0
        assert record.best_objective() == pytest.approx(-record.best_value)
