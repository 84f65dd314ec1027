import random
import unittest

import numpy as np
import pytest

from lifetraces.ca_core import LocalRule, Pattern, and_rule, apply_rule, game_of_life, pad0
from lifetraces.exceptions import BudgetExceeded, ProvenanceError
from lifetraces.preimage import (
    PreimageProblem,
    Verdict,
    achievable_images,
    boundary_extension_probe,
    brute_force_preimage,
    decode_dimacs_model,
    find_bordered_preimage,
    find_preimage,
    image_code,
    is_finite_goe,
    is_orphan,
    sweep_padding,
    to_dimacs,
)
from lifetraces.traces import TraceConstants, game_of_life_constants


def pattern_from_code(code: int, m: int, n: int) -> Pattern:
    grid = np.zeros((m, n), dtype=np.uint8)
    for a in range(m):
        for b in range(n):
            grid[a, b] = (code >> (a * n + b)) & 1
    return Pattern.from_array(grid)


def dimacs_clauses(text: str):
    header = None
    clauses = []
    for line in text.splitlines():
        if line.startswith("c"):
            continue
        if line.startswith("p"):
            header = tuple(int(v) for v in line.split()[2:])
            continue
        literals = [int(v) for v in line.split()]
        clauses.append(literals[:-1])
    return header, clauses


def sat_solver():
    """Returns problem -> witness or None, or skips the test when python-sat is missing"""
    try:
        from pysat.solvers import Solver
    except ImportError:
        raise unittest.SkipTest("python-sat is not installed")

    def solve(problem: PreimageProblem):
        _, clauses = dimacs_clauses(to_dimacs(problem))
        with Solver(name="m22", bootstrap_with=clauses) as solver:
            if not solver.solve():
                return None
            return decode_dimacs_model(problem, solver.get_model())

    return solve


SMALL_SHAPES = [(m, n) for m in range(1, 4) for n in range(1, 4)]


class TestPreimageSearch(unittest.TestCase):
    """The backtracking searcher against exhaustive enumeration"""

    def setUp(self):
        self.life = game_of_life()
        self.block = Pattern.from_rows(["OO", "OO"])

    def test_block_has_preimage(self):
        """Test that the block has a witness mapping onto it"""
        outcome = find_preimage(PreimageProblem(self.life, self.block))
        self.assertEqual(outcome.verdict, Verdict.SAT)
        self.assertEqual(apply_rule(self.life, outcome.witness), self.block)
        self.assertEqual(outcome.witness.rect, (-1, -1, 4, 4))
        self.assertEqual(outcome.to_dict()["verdict"], "SAT")

    def test_all_two_by_two_targets(self):
        """Test every 2x2 target against brute force and the achievable images"""
        achievable = achievable_images(self.life, 2, 2)
        for code in range(16):
            target = pattern_from_code(code, 2, 2)
            self.assertEqual(image_code(target), code)
            with self.subTest(code=code):
                outcome = find_preimage(PreimageProblem(self.life, target))
                oracle = brute_force_preimage(self.life, target)
                self.assertEqual(outcome.verdict, oracle.verdict)
                self.assertEqual(outcome.verdict is Verdict.SAT, code in achievable)
                if oracle.witness is not None:
                    self.assertEqual(apply_rule(self.life, oracle.witness), target)

    @pytest.mark.slow
    def test_random_three_by_three_targets(self):
        """Test 200 random 3x3 targets against the achievable images"""
        achievable = achievable_images(self.life, 3, 3)
        rng = random.Random(5)
        for trial in range(200):
            code = rng.randrange(1 << 9)
            with self.subTest(code=code):
                outcome = find_preimage(PreimageProblem(self.life, pattern_from_code(code, 3, 3)))
                self.assertEqual(outcome.verdict is Verdict.SAT, code in achievable)

    def test_budget(self):
        """Test that a one-node budget leaves the search undecided"""
        outcome = find_preimage(PreimageProblem(self.life, self.block), budget_nodes=1)
        self.assertEqual(outcome.verdict, Verdict.INDETERMINATE)
        self.assertTrue(outcome.reason)
        with self.assertRaises(BudgetExceeded):
            is_orphan(self.block, self.life, budget_nodes=1)

    def test_parallel_search_agrees(self):
        """Test that splitting into prefixes gives the sequential witness"""
        problem = PreimageProblem(self.life, Pattern.from_rows(["O"]))
        sequential = find_preimage(problem, threads=1)
        parallel = find_preimage(problem, threads=2)
        self.assertEqual(parallel.verdict, sequential.verdict)
        self.assertEqual(parallel.witness, sequential.witness)

    def test_conjunction_orphan(self):
        """Test an orphan of the rule that needs a full 3x3 block of ones"""
        rule = and_rule()
        self.assertTrue(is_orphan(Pattern.from_rows(["O.O"]), rule))
        self.assertFalse(is_orphan(Pattern.from_rows(["O"]), rule))

    def test_problem_validation(self):
        """Test argument checks on the problem"""
        with self.assertRaises(ValueError):
            PreimageProblem(self.life, self.block, zero_border=-1)
        with self.assertRaises(ValueError):
            PreimageProblem(self.life, Pattern({(0, 0): 1, (5, 5): 1}))

    def test_brute_force_limit(self):
        """Test that enumeration refuses large domains"""
        with self.assertRaises(ValueError):
            brute_force_preimage(self.life, Pattern.zeros(4, 3))
        with self.assertRaises(ValueError):
            achievable_images(self.life, 4, 3)


class TestBorderedSearch(unittest.TestCase):
    """Zero rings, padding and the GoE reduction"""

    def setUp(self):
        self.life = game_of_life()
        self.constants = game_of_life_constants()

    def test_bordered_block(self):
        """Test a block preimage whose outer rings are zero"""
        block = Pattern.from_rows(["OO", "OO"])
        outcome = find_bordered_preimage(self.life, block, pad=2)
        self.assertEqual(outcome.verdict, Verdict.SAT)
        witness = outcome.witness
        self.assertEqual(apply_rule(self.life, witness), pad0(block, 2))
        x0, y0, w, h = witness.rect
        for (x, y), v in witness.items():
            if min(x - x0, y - y0, x0 + w - 1 - x, y0 + h - 1 - y) < 2:
                self.assertEqual(v, 0)

    def test_zero_pattern_is_not_goe(self):
        """Test that the zero configuration has a preimage"""
        self.assertFalse(is_finite_goe(Pattern.zeros(1, 1), self.constants, self.life))

    @pytest.mark.slow
    def test_small_patterns_are_not_goe(self):
        """Test the GoE decision on every pattern up to 3x3 against a checked preimage of pad0(p, c)"""
        c = self.constants.c
        for m, n in SMALL_SHAPES:
            for code in range(1 << (m * n)):
                pattern = pattern_from_code(code, m, n)
                with self.subTest(shape=(m, n), code=code):
                    self.assertFalse(is_finite_goe(pattern, self.constants, self.life))
                    padded = pad0(pattern, c)
                    outcome = find_preimage(PreimageProblem(self.life, padded))
                    self.assertEqual(outcome.verdict, Verdict.SAT)
                    self.assertEqual(apply_rule(self.life, outcome.witness), padded)

    @pytest.mark.slow
    def test_goe_agrees_with_solver(self):
        """Test the GoE decision on every pattern up to 3x3 against the CNF of pad0(p, c)"""
        solve = sat_solver()
        c = self.constants.c
        for m, n in SMALL_SHAPES:
            for code in range(1 << (m * n)):
                pattern = pattern_from_code(code, m, n)
                with self.subTest(shape=(m, n), code=code):
                    problem = PreimageProblem(self.life, pad0(pattern, c))
                    self.assertEqual(
                        is_finite_goe(pattern, self.constants, self.life),
                        solve(problem) is None,
                    )

    def test_unverified_constants(self):
        """Test that the GoE reduction needs verified constants"""
        unverified = TraceConstants(2, 4, 3, 3, 0)
        with self.assertRaises(ProvenanceError):
            is_finite_goe(Pattern.zeros(1, 1), unverified, self.life)
        with self.assertRaises(ProvenanceError):
            is_finite_goe(Pattern.zeros(1, 1), self.constants, and_rule())

    def test_padding_is_monotone(self):
        """Test that padding an orphan keeps it an orphan"""
        rule = and_rule()
        orphan = Pattern.from_rows(["O.O"])
        for c in range(2):
            with self.subTest(c=c):
                self.assertTrue(is_orphan(pad0(orphan, c), rule))

    def test_sweep_padding(self):
        """Test the least orphan padding of small patterns"""
        rows = sweep_padding(and_rule(), [Pattern.from_rows(["O.O"]), Pattern.from_rows(["O"])], 2)
        self.assertEqual([r["least_orphan_padding"] for r in rows], [0, None])
        self.assertEqual(rows[0]["pattern"], "O.O")
        self.assertEqual((rows[1]["width"], rows[1]["height"]), (1, 1))

    def test_boundary_probe(self):
        """Test extending a zero witness in every direction"""
        zero = Pattern.zeros(3, 3)
        for direction in "NSEW":
            with self.subTest(direction=direction):
                self.assertEqual(boundary_extension_probe(self.life, zero, direction, 2), 2)
        with self.assertRaises(ValueError):
            boundary_extension_probe(self.life, zero, "up", 2)


class TestDimacs(unittest.TestCase):
    """CNF export"""

    def setUp(self):
        self.life = game_of_life()

    def test_clause_counts(self):
        """Test the clause count of single-cell targets"""
        for symbol, clauses in ((0, 140), (1, 372)):
            with self.subTest(symbol=symbol):
                problem = PreimageProblem(self.life, Pattern.from_array(np.array([[symbol]])))
                header, body = dimacs_clauses(to_dimacs(problem))
                self.assertEqual(header, (9, clauses))
                self.assertEqual(len(body), clauses)
                self.assertTrue(all(len(c) == 9 for c in body))

    def test_zero_ring_units(self):
        """Test that every forced-zero cell adds a unit clause"""
        problem = PreimageProblem(self.life, Pattern.zeros(1, 1), zero_border=1)
        header, body = dimacs_clauses(to_dimacs(problem))
        self.assertEqual(header, (9, 148))
        units = sorted(c[0] for c in body if len(c) == 1)
        self.assertEqual(units, [-9, -8, -7, -6, -4, -3, -2, -1])

    def test_decode_model(self):
        """Test turning a model back into a witness"""
        problem = PreimageProblem(self.life, Pattern.zeros(1, 1))
        witness = decode_dimacs_model(problem, [1, -2, 3, -4, -5, -6, -7, -8, -9])
        self.assertEqual(witness.rect, (-1, -1, 3, 3))
        self.assertEqual(witness.support(), frozenset({(-1, -1), (1, -1)}))

    def test_non_binary_rule(self):
        """Test that only binary rules can be exported"""
        ternary = LocalRule(3, 1, function=lambda d: 0)
        with self.assertRaises(ValueError):
            to_dimacs(PreimageProblem(ternary, Pattern.zeros(1, 1)))

    def test_solver_agrees(self):
        """Test the CNF with an external SAT solver when one is installed"""
        solve = sat_solver()
        achievable = achievable_images(self.life, 2, 2)
        for code in range(16):
            problem = PreimageProblem(self.life, pattern_from_code(code, 2, 2))
            with self.subTest(code=code):
                witness = solve(problem)
                self.assertEqual(witness is not None, code in achievable)
                if witness is not None:
                    self.assertEqual(apply_rule(self.life, witness), problem.target)

    @pytest.mark.slow
    def test_solver_agrees_on_random_targets(self):
        """Test 50 random 4x4 targets against the backtracking searcher"""
        solve = sat_solver()
        rng = random.Random(17)
        for trial in range(50):
            code = rng.randrange(1 << 16)
            problem = PreimageProblem(self.life, pattern_from_code(code, 4, 4))
            with self.subTest(code=code):
                witness = solve(problem)
                outcome = find_preimage(problem)
                self.assertEqual(witness is not None, outcome.verdict is Verdict.SAT)
                if witness is not None:
                    self.assertEqual(apply_rule(self.life, witness), problem.target)
                    self.assertEqual(apply_rule(self.life, outcome.witness), problem.target)


if __name__ == "__main__":
    unittest.main()
