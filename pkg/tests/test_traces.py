import itertools
import random
import unittest

import pytest

from lifetraces.automata import equivalent, includes, minimize, universal_up_to_length
from lifetraces.ca_core import Pattern, and_rule, constant_rule, derive_forbidden, game_of_life
from lifetraces.exceptions import ProvenanceError, StabilityNotEstablished
from lifetraces.traces import (
    DirectionalTraceReport,
    DirectionEntry,
    StripeColumn,
    TraceConstants,
    brute_force_L_membership,
    build_L_dfa,
    build_P_automaton,
    build_S_subshift,
    check_periodizable,
    check_stable,
    derive_trace_constants,
    extension_depth,
    forced_rows,
    forced_window,
    game_of_life_constants,
    make_Pn_pattern,
    min_extension_constant,
    periodic_band_dfa,
    separating_word,
    sweep_periodizable,
    word_from_rows,
    word_to_rows,
)


def row_strings(rows):
    return ["".join(map(str, row)) for row in rows]


class TestStripeWords(unittest.TestCase):
    """Columns and text rows"""

    def test_rows_round_trip(self):
        """Test that words and text rows convert back and forth"""
        rows = ["0110", "1010"]
        word = word_from_rows(rows)
        self.assertEqual(word, [1, 2, 3, 0])
        self.assertEqual(word_to_rows(word, 2), rows)

    def test_column_letters(self):
        """Test that the bottom cell is the least significant digit"""
        self.assertEqual(StripeColumn((1, 0)).index, 1)
        self.assertEqual(StripeColumn.from_index(2, 2).cells, (0, 1))

    def test_pn_widths(self):
        """Test that P_n grows by two columns per step"""
        for n in range(4):
            with self.subTest(n=n):
                p = make_Pn_pattern(n)
                self.assertEqual((p.width, p.height), (19 + 2 * n, 2))
        with self.assertRaises(ValueError):
            make_Pn_pattern(-1)


class TestForcedRows(unittest.TestCase):
    """Rows forced below a window of the Game of Life"""

    def setUp(self):
        self.forbidden = derive_forbidden(game_of_life(), 0)

    def test_forced_window(self):
        """Test that only 0001000 can follow the forced window"""
        report = forced_rows(forced_window(), 1, self.forbidden)
        self.assertEqual(row_strings(report.rows[0]), ["0001000"])
        self.assertEqual(report.unique, [True])
        self.assertEqual(report.forced_columns[0][3], 1)
        self.assertEqual(extension_depth(forced_window(), 1, self.forbidden), 1)

    def test_zero_window_allows_zero_row(self):
        """Test that a zero window can be continued by zeros"""
        report = forced_rows(Pattern.zeros(5, 2), 2, self.forbidden, outside="zero")
        for step in range(2):
            with self.subTest(step=step):
                self.assertIn((0,) * 5, report.rows[step])

    def test_p0_is_forced_with_period_three(self):
        """Test that P_0 has a unique period-3 continuation with a zero outside"""
        report = forced_rows(make_Pn_pattern(0), 6, self.forbidden, outside="zero")
        self.assertTrue(all(report.unique))
        for i in range(3):
            with self.subTest(step=i):
                self.assertEqual(report.rows[i], report.rows[i + 3])
        data = report.to_dict()
        self.assertEqual(data["steps"], 6)
        self.assertEqual(data["outside"], "zero")

    def test_bad_arguments(self):
        """Test the argument checks"""
        with self.assertRaises(ValueError):
            forced_rows(forced_window(), 1, self.forbidden, outside="torus")
        with self.assertRaises(ValueError):
            forced_rows(Pattern.zeros(5, 1), 1, self.forbidden)


class TestTraceAutomata(unittest.TestCase):
    """L, S and P automata on small levels"""

    def setUp(self):
        self.life = derive_forbidden(game_of_life(), 0)
        self.conjunction = derive_forbidden(and_rule(), 0)
        self.rng = random.Random(11)

    def test_layered_matches_direct(self):
        """Test that the two L constructions give the same language"""
        for forbidden, levels in ((self.life, (0, 1)), (self.conjunction, (0, 1, 2))):
            for ell in levels:
                with self.subTest(rule=forbidden.rule.name, ell=ell):
                    layered = build_L_dfa(forbidden, 2, ell, "layered")
                    direct = build_L_dfa(forbidden, 2, ell, "direct")
                    self.assertTrue(equivalent(layered, direct)[0])
        with self.assertRaises(ValueError):
            build_L_dfa(self.life, 2, 1, "sideways")

    def test_membership_matches_brute_force(self):
        """Test L membership against exhaustive completion of random words"""
        for ell in (1, 2):
            lang = build_L_dfa(self.life, 2, ell)
            for trial in range(40):
                word = [self.rng.randrange(4) for _ in range(self.rng.randint(0, 6))]
                with self.subTest(ell=ell, word=word):
                    self.assertEqual(lang.accepts(word), brute_force_L_membership(self.life, word, ell))

    @pytest.mark.slow
    def test_every_short_word_matches_brute_force(self):
        """Test L membership of every word of length at most six against exhaustive completion"""
        for ell in (1, 2):
            lang = build_L_dfa(self.life, 2, ell)
            for m in range(7):
                for word in itertools.product(range(4), repeat=m):
                    with self.subTest(ell=ell, word=word):
                        self.assertEqual(lang.accepts(word), brute_force_L_membership(self.life, word, ell))

    def test_levels_form_a_chain(self):
        """Test that each level is contained in the one below and S lies in L"""
        for ell in range(2):
            with self.subTest(ell=ell):
                lower = build_L_dfa(self.life, 2, ell)
                upper = build_L_dfa(self.life, 2, ell + 1)
                self.assertTrue(includes(lower, upper)[0])
                self.assertTrue(includes(lower, build_S_subshift(self.life, 2, ell))[0])

    def test_band_matches_layered_periodic(self):
        """Test the explicit band construction of P against the layered one"""
        for k, p in ((0, 1), (1, 1), (0, 2)):
            with self.subTest(k=k, p=p):
                self.assertTrue(equivalent(
                    build_P_automaton(self.life, 2, k, p), periodic_band_dfa(self.life, 2, k, p)
                )[0])

    def test_height_check(self):
        """Test that stripes lower than 2r are refused"""
        with self.assertRaises(ValueError):
            build_L_dfa(self.life, 1, 0)
        with self.assertRaises(ValueError):
            build_P_automaton(self.life, 2, 0, 0)


class TestStabilityAndPeriodicity(unittest.TestCase):
    """Stability, periodizability and extension constants on small rules"""

    def test_constant_zero_rule(self):
        """Test the rule with no forbidden neighbourhood"""
        forbidden = derive_forbidden(constant_rule(0), 0)
        self.assertTrue(forbidden.is_empty())
        stable_at, report = check_stable(forbidden, 2, 2)
        self.assertEqual(stable_at, 0)
        self.assertTrue(report.rotation_invariant)
        self.assertEqual(sweep_periodizable(forbidden, 2, 0, 2, 2), (0, 1))
        self.assertEqual(min_extension_constant(forbidden, 2, 0), 0)

    def test_conjunction_rule(self):
        """Test that avoiding the all-ones block never constrains a stripe"""
        forbidden = derive_forbidden(and_rule(), 0)
        stable_at, report = check_stable(forbidden, 2, 3)
        self.assertEqual(stable_at, 0)
        self.assertTrue(universal_up_to_length(report.entry(2).S, 4)[0])
        result = check_periodizable(forbidden, 2, 0, 0, 1, report)
        self.assertTrue(result.holds)
        self.assertTrue(report.entry(0).periodizable)

    def test_periodizable_needs_stability(self):
        """Test that an unstable report blocks the periodizability check"""
        forbidden = derive_forbidden(game_of_life(), 0)
        unstable = DirectionalTraceReport(2, 1, 2, True, {0: DirectionEntry(0)}, stable_at=None)
        with self.assertRaises(StabilityNotEstablished):
            check_periodizable(forbidden, 2, 1, 0, 1, unstable)
        late = DirectionalTraceReport(2, 6, 2, True, {0: DirectionEntry(0)}, stable_at=4)
        with self.assertRaises(StabilityNotEstablished):
            check_periodizable(forbidden, 2, 3, 0, 1, late)

    def test_ell_max_must_be_positive(self):
        """Test the ell_max argument check"""
        with self.assertRaises(ValueError):
            check_stable(derive_forbidden(and_rule(), 0), 2, 0)


class TestTraceConstants(unittest.TestCase):
    """Constant bookkeeping and provenance"""

    def setUp(self):
        self.constants = game_of_life_constants()

    def test_bundled_values(self):
        """Test the bundled Game of Life constants"""
        c = self.constants
        self.assertEqual((c.n, c.ell, c.k, c.p, c.C), (2, 4, 3, 3, 0))
        self.assertEqual(c.c, 4)
        self.assertEqual(c.q, 50331648)
        self.assertEqual(c.q_refined, 12288)
        self.assertTrue(c.verified)

    def test_provenance(self):
        """Test that constants only vouch for the rule they were verified for"""
        self.constants.require_verified(game_of_life())
        with self.assertRaises(ProvenanceError):
            self.constants.require_verified(and_rule())
        unverified = TraceConstants(2, 0, 0, 1, 0)
        with self.assertRaises(ProvenanceError):
            unverified.require_verified(constant_rule(0))

    def test_dict_form(self):
        """Test the serialized form"""
        data = self.constants.to_dict()
        self.assertEqual(data["provenance"]["rule_digest"], game_of_life().digest())
        self.assertEqual(TraceConstants.from_dict(data), self.constants)

    def test_range_checks(self):
        """Test that a zero period is rejected"""
        with self.assertRaises(ValueError):
            TraceConstants(2, 4, 3, 0, 0)

    def test_zero_rule_constants(self):
        """Test deriving constants for the constant-zero rule"""
        rule = constant_rule(0)
        derived = derive_trace_constants(rule, ell_max=2, k_max=1, p_max=1)
        self.assertEqual((derived.ell, derived.k, derived.p, derived.C), (0, 0, 1, 0))
        derived.require_verified(rule)


@pytest.mark.slow
class TestGameOfLifeTraces(unittest.TestCase):
    """The Game of Life stripe results at height two"""

    def setUp(self):
        self.forbidden = derive_forbidden(game_of_life(), 0)

    def test_stable_at_four(self):
        """Test that the traces first stabilize at level four"""
        stable_at, report = check_stable(self.forbidden, 2, 5)
        self.assertEqual(stable_at, 4)
        witnesses = report.entry(0).level_witnesses
        self.assertEqual(sorted(witnesses), [0, 1, 2, 3])
        self.assertTrue(witnesses[3])
        self.assertLessEqual(len(witnesses[3]), 30)
        self.assertTrue(build_S_subshift(self.forbidden, 2, 3).accepts(witnesses[3]))
        self.assertFalse(build_S_subshift(self.forbidden, 2, 4).accepts(witnesses[3]))

    def test_separating_word(self):
        """Test the word in S_{2,3} but not in S_{2,4}"""
        word = separating_word()
        self.assertEqual(len(word), 30)
        self.assertTrue(build_S_subshift(self.forbidden, 2, 3).accepts(word))
        self.assertFalse(build_S_subshift(self.forbidden, 2, 4).accepts(word))

    def test_periodizable_parameters_are_least(self):
        """Test that (4, 3, 3) works while smaller k or p do not"""
        self.assertTrue(check_periodizable(self.forbidden, 2, 4, 3, 3).holds)
        for k, p in ((2, 3), (3, 2), (3, 1)):
            with self.subTest(k=k, p=p):
                self.assertFalse(check_periodizable(self.forbidden, 2, 4, k, p).holds)

    def test_extension_constant(self):
        """Test that no extension is needed at level four"""
        self.assertEqual(min_extension_constant(self.forbidden, 2, 4), 0)

    def test_short_words_are_traces(self):
        """Test that S_{2,1} contains every word of length six"""
        self.assertTrue(universal_up_to_length(build_S_subshift(self.forbidden, 2, 1), 6)[0])

    def test_minimal_sizes_are_reported(self):
        """Test that the report records the minimal sizes of L and S"""
        _, report = check_stable(self.forbidden, 2, 5)
        entry = report.to_dict()["directions"][0]
        for name, dfa in (("L_fingerprint", report.entry(0).L), ("S_fingerprint", report.entry(0).S)):
            with self.subTest(automaton=name):
                self.assertEqual(entry[name]["states"], minimize(dfa).num_states)
                self.assertGreater(entry[name]["states"], 1)
                self.assertEqual(entry[name]["word_counts"][0], 1)

    def test_pn_stripes_are_traces(self):
        """Test that the P_0 and P_5 stripes occur in the stable traces"""
        stable = build_S_subshift(self.forbidden, 2, 4)
        for n in (0, 5):
            with self.subTest(n=n):
                rows = ["".join(str(v) for v in row) for row in reversed(make_Pn_pattern(n).to_array().T)]
                self.assertTrue(stable.accepts(word_from_rows(rows)))

    def test_periodic_traces_lie_in_every_level(self):
        """Test that L(P_{2,3,3}) is contained in S_{2,l} up to l = k + p"""
        periodic = build_P_automaton(self.forbidden, 2, 3, 3)
        for ell in (4, 6):
            with self.subTest(ell=ell):
                self.assertTrue(includes(build_S_subshift(self.forbidden, 2, ell), periodic)[0])


@pytest.mark.slow
class TestGameOfLifeConstants(unittest.TestCase):
    """Re-derives the bundled constants file from scratch"""

    def test_derived_constants_match_fixture(self):
        """Test that deriving the constants reproduces the bundled file"""
        derived = derive_trace_constants(game_of_life(), ell_max=5, k_max=3, p_max=3)
        bundled = game_of_life_constants()
        self.assertEqual(derived.to_dict(), bundled.to_dict())


if __name__ == "__main__":
    unittest.main()
