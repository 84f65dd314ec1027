import unittest

import numpy as np

from lifetraces.ca_core import (
    FiniteConfig,
    LocalRule,
    Pattern,
    and_rule,
    apply_rule,
    constant_rule,
    derive_forbidden,
    game_of_life,
    identity_rule,
    image_of_config,
    life_like,
    load_rule_spec,
    neighborhood_cells,
    neighborhood_index,
    pad0,
    parse_rulestring,
    pattern_to_index,
    rotate_index,
)
from lifetraces.config import FIXTURES_DIR
from lifetraces.exceptions import AlphabetMismatch, RuleSpecError


class TestLocalRule(unittest.TestCase):
    """Rules, their tables and rotations"""

    def setUp(self):
        self.life = game_of_life()

    def test_life_matches_rulestring(self):
        """Test that the 9-cell-sum formulation equals B3/S23"""
        self.assertEqual(self.life, life_like({3}, {2, 3}))
        self.assertEqual(self.life, parse_rulestring("b3/s23"))
        self.assertEqual(self.life.digest(), life_like({3}, {2, 3}).digest())

    def test_life_forbidden_count(self):
        """Test that 140 neighbourhoods of the Game of Life map to 1"""
        forbidden = derive_forbidden(self.life, 0)
        self.assertEqual(len(forbidden), 140)
        self.assertEqual(forbidden.n, 2)
        self.assertTrue(forbidden.is_rotation_invariant())

    def test_forbidden_patterns_are_neighbourhoods(self):
        """Test that forbidden patterns round-trip through their indices"""
        forbidden = derive_forbidden(and_rule(), 0)
        self.assertEqual(len(forbidden.patterns), 1)
        only = forbidden.patterns[0]
        self.assertEqual(only.rect, (-1, -1, 3, 3))
        self.assertIn(only, forbidden)
        self.assertEqual(pattern_to_index(only, 1, 2), 511)

    def test_target_outside_alphabet(self):
        """Test that a target symbol outside the alphabet is rejected"""
        with self.assertRaises(AlphabetMismatch):
            derive_forbidden(self.life, 2)

    def test_neighbourhood_digits_are_column_major(self):
        """Test that digits run over columns west to east, each bottom to top"""
        self.assertEqual(neighborhood_index({(-1, -1): 1}, 1, 2), 1)
        self.assertEqual(neighborhood_index({(-1, 0): 1}, 1, 2), 2)
        self.assertEqual(neighborhood_index({(0, -1): 1}, 1, 2), 8)
        for index in (0, 5, 137, 511):
            with self.subTest(index=index):
                cells = neighborhood_cells(index, 1, 2)
                self.assertEqual(neighborhood_index(cells, 1, 2), index)

    def test_rotate_index_has_order_four(self):
        """Test that four quarter turns give back the neighbourhood"""
        for index in (1, 2, 77, 300):
            with self.subTest(index=index):
                self.assertEqual(rotate_index(index, 1, 2, 4), index)
        # the south-west corner turns into the north-west corner
        self.assertEqual(rotate_index(1, 1, 2), neighborhood_index({(-1, 1): 1}, 1, 2))

    def test_rule_rotation_conjugates(self):
        """Test that copying the west neighbour becomes copying the north neighbour"""
        west = LocalRule(2, 1, function=lambda d: d[1])
        north = LocalRule(2, 1, function=lambda d: d[5])
        self.assertEqual(west.rotate90(1), north)
        self.assertEqual(west.rotate90(4), west)
        self.assertEqual(self.life.rotate90(1), self.life)

    def test_quiescence(self):
        """Test quiescence of the built-in rules"""
        self.assertTrue(self.life.is_quiescent())
        self.assertTrue(identity_rule().is_quiescent())
        self.assertFalse(constant_rule(1).is_quiescent())

    def test_bad_tables(self):
        """Test that malformed tables are rejected"""
        with self.assertRaises(ValueError):
            LocalRule(2, 1, table=[0] * 10)
        with self.assertRaises(ValueError):
            LocalRule(2, 1, table=[2] * 512)
        with self.assertRaises(ValueError):
            LocalRule(2, 0, table=[0, 1])


class TestRuleFiles(unittest.TestCase):
    """Built-in names, rulestrings and YAML rule files"""

    def test_builtin_names(self):
        """Test that the built-in names resolve"""
        self.assertEqual(load_rule_spec("life"), game_of_life())
        self.assertEqual(load_rule_spec("and"), and_rule())
        self.assertEqual(load_rule_spec("zero"), constant_rule(0))

    def test_yaml_files(self):
        """Test the bundled totalistic and rulestring files"""
        self.assertEqual(load_rule_spec(str(FIXTURES_DIR / "and.yaml")), and_rule())
        self.assertEqual(load_rule_spec(str(FIXTURES_DIR / "highlife.yaml")), life_like({3, 6}, {2, 3}))

    def test_mappings(self):
        """Test the mapping forms"""
        self.assertEqual(load_rule_spec({"rulestring": "B3/S23"}), game_of_life())
        table = "".join(str(int(v)) for v in game_of_life().lookup_table())
        self.assertEqual(load_rule_spec({"alphabet": 2, "radius": 1, "table": table}), game_of_life())

    def test_malformed(self):
        """Test that malformed specifications raise RuleSpecError"""
        for spec in ("B9/S23", "B3", "no-such-rule", {"alphabet": 2, "radius": 1, "table": "01"}, 42):
            with self.subTest(spec=spec):
                with self.assertRaises(RuleSpecError):
                    load_rule_spec(spec)


class TestPattern(unittest.TestCase):
    """Pattern geometry and rule application"""

    def setUp(self):
        self.life = game_of_life()
        self.blinker = Pattern.from_rows([".....", "..O..", "..O..", "..O..", "....."])

    def test_from_rows_orientation(self):
        """Test that the first text row is the northernmost one"""
        p = Pattern.from_rows(["O.", ".."])
        self.assertEqual(p[(0, 1)], 1)
        self.assertEqual(p[(0, 0)], 0)
        self.assertEqual(p.to_array().shape, (2, 2))

    def test_rotate90_is_clockwise(self):
        """Test that (x, y) goes to (y, -x)"""
        p = Pattern({(1, 0): 1})
        self.assertEqual(p.rotate90(), Pattern({(0, -1): 1}))
        square = Pattern.from_rows(["O.", ".."], origin=(3, 5))
        self.assertEqual(square.rotate90(4), square)
        self.assertEqual(square.rotate90(1).rect, (5, -4, 2, 2))

    def test_reflections(self):
        """Test the two mirror images"""
        p = Pattern.from_rows(["O.", ".."])
        self.assertEqual(p.reflect_horizontal()[(0, 1)], 1)
        self.assertEqual(p.reflect_horizontal().rect, (-1, 0, 2, 2))
        self.assertEqual(p.reflect_vertical()[(0, -1)], 1)

    def test_crop(self):
        """Test cropping inside and outside the domain"""
        self.assertEqual(self.blinker.crop(2, 1, 1, 3).support(), self.blinker.support())
        with self.assertRaises(ValueError):
            self.blinker.crop(4, 4, 2, 2)

    def test_blinker_image(self):
        """Test that the vertical blinker turns horizontal on the erosion"""
        image = apply_rule(self.life, self.blinker)
        self.assertEqual(image, Pattern.from_rows(["...", "OOO", "..."], origin=(1, 1)))

    def test_block_is_still(self):
        """Test that the block is its own image as a finite configuration"""
        block = FiniteConfig(Pattern.from_rows(["OO", "OO"]))
        self.assertEqual(image_of_config(self.life, block), block)

    def test_zero_configuration(self):
        """Test the image of the all-zero configuration"""
        zero = FiniteConfig(Pattern.zeros(3, 3))
        self.assertEqual(image_of_config(self.life, zero).support(), frozenset())
        self.assertEqual(zero.radius(), 0)
        self.assertIsNone(zero.bounding_box())

    def test_pad0(self):
        """Test zero padding"""
        p = Pattern.from_rows(["O"], origin=(2, 3))
        padded = pad0(p, 2)
        self.assertEqual(padded.rect, (0, 1, 5, 5))
        self.assertEqual(padded.support(), p.support())
        self.assertEqual(pad0(p, 0), p)
        with self.assertRaises(ValueError):
            pad0(p, -1)

    def test_finite_config_window(self):
        """Test windows and radius of a finite configuration"""
        y = FiniteConfig(Pattern({(-2, 1): 1, (0, 0): 0}))
        self.assertEqual(y.radius(), 2)
        self.assertEqual(y.bounding_box(), (-2, 1, 1, 1))
        window = y.window(-3, -3, 7, 7)
        self.assertEqual(window[(-2, 1)], 1)
        self.assertEqual(int(np.sum(window.to_array())), 1)

    def test_alphabet_mismatch(self):
        """Test that symbols outside the alphabet are refused"""
        with self.assertRaises(AlphabetMismatch):
            apply_rule(self.life, Pattern.from_array(np.full((3, 3), 2)))


if __name__ == "__main__":
    unittest.main()
