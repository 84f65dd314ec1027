import unittest

from lifetraces.validators import ReportValidator


class TestReportValidator(unittest.TestCase):
    """Schema checks of the command line reports"""

    def setUp(self):
        self.validator = ReportValidator()

    def assertValid(self, report, kind):
        result = self.validator.validate(report, kind)
        self.assertTrue(result["valid"], result["errors"])
        return result

    def assertInvalid(self, report, kind):
        result = self.validator.validate(report, kind)
        self.assertFalse(result["valid"])
        self.assertTrue(result["errors"])
        return result

    def test_not_a_mapping(self):
        """Test that non-dict reports are rejected"""
        self.assertInvalid(["SAT"], "search")

    def test_unknown_kind(self):
        """Test that an unknown report kind is rejected"""
        result = self.assertInvalid({}, "poem")
        self.assertIn("Unsupported report kind: poem", result["errors"])

    def test_verify_paper(self):
        """Test claim lists and the all_hold summary"""
        claims = [{"name": "a", "holds": True}, {"name": "b", "holds": False}]
        result = self.assertValid({"rule": "life", "claims": claims, "all_hold": False}, "verify_paper")
        self.assertEqual(result["warnings"], ["Failed claims: b"])
        cases = {
            "disagreeing summary": {"rule": "life", "claims": claims, "all_hold": True},
            "no claims": {"rule": "life", "claims": [], "all_hold": True},
            "string verdict": {"rule": "life", "claims": [{"name": "a", "holds": "yes"}], "all_hold": True},
            "missing rule": {"claims": claims[:1], "all_hold": True},
        }
        for label, report in cases.items():
            with self.subTest(case=label):
                self.assertInvalid(report, "verify_paper")

    def test_search(self):
        """Test verdict and witness consistency"""
        self.assertValid({"verdict": "SAT", "nodes": 3, "witness": ["O"]}, "search")
        self.assertValid({"verdict": "UNSAT", "nodes": 3, "witness": None}, "search")
        result = self.assertValid({"verdict": "INDETERMINATE", "nodes": 1}, "search")
        self.assertTrue(result["warnings"])
        self.assertTrue(result["suggestions"])
        cases = {
            "unknown verdict": {"verdict": "MAYBE", "nodes": 1},
            "SAT without witness": {"verdict": "SAT", "nodes": 1, "witness": None},
            "UNSAT with witness": {"verdict": "UNSAT", "nodes": 1, "witness": ["O"]},
            "nodes as text": {"verdict": "UNSAT", "nodes": "1"},
        }
        for label, report in cases.items():
            with self.subTest(case=label):
                self.assertInvalid(report, "search")

    def test_goe(self):
        """Test that GoE reports carry verified constants"""
        constants = {"provenance": {"verified": True}}
        self.assertValid({"goe": False, "padding": 4, "constants": constants}, "goe")
        self.assertInvalid({"goe": False, "padding": 4, "constants": {"provenance": {"verified": False}}}, "goe")

    def test_periodization(self):
        """Test region counts, certificate flag and the period bound"""
        regions = [
            {"name": "core", "kind": "core", "periods": []},
            {"name": "north", "kind": "strip", "periods": [[0, 1]]},
            {"name": "NE", "kind": "quadrant", "periods": [[1, 0], [0, 1]]},
        ]
        certificate = {"verified": True, "constants": {"q_refined": 12288}}
        self.assertValid({"semilinear": {"regions": regions, "max_period": 1}, "certificate": certificate}, "periodization")
        cases = {
            "two cores": {"semilinear": {"regions": regions + regions[:1], "max_period": 1}, "certificate": certificate},
            "strip without period": {
                "semilinear": {"regions": [regions[0], {"name": "s", "kind": "strip", "periods": []}], "max_period": 1},
                "certificate": certificate,
            },
            "unverified": {"semilinear": {"regions": regions, "max_period": 1}, "certificate": {"verified": False}},
            "period too large": {"semilinear": {"regions": regions, "max_period": 20000}, "certificate": certificate},
            "no regions": {"semilinear": {"regions": []}, "certificate": certificate},
        }
        for label, report in cases.items():
            with self.subTest(case=label):
                self.assertInvalid(report, "periodization")

    def test_trace_report(self):
        """Test that unstable rotations produce warnings"""
        report = {"n": 2, "ell_max": 3, "directions": [{"rotation": 0, "stable_at": None}]}
        result = self.assertValid(report, "trace_report")
        self.assertEqual(len(result["warnings"]), 1)
        self.assertInvalid({"n": 2, "ell_max": 3, "directions": [{"stable_at": 0}]}, "trace_report")

    def test_sweep(self):
        """Test that an empty sweep is only a warning"""
        result = self.assertValid({"rows": []}, "sweep")
        self.assertEqual(result["warnings"], ["Sweep produced no rows"])
        self.assertInvalid({"rows": None}, "sweep")

    def test_encoding(self):
        """Test the word length against the shape prefix"""
        self.assertValid({"word": "01", "shape": [0, 0]}, "encoding")
        self.assertValid({"word": "0110" + "0" * 15, "shape": [1, 2]}, "encoding")
        self.assertInvalid({"word": "011", "shape": [0, 0]}, "encoding")


if __name__ == "__main__":
    unittest.main()
