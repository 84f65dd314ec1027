import io
import json
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

import pytest

from lifetraces.cli import EXIT_CLAIM_FAILS, EXIT_IO, EXIT_OK, EXIT_USAGE, main


class CliTestCase(unittest.TestCase):
    """Runs the command line in-process with captured output"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, name: str, text: str) -> str:
        path = os.path.join(self.tmp.name, name)
        with open(path, "w") as f:
            f.write(text)
        return path

    def run_cli(self, *argv):
        out = io.StringIO()
        with redirect_stdout(out), redirect_stderr(io.StringIO()):
            code = main(["-q", *argv])
        return code, out.getvalue()

    def run_json(self, *argv):
        code, text = self.run_cli(*argv)
        return code, json.loads(text)


class TestEncodingCommands(CliTestCase):
    """encode, decode and render"""

    def test_encode_single_cell(self):
        """Test encoding a one-cell pattern"""
        code, report = self.run_json("encode", self.write("cell.txt", "O\n"))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report["word"], "01")
        self.assertEqual(report["shape"], [0, 0])
        self.assertEqual(report["order"], "row")

    def test_decode_word(self):
        """Test decoding a word from the command line and from a file"""
        code, text = self.run_cli("decode", "01")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(text, "O\n")
        code, text = self.run_cli("decode", self.write("word.bin", "0\n1\n"), "--format", "rle")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(text.startswith("x = 1, y = 1"))

    def test_decode_malformed_word(self):
        """Test that a bad word is an input error"""
        code, _ = self.run_cli("decode", "0001")
        self.assertEqual(code, EXIT_IO)

    def test_render_with_cuts(self):
        """Test drawing a centred pattern with region cuts"""
        path = self.write("zeros.txt", ".....\n" * 5)
        code, text = self.run_cli("render", path, "--radius", "2", "--cut-x", "0", "--cut-y", "0")
        self.assertEqual(code, EXIT_OK)
        lines = text.splitlines()
        self.assertEqual(len(lines), 6)
        self.assertTrue(any("|" in line for line in lines))

    def test_render_to_rle(self):
        """Test converting a text pattern to RLE"""
        code, text = self.run_cli("render", self.write("cell.txt", "O\n"), "--to", "rle")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(text, "x = 1, y = 1\no!\n")


class TestSearchCommands(CliTestCase):
    """Orphan, preimage, GoE and DIMACS commands"""

    def test_is_orphan(self):
        """Test an orphan of the conjunction rule"""
        path = self.write("pair.txt", "O.O\n")
        code, report = self.run_json("--rule", "and", "is-orphan", path)
        self.assertEqual(code, EXIT_CLAIM_FAILS)
        self.assertEqual(report["verdict"], "UNSAT")
        self.assertTrue(report["orphan"])
        code, report = self.run_json("--rule", "and", "is-orphan", self.write("cell.txt", "O\n"))
        self.assertEqual(code, EXIT_OK)
        self.assertFalse(report["orphan"])

    def test_find_preimage_budget(self):
        """Test that an exhausted budget is reported as a usage problem"""
        path = self.write("block.txt", "OO\nOO\n")
        code, report = self.run_json("--budget-nodes", "1", "find-preimage", path)
        self.assertEqual(code, EXIT_USAGE)
        self.assertEqual(report["verdict"], "INDETERMINATE")

    def test_find_preimage(self):
        """Test that the block has a preimage"""
        code, report = self.run_json("find-preimage", self.write("block.txt", "OO\nOO\n"))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report["verdict"], "SAT")
        self.assertEqual(len(report["witness"]), 4)

    def test_to_dimacs(self):
        """Test the CNF header of a single dead cell"""
        code, text = self.run_cli("to-dimacs", self.write("dead.txt", ".\n"))
        self.assertEqual(code, EXIT_OK)
        self.assertIn("p cnf 9 140", text.splitlines())

    def test_zero_pattern_is_not_goe(self):
        """Test the GoE decision on the zero pattern"""
        code, report = self.run_json("is-goe", self.write("dead.txt", ".\n"))
        self.assertEqual(code, EXIT_OK)
        self.assertFalse(report["goe"])
        self.assertEqual(report["padding"], 4)

    def test_goe_needs_constants(self):
        """Test that other rules need a constants file"""
        code, _ = self.run_cli("--rule", "and", "is-goe", self.write("dead.txt", ".\n"))
        self.assertEqual(code, EXIT_USAGE)

    def test_sweep_padding(self):
        """Test the padding sweep over two pattern files"""
        files = [self.write("pair.txt", "O.O\n"), self.write("cell.txt", "O\n")]
        code, report = self.run_json("--rule", "and", "sweep-padding", *files, "--c-max", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual([r["least_orphan_padding"] for r in report["rows"]], [0, None])
        self.assertEqual(report["counts"], {"0": 1, "none": 1})


class TestTraceCommands(CliTestCase):
    """verify-paper, trace-report and sweep-rules on small rules"""

    def test_verify_constant_rule(self):
        """Test that the constant-zero rule satisfies every checked claim"""
        code, report = self.run_json("--rule", "zero", "verify-paper")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(report["all_hold"])
        self.assertTrue(report["constants"]["provenance"]["verified"])

    def test_trace_report(self):
        """Test the stability report of the conjunction rule"""
        code, report = self.run_json("--rule", "and", "trace-report", "--ell-max", "2", "--k", "0", "--p", "1")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(report["stable_at"], 0)
        self.assertTrue(report["periodizability"]["holds"])

    def test_sweep_rules_table(self):
        """Test the text table of a rule sweep"""
        code, text = self.run_cli(
            "sweep-rules", "zero", "and", "--ell-max", "2", "--k-max", "1", "--p-max", "1", "--table"
        )
        self.assertEqual(code, EXIT_OK)
        header = text.splitlines()[0].split()
        self.assertEqual(header, ["rule", "forbidden", "stable_at", "k", "p", "C"])
        self.assertIn("constant0", text)

    @pytest.mark.slow
    def test_verify_game_of_life(self):
        """Test the full Game of Life verification run"""
        code, report = self.run_json("verify-paper")
        self.assertEqual(code, EXIT_OK)
        names = {c["name"] for c in report["claims"]}
        self.assertIn("separating_word", names)
        self.assertIn("forced_row", names)
        self.assertEqual(report["constants"]["k"], 3)


class TestPeriodizeCommand(CliTestCase):
    """Semilinear preimages from the command line"""

    def test_periodize_zero(self):
        """Test periodizing the zero pattern with a searched window"""
        code, report = self.run_json("periodize", self.write("dead.txt", ".\n"), "--render")
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(report["certificate"]["verified"])
        self.assertEqual(report["semilinear"]["max_period"], 1)
        self.assertTrue(report["rendered"])


class TestExitCodes(CliTestCase):
    """Argument, file and ledger handling"""

    def test_unknown_command(self):
        """Test that argparse errors map onto the usage code"""
        code, _ = self.run_cli("frobnicate")
        self.assertEqual(code, EXIT_USAGE)

    def test_missing_file(self):
        """Test that a missing pattern file is an I/O error"""
        code, _ = self.run_cli("encode", os.path.join(self.tmp.name, "missing.txt"))
        self.assertEqual(code, EXIT_IO)

    def test_unknown_rule(self):
        """Test that an unknown rule is an input error"""
        code, _ = self.run_cli("--rule", "no-such-rule", "encode", self.write("cell.txt", "O\n"))
        self.assertEqual(code, EXIT_IO)

    def test_output_and_store(self):
        """Test writing to a file and recording the report in a ledger"""
        output = os.path.join(self.tmp.name, "report.json")
        store = os.path.join(self.tmp.name, "certs")
        code, text = self.run_cli(
            "--output", output, "--store", store, "encode", self.write("cell.txt", "O\n")
        )
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(text, "")
        with open(output) as f:
            self.assertEqual(json.load(f)["word"], "01")
        with open(os.path.join(store, "ledger.json")) as f:
            ledger = json.load(f)
        self.assertEqual(ledger["summary"]["total"], 1)
        self.assertEqual(ledger["summary"]["by_kind"], {"encode": 1})


if __name__ == "__main__":
    unittest.main()
