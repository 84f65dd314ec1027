"""
Command line for lifetraces.

Every command prints one machine-readable result on stdout (JSON unless the
command produces a pattern or a CNF file) and maps its verdict onto the exit
code: 0 answer produced or claim holds, 1 claim fails / GoE / orphan,
2 usage, budget or capacity problems, 3 I/O and parse errors.
"""

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from . import __version__
from .automata import universal_up_to_length
from .ca_core import (
    FiniteConfig,
    LocalRule,
    Pattern,
    derive_forbidden,
    game_of_life,
    load_rule_spec,
    pad0,
)
from .certificates import CertificateStore
from .config import Settings
from .exceptions import EncodingError, LifeTracesError, PatternFormatError, ProvenanceError, RuleSpecError
from .pattern_io import decode_config, encode_config, format_pattern, read_pattern
from .preimage import (
    PreimageProblem,
    Verdict,
    find_bordered_preimage,
    find_preimage,
    is_finite_goe,
    sweep_padding,
    to_dimacs,
)
from .semilinear import periodize, render_stage
from .traces import (
    TraceConstants,
    build_S_subshift,
    check_periodizable,
    check_stable,
    forced_window,
    forced_rows,
    game_of_life_constants,
    load_constants,
    make_Pn_pattern,
    min_extension_constant,
    separating_word,
    sweep_periodizable,
    word_from_rows,
    word_to_rows,
)
from .validators import ReportValidator

__all__ = ["main", "build_parser", "encode_config", "decode_config"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CLAIM_FAILS = 1
EXIT_USAGE = 2
EXIT_IO = 3

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class ReportSchemaError(LifeTracesError):
    """A command produced a report its validator rejects"""


# ---------------------------------------------------------------------------
# helpers


def _configure_logging(verbose: int, quiet: bool, default_level: str) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, default_level, logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def _write(args: argparse.Namespace, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _emit(args: argparse.Namespace, report: Dict[str, Any], kind: str) -> None:
    result = ReportValidator().validate(report, kind)
    for warning in result["warnings"]:
        logger.warning(warning)
    for suggestion in result["suggestions"]:
        logger.info(suggestion)
    if not result["valid"]:
        raise ReportSchemaError("; ".join(result["errors"]))
    _write(args, json.dumps(report, indent=2, sort_keys=True) + "\n")
    if args.store:
        CertificateStore(args.store).record(args.command.replace("-", "_"), report)


def _is_life(rule: LocalRule) -> bool:
    return rule.digest() == game_of_life().digest()


def _constants_for(rule: LocalRule, path: Optional[str]) -> TraceConstants:
    if path:
        constants = load_constants(path)
    elif _is_life(rule):
        constants = game_of_life_constants()
    else:
        raise ProvenanceError(f"no verified constants for rule {rule.name}; pass --constants")
    constants.require_verified(rule)
    return constants


def _centered(p: Pattern) -> Pattern:
    return p.translate(-(p.width // 2), -(p.height // 2))


def _rows(p: Pattern) -> List[str]:
    return format_pattern(p).splitlines()


def _rows_01(p: Pattern) -> List[str]:
    grid = p.to_array()
    w, h = grid.shape
    return ["".join(str(int(grid[i, j])) for i in range(w)) for j in reversed(range(h))]


def _claim(name: str, expected: Any, observed: Any, holds: bool, **extra) -> Dict[str, Any]:
    claim = {"name": name, "expected": expected, "observed": observed, "holds": bool(holds)}
    claim.update(extra)
    if not holds:
        logger.warning("claim %s failed: expected %s, observed %s", name, expected, observed)
    return claim


# ---------------------------------------------------------------------------
# commands


def cmd_verify_paper(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    forbidden = derive_forbidden(rule, 0)
    n = forbidden.n
    base = forbidden.base
    life = _is_life(rule)
    reference = game_of_life_constants() if life else None
    forced = any(v is not None for v in (args.ell, args.k, args.p))
    claims: List[Dict[str, Any]] = []
    constants = None

    ell = args.ell if args.ell is not None else (reference.ell if reference else settings.ell_max)
    stable_at, report = check_stable(forbidden, n, ell, settings.max_states)
    if life and not forced:
        holds = stable_at == reference.ell
        expected: Any = reference.ell
    else:
        holds = stable_at is not None
        expected = f"<= {ell}"
    witnesses = report.entry(0).level_witnesses
    last = max(witnesses) if witnesses else None
    claims.append(_claim(
        "stable_traces", expected, stable_at, holds,
        witness=None if last is None else word_to_rows(witnesses[last], n, base),
    ))

    if stable_at is not None:
        ell = stable_at if not forced or args.ell is None else max(stable_at, args.ell)
        if life and ell == reference.ell:
            word = separating_word()
            below = build_S_subshift(forbidden, n, ell - 1, max_states=settings.max_states).accepts(word)
            at = build_S_subshift(forbidden, n, ell, max_states=settings.max_states).accepts(word)
            claims.append(_claim(
                "separating_word", [True, False], [below, at], below and not at, length=len(word),
            ))

        if args.k is not None or args.p is not None or reference is not None:
            k = args.k if args.k is not None else reference.k
            p = args.p if args.p is not None else reference.p
        else:
            found = sweep_periodizable(forbidden, n, ell, settings.k_max, settings.p_max, settings.max_states)
            k, p = found if found is not None else (None, None)
        if k is None:
            claims.append(_claim("periodizable", "some (k, p)", None, False))
        else:
            result = check_periodizable(forbidden, n, ell, k, p, report, settings.max_states)
            claims.append(_claim("periodizable", True, result.holds, result.holds, parameters=[ell, k, p]))
            if life:
                probes = [(k - 1, p)] if k > 0 else []
                probes += [(k, q) for q in range(p - 1, 0, -1)]
                for kk, pp in probes:
                    probe = check_periodizable(forbidden, n, ell, kk, pp, report, settings.max_states)
                    witness = next((w for ok, w in probe.per_rotation.values() if not ok), None)
                    claims.append(_claim(
                        f"not_periodizable_{ell}_{kk}_{pp}", False, probe.holds, not probe.holds,
                        witness=None if witness is None else word_to_rows(witness, n, base),
                    ))
                for i, (ok, w) in result.per_rotation.items():
                    report.entry(i).periodizable = ok
                    report.entry(i).periodizability_witness = w

        c_ext = min_extension_constant(forbidden, n, ell, max_states=settings.max_states)
        claims.append(_claim(
            "extension_constant", reference.C if reference else c_ext, c_ext,
            c_ext == reference.C if reference else True,
        ))

        if life:
            universal, counter = universal_up_to_length(
                build_S_subshift(forbidden, n, 1, max_states=settings.max_states), 6
            )
            claims.append(_claim(
                "S_2_1_contains_all_words_of_length_6", True, universal, universal,
                witness=None if counter is None else word_to_rows(counter, n, base),
            ))
            below = forced_rows(forced_window(), 1, forbidden)
            observed = ["".join(map(str, row)) for row in below.rows[0]]
            claims.append(_claim("forced_row", ["0001000"], observed, observed == ["0001000"]))

            steps = 6
            column = forced_rows(make_Pn_pattern(0), steps, forbidden, outside="zero")
            periodic = all(column.rows[i] == column.rows[i + 3] for i in range(steps - 3))
            claims.append(_claim(
                "P0_forced_with_period_3", True, all(column.unique) and periodic,
                all(column.unique) and periodic, steps=steps,
            ))
            pn_word = word_from_rows(_rows_01(make_Pn_pattern(0)))
            accepted = build_S_subshift(forbidden, n, ell, max_states=settings.max_states).accepts(pn_word)
            claims.append(_claim("P0_in_trace", True, accepted, accepted))

        if k is not None:
            constants = TraceConstants(
                n, ell, k, p, c_ext, rule.base, rule.radius, rule.name, rule.digest(),
                verified=all(c["holds"] for c in claims),
            )

    out = {
        "rule": rule.name,
        "rule_digest": rule.digest(),
        "claims": claims,
        "all_hold": all(c["holds"] for c in claims),
        "constants": None if constants is None else constants.to_dict(),
        "trace_report": report.to_dict(),
    }
    _emit(args, out, "verify_paper")
    return EXIT_OK if out["all_hold"] else EXIT_CLAIM_FAILS


def cmd_is_goe(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    pattern = read_pattern(args.pattern, args.format)
    constants = _constants_for(rule, args.constants)
    goe = is_finite_goe(pattern, constants, rule, settings.budget_nodes, settings.threads)
    _emit(args, {
        "pattern": _rows(pattern),
        "goe": goe,
        "padding": constants.c,
        "constants": constants.to_dict(),
    }, "goe")
    return EXIT_CLAIM_FAILS if goe else EXIT_OK


def _search_report(outcome, **extra) -> Dict[str, Any]:
    report = outcome.to_dict()
    report.update(extra)
    return report


def _search_exit(verdict: Verdict) -> int:
    if verdict is Verdict.SAT:
        return EXIT_OK
    if verdict is Verdict.UNSAT:
        return EXIT_CLAIM_FAILS
    return EXIT_USAGE


def cmd_is_orphan(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    pattern = read_pattern(args.pattern, args.format)
    problem = PreimageProblem(rule, pad0(pattern, args.pad))
    outcome = find_preimage(problem, settings.budget_nodes, settings.time_budget, settings.threads)
    orphan = None if outcome.verdict is Verdict.INDETERMINATE else outcome.verdict is Verdict.UNSAT
    _emit(args, _search_report(outcome, orphan=orphan, pad=args.pad), "search")
    return _search_exit(outcome.verdict)


def cmd_find_preimage(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    pattern = read_pattern(args.pattern, args.format)
    problem = PreimageProblem(rule, pad0(pattern, args.pad), args.ring)
    outcome = find_preimage(problem, settings.budget_nodes, settings.time_budget, settings.threads)
    _emit(args, _search_report(outcome, pad=args.pad, ring=args.ring), "search")
    return _search_exit(outcome.verdict)


def cmd_periodize(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    constants = _constants_for(rule, args.constants)
    y = FiniteConfig(_centered(read_pattern(args.pattern, args.format)))
    m = y.radius()
    if args.window:
        window = _centered(read_pattern(args.window, args.format))
    else:
        target = y.window(-m, -m, 2 * m + 1, 2 * m + 1)
        outcome = find_bordered_preimage(rule, target, args.pad, None, settings.budget_nodes, settings.threads)
        if outcome.verdict is not Verdict.SAT:
            logger.error(
                "no preimage with a zero border of width %d found at padding %d (%s)",
                2 * rule.radius, args.pad, outcome.verdict.value,
            )
            return _search_exit(outcome.verdict)
        window = outcome.witness
    semilinear, certificate = periodize(y, window, constants, rule, args.radius)
    report = {"semilinear": semilinear.to_dict(), "certificate": certificate.to_dict()}
    if args.render:
        radius = args.radius if args.radius is not None else certificate.protected_radius + constants.k + constants.p
        report["rendered"] = render_stage(semilinear, radius).splitlines()
    _emit(args, report, "periodization")
    return EXIT_OK


def cmd_to_dimacs(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    pattern = read_pattern(args.pattern, args.format)
    _write(args, to_dimacs(PreimageProblem(rule, pad0(pattern, args.pad), args.ring)))
    return EXIT_OK


def cmd_encode(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    y = FiniteConfig(_centered(read_pattern(args.pattern, args.format)))
    support = y.support()
    shape = [max((abs(c.x) for c in support), default=0), max((abs(c.y) for c in support), default=0)]
    _emit(args, {"word": encode_config(y, args.order), "shape": shape, "order": args.order}, "encoding")
    return EXIT_OK


def cmd_decode(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    word = args.word
    if Path(word).is_file():
        word = Path(word).read_text()
    y = decode_config("".join(word.split()), args.order)
    _write(args, format_pattern(y.pattern, args.format))
    return EXIT_OK


def cmd_render(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    pattern = _centered(read_pattern(args.pattern, args.format))
    if args.to in ("rle", "binary"):
        _write(args, format_pattern(pattern, args.to))
        return EXIT_OK
    radius = args.radius if args.radius is not None else FiniteConfig(pattern).radius()
    cuts = (args.cut_x or [], args.cut_y or []) if (args.cut_x or args.cut_y) else None
    _write(args, render_stage(pattern, radius, cuts))
    return EXIT_OK


def cmd_trace_report(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    forbidden = derive_forbidden(rule, 0)
    n = args.n if args.n is not None else forbidden.n
    stable_at, report = check_stable(forbidden, n, settings.ell_max, settings.max_states)
    out = report.to_dict()
    if stable_at is not None and args.k is not None and args.p is not None:
        out["periodizability"] = check_periodizable(
            forbidden, n, stable_at, args.k, args.p, report, settings.max_states
        ).to_dict()
        out["directions"] = report.to_dict()["directions"]
    _emit(args, out, "trace_report")
    return EXIT_OK if stable_at is not None else EXIT_CLAIM_FAILS


def _table_or_json(args: argparse.Namespace, frame: pd.DataFrame, extra: Dict[str, Any]) -> None:
    if args.table:
        _write(args, frame.to_string(index=False) + "\n")
        return
    _emit(args, dict(extra, rows=frame.to_dict("records")), "sweep")


def cmd_sweep_rules(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    rows = []
    for spec in args.rules:
        candidate = load_rule_spec(spec)
        forbidden = derive_forbidden(candidate, 0)
        n = forbidden.n
        stable_at, _ = check_stable(forbidden, n, settings.ell_max, settings.max_states)
        row = {"rule": candidate.name or spec, "forbidden": len(forbidden),
               "stable_at": stable_at, "k": None, "p": None, "C": None}
        if stable_at is not None:
            found = sweep_periodizable(forbidden, n, stable_at, settings.k_max, settings.p_max, settings.max_states)
            if found is not None:
                row["k"], row["p"] = found
                row["C"] = min_extension_constant(forbidden, n, stable_at, max_states=settings.max_states)
        logger.info("swept %s: %s", row["rule"], row)
        rows.append(row)
    frame = pd.DataFrame(rows, columns=["rule", "forbidden", "stable_at", "k", "p", "C"], dtype=object)
    _table_or_json(args, frame, {"ell_max": settings.ell_max, "k_max": settings.k_max, "p_max": settings.p_max})
    return EXIT_OK


def _all_patterns(base: int, max_width: int, max_height: int):
    for w in range(1, max_width + 1):
        for h in range(1, max_height + 1):
            for code in range(base ** (w * h)):
                digits = np.base_repr(code, base).zfill(w * h)[::-1]
                grid = np.array([int(ch) for ch in digits], dtype=np.uint8).reshape(w, h)
                yield Pattern.from_array(grid)


def cmd_sweep_padding(args: argparse.Namespace, rule: LocalRule, settings: Settings) -> int:
    if args.patterns:
        patterns = [read_pattern(path, args.format) for path in args.patterns]
    else:
        patterns = _all_patterns(rule.base, args.max_width, args.max_height)
    rows = sweep_padding(rule, patterns, args.c_max, settings.budget_nodes)
    frame = pd.DataFrame(rows, columns=["width", "height", "pattern", "least_orphan_padding"], dtype=object)
    counts = Counter("none" if r["least_orphan_padding"] is None else str(r["least_orphan_padding"]) for r in rows)
    _table_or_json(args, frame, {"c_max": args.c_max, "counts": dict(sorted(counts.items()))})
    return EXIT_OK


COMMANDS = {
    "verify-paper": cmd_verify_paper,
    "is-goe": cmd_is_goe,
    "is-orphan": cmd_is_orphan,
    "find-preimage": cmd_find_preimage,
    "periodize": cmd_periodize,
    "to-dimacs": cmd_to_dimacs,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "render": cmd_render,
    "trace-report": cmd_trace_report,
    "sweep-rules": cmd_sweep_rules,
    "sweep-padding": cmd_sweep_padding,
}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lifetraces",
        description="Trace automata, orphan search and semilinear preimages for 2-D cellular automata.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--rule", default="life", help="built-in name, B/S rulestring or YAML rule file")
    parser.add_argument("--max-states", type=int, help="automaton state cap")
    parser.add_argument("--budget-nodes", type=int, help="search node budget")
    parser.add_argument("--time-budget", type=float, help="search time budget in seconds")
    parser.add_argument("--threads", type=int, help="worker processes for the preimage search")
    parser.add_argument("--output", help="write the result here instead of stdout")
    parser.add_argument("--store", help="also record JSON reports in this certificate directory")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def pattern_command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("pattern", help="pattern file")
        p.add_argument("--format", default="auto", choices=["auto", "text", "rle", "binary"])
        return p

    p = sub.add_parser("verify-paper", help="machine-check the Game of Life trace claims")
    p.add_argument("--ell", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--p", type=int)

    p = pattern_command("is-goe", "decide whether conf_0(pattern) is a Garden of Eden")
    p.add_argument("--constants", help="YAML file with verified trace constants")

    p = pattern_command("is-orphan", "decide whether pad0(pattern, pad) is an orphan")
    p.add_argument("--pad", type=int, default=0)

    p = pattern_command("find-preimage", "search a preimage of pad0(pattern, pad)")
    p.add_argument("--pad", type=int, default=0)
    p.add_argument("--ring", type=int, default=0, help="force this many outer rings to zero")

    p = pattern_command("periodize", "build a verified semilinear preimage of conf_0(pattern)")
    p.add_argument("--constants", help="YAML file with verified trace constants")
    p.add_argument("--window", help="preimage window, centred like the pattern")
    p.add_argument("--pad", type=int, default=2, help="padding for the bordered preimage search")
    p.add_argument("--radius", type=int, help="display radius of the stage snapshots")
    p.add_argument("--render", action="store_true", help="include a rendered grid of the result")

    p = pattern_command("to-dimacs", "write the preimage problem as DIMACS CNF")
    p.add_argument("--pad", type=int, default=0)
    p.add_argument("--ring", type=int, default=0)

    p = pattern_command("encode", "binary word 0^M 1^N 0 u of the centred pattern")
    p.add_argument("--order", default="row", choices=["row", "column"])

    p = sub.add_parser("decode", help="pattern of a binary word")
    p.add_argument("word", help="the word, or a file holding it")
    p.add_argument("--order", default="row", choices=["row", "column"])
    p.add_argument("--format", default="text", choices=["text", "rle"])

    p = pattern_command("render", "draw the centred pattern, optionally with region cuts")
    p.add_argument("--radius", type=int)
    p.add_argument("--cut-x", type=int, action="append")
    p.add_argument("--cut-y", type=int, action="append")
    p.add_argument("--to", default="text", choices=["text", "rle", "binary"])

    p = sub.add_parser("trace-report", help="stability data of the traces in all rotations")
    p.add_argument("--n", type=int)
    p.add_argument("--ell-max", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--p", type=int)

    p = sub.add_parser("sweep-rules", help="stability and periodizability over several rules")
    p.add_argument("rules", nargs="+")
    p.add_argument("--ell-max", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--p-max", type=int)
    p.add_argument("--table", action="store_true", help="print a text table instead of JSON")

    p = sub.add_parser("sweep-padding", help="least orphan padding of small patterns")
    p.add_argument("patterns", nargs="*")
    p.add_argument("--format", default="auto", choices=["auto", "text", "rle", "binary"])
    p.add_argument("--max-width", type=int, default=2)
    p.add_argument("--max-height", type=int, default=2)
    p.add_argument("--c-max", type=int, default=2)
    p.add_argument("--table", action="store_true", help="print a text table instead of JSON")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    settings = Settings.from_env({
        "max_states": args.max_states,
        "budget_nodes": args.budget_nodes,
        "time_budget": args.time_budget,
        "threads": args.threads,
        "ell_max": getattr(args, "ell_max", None),
        "k_max": getattr(args, "k_max", None),
        "p_max": getattr(args, "p_max", None),
    })
    _configure_logging(args.verbose, args.quiet, settings.log_level)

    try:
        rule = load_rule_spec(args.rule)
        return COMMANDS[args.command](args, rule, settings)
    except (OSError, PatternFormatError, EncodingError, RuleSpecError) as e:
        logger.error("%s", e)
        return EXIT_IO
    except (LifeTracesError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
