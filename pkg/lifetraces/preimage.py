"""
Preimage search for rectangular patterns.

The searcher assigns the cells of the search domain (the target dilated by
the rule radius) column by column, each column bottom to top, trying symbols
in increasing order.  Because neighbourhood digits are numbered in the same
column-major order, the cells of every window are assigned as a prefix of
its digit sequence.  After each assignment every window through the cell is
checked against a table saying whether its known prefix can still produce
the target symbol.  The search is exhaustive, so UNSAT proves that the
target is an orphan; running out of budget gives INDETERMINATE instead.
"""

import enum
import logging
import multiprocessing as mp
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .ca_core import LocalRule, Pattern, apply_rule, derive_forbidden, pad0
from .exceptions import BudgetExceeded, LifeTracesError
from .traces import TraceConstants, extension_depth

logger = logging.getLogger(__name__)

BRUTE_FORCE_CELL_LIMIT = 25
_CHUNK = 1 << 20


class Verdict(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    INDETERMINATE = "INDETERMINATE"


@dataclass(frozen=True)
class PreimageProblem:
    """
    Find x on [x0-r, x0+M+r) x [y0-r, y0+N+r) with apply_rule(x) = target

    zero_border forces the outermost `zero_border` rings of the search domain
    to the zero symbol.
    """

    rule: LocalRule
    target: Pattern
    zero_border: int = 0

    def __post_init__(self):
        if not self.target.is_rectangular:
            raise ValueError("preimage search needs a rectangular target")
        if self.target.width < 1 or self.target.height < 1:
            raise ValueError("target must have at least one cell")
        if self.zero_border < 0:
            raise ValueError("zero_border must be non-negative")

    @property
    def domain_width(self) -> int:
        return self.target.width + 2 * self.rule.radius

    @property
    def domain_height(self) -> int:
        return self.target.height + 2 * self.rule.radius

    @property
    def domain_origin(self) -> Tuple[int, int]:
        x0, y0 = self.target.origin
        return x0 - self.rule.radius, y0 - self.rule.radius

    def cell_bounds(self) -> List[Tuple[int, int]]:
        """(lowest, highest) allowed symbol per cell in search order"""
        w, h = self.domain_width, self.domain_height
        z = self.zero_border
        top = self.rule.base - 1
        bounds = []
        for i in range(w):
            for j in range(h):
                ring = i < z or j < z or i >= w - z or j >= h - z
                bounds.append((0, 0) if ring else (0, top))
        return bounds


@dataclass
class SearchOutcome:
    verdict: Verdict
    witness: Optional[Pattern] = None
    nodes: int = 0
    elapsed_seconds: float = 0.0
    reason: str = ""

    def to_dict(self) -> Dict:
        from .pattern_io import format_pattern

        return {
            "verdict": self.verdict.value,
            "witness": None if self.witness is None else format_pattern(self.witness).splitlines(),
            "witness_origin": None if self.witness is None else list(self.witness.origin),
            "nodes": self.nodes,
            "elapsed_seconds": self.elapsed_seconds,
            "reason": self.reason,
        }


@lru_cache(maxsize=None)
def _prefix_tables(rule: LocalRule) -> Tuple[Tuple[bytes, ...], ...]:
    """
    tables[target][length][prefix] = 1 iff some completion of the first
    `length` digits maps to `target`
    """
    table = rule.lookup_table()
    base = rule.base
    cells = rule.cell_count
    out = []
    for target in range(base):
        levels = [None] * (cells + 1)
        current = table == target
        levels[cells] = current
        for length in range(cells - 1, -1, -1):
            current = current.reshape(base, base ** length).any(axis=0)
            levels[length] = current
        out.append(tuple(level.astype(np.uint8).tobytes() for level in levels))
    return tuple(out)


class _Searcher:
    """Iterative backtracking over the search domain"""

    def __init__(self, problem: PreimageProblem, bounds: Optional[List[Tuple[int, int]]] = None):
        rule = problem.rule
        self.problem = problem
        self.base = rule.base
        r = rule.radius
        d = rule.diameter
        h = problem.domain_height
        m, n = problem.target.width, problem.target.height
        target = problem.target.to_array()
        tables = _prefix_tables(rule)
        self.size = problem.domain_width * h
        self.bounds = bounds or problem.cell_bounds()

        # windows through each cell: (window id, weight, feasibility table)
        self.windows_of: List[List[Tuple[int, int, bytes]]] = [[] for _ in range(self.size)]
        for a in range(m):
            for b in range(n):
                w_id = a * n + b
                levels = tables[int(target[a, b])]
                for dx in range(d):
                    for dy in range(d):
                        pos = dx * d + dy
                        cell = (a + dx) * h + (b + dy)
                        self.windows_of[cell].append((w_id, self.base ** pos, levels[pos + 1]))
        self.window_count = m * n
        self.radius = r

    def run(self, budget_nodes: Optional[int], time_budget: Optional[float]) -> Tuple[Verdict, Optional[List[int]], int]:
        size = self.size
        base = self.base
        bounds = self.bounds
        windows_of = self.windows_of
        prefix = [0] * self.window_count
        values = [0] * size
        trial = [lo for lo, _ in bounds] + [0]
        nodes = 0
        started = time.monotonic()
        t = 0
        while True:
            if t == size:
                return Verdict.SAT, values, nodes
            v = trial[t]
            if v > bounds[t][1]:
                trial[t] = bounds[t][0]
                t -= 1
                if t < 0:
                    return Verdict.UNSAT, None, nodes
                old = values[t]
                for w_id, weight, _ in windows_of[t]:
                    prefix[w_id] -= old * weight
                trial[t] += 1
                continue
            nodes += 1
            if budget_nodes is not None and nodes > budget_nodes:
                return Verdict.INDETERMINATE, None, nodes
            if time_budget is not None and nodes & 0xFFF == 0 and time.monotonic() - started > time_budget:
                return Verdict.INDETERMINATE, None, nodes
            ok = True
            for w_id, weight, table in windows_of[t]:
                prefix[w_id] += v * weight
            for w_id, weight, table in windows_of[t]:
                if not table[prefix[w_id]]:
                    ok = False
                    break
            if ok:
                values[t] = v
                t += 1
                if t < size:
                    trial[t] = bounds[t][0]
            else:
                for w_id, weight, _ in windows_of[t]:
                    prefix[w_id] -= v * weight
                trial[t] += 1
            if nodes % 1000000 == 0:
                logger.debug("search: %d nodes, depth %d of %d", nodes, t, size)


def _witness_pattern(problem: PreimageProblem, values: Sequence[int]) -> Pattern:
    w, h = problem.domain_width, problem.domain_height
    grid = np.asarray(values, dtype=np.uint8).reshape(w, h)
    return Pattern.from_array(grid, problem.domain_origin)


def _check_witness(problem: PreimageProblem, witness: Pattern) -> None:
    if apply_rule(problem.rule, witness) != problem.target:
        raise LifeTracesError("search produced a witness whose image differs from the target")


def _run_prefix(args) -> Tuple[str, Optional[List[int]], int]:
    """Worker entry point; rebuilds the problem from picklable pieces"""
    base, radius, table, grid, origin, zero_border, fixed, budget_nodes, time_budget = args
    rule = LocalRule(base, radius, table=table)
    problem = PreimageProblem(rule, Pattern.from_array(grid, origin), zero_border)
    bounds = problem.cell_bounds()
    for t, v in enumerate(fixed):
        lo, hi = bounds[t]
        if not lo <= v <= hi:
            return Verdict.UNSAT.value, None, 0
        bounds[t] = (v, v)
    verdict, values, nodes = _Searcher(problem, bounds).run(budget_nodes, time_budget)
    return verdict.value, (list(values) if values is not None else None), nodes


def _prefix_split(base: int, size: int, threads: int) -> int:
    length = 0
    while base ** length < 4 * threads and length < size:
        length += 1
    return length


def find_preimage(
    problem: PreimageProblem,
    budget_nodes: Optional[int] = None,
    time_budget: Optional[float] = None,
    threads: Optional[int] = None,
) -> SearchOutcome:
    """
    Complete search for a preimage of the target

    With threads > 1 the first cells are fixed to every prefix in search
    order and the subtrees run in a process pool.  The reported witness is
    the first one in search order, exactly as in the sequential search.
    """
    budget_nodes = config.BUDGET_NODES if budget_nodes is None else budget_nodes
    time_budget = config.TIME_BUDGET if time_budget is None else time_budget
    threads = config.THREADS if threads is None else threads
    started = time.monotonic()
    searcher = _Searcher(problem)

    if threads <= 1:
        verdict, values, nodes = searcher.run(budget_nodes, time_budget)
    else:
        length = _prefix_split(problem.rule.base, searcher.size, threads)
        base = problem.rule.base
        prefixes = []
        for code in range(base ** length):
            digits = []
            for _ in range(length):
                code, dgt = divmod(code, base)
                digits.append(dgt)
            # first cell varies slowest, matching search order
            prefixes.append(list(reversed(digits)))
        rule = problem.rule
        payload = [
            (
                rule.base, rule.radius, rule.lookup_table(), problem.target.to_array(),
                problem.target.origin, problem.zero_border, prefix, budget_nodes, time_budget,
            )
            for prefix in prefixes
        ]
        with mp.Pool(threads) as pool:
            results = pool.map(_run_prefix, payload)
        verdict, values, nodes = Verdict.UNSAT, None, 0
        for raw, vals, count in results:
            nodes += count
            result = Verdict(raw)
            if result is Verdict.UNSAT:
                continue
            verdict, values = result, vals
            break
        logger.debug("parallel search over %d prefixes: %s", len(prefixes), verdict.value)

    elapsed = time.monotonic() - started
    outcome = SearchOutcome(verdict, nodes=nodes, elapsed_seconds=elapsed)
    if verdict is Verdict.SAT:
        outcome.witness = _witness_pattern(problem, values)
        _check_witness(problem, outcome.witness)
    elif verdict is Verdict.INDETERMINATE:
        outcome.reason = "node or time budget exhausted"
    logger.info(
        "find_preimage %dx%d: %s after %d nodes (%.3fs)",
        problem.target.width, problem.target.height, verdict.value, nodes, elapsed,
    )
    return outcome


def is_orphan(target: Pattern, rule: LocalRule, budget_nodes: Optional[int] = None, threads: Optional[int] = None) -> bool:
    """
    Raises:
        BudgetExceeded: the search could not decide within its budget
    """
    outcome = find_preimage(PreimageProblem(rule, target), budget_nodes, threads=threads)
    if outcome.verdict is Verdict.INDETERMINATE:
        raise BudgetExceeded(f"orphan search undecided after {outcome.nodes} nodes")
    return outcome.verdict is Verdict.UNSAT


def is_finite_goe(
    pattern: Pattern,
    constants: TraceConstants,
    rule: LocalRule,
    budget_nodes: Optional[int] = None,
    threads: Optional[int] = None,
) -> bool:
    """Whether conf_0(pattern) is a Garden of Eden, via the orphan status of pad0(pattern, c)"""
    constants.require_verified(rule)
    return is_orphan(pad0(pattern, constants.c), rule, budget_nodes, threads)


def find_bordered_preimage(
    rule: LocalRule,
    target: Pattern,
    pad: int,
    ring: Optional[int] = None,
    budget_nodes: Optional[int] = None,
    threads: Optional[int] = None,
) -> SearchOutcome:
    """
    Preimage of pad0(target, pad) whose outermost `ring` rings are zero

    With ring >= 2r its zero extension is a preimage of conf_0(target).
    """
    ring = 2 * rule.radius if ring is None else ring
    return find_preimage(PreimageProblem(rule, pad0(target, pad), ring), budget_nodes, threads=threads)


def sweep_padding(rule: LocalRule, patterns: Iterable[Pattern], c_max: int, budget_nodes: Optional[int] = None) -> List[Dict]:
    """For every pattern the least c <= c_max making pad0(pattern, c) an orphan, if any"""
    from .pattern_io import format_pattern

    rows = []
    for p in patterns:
        least = None
        for c in range(c_max + 1):
            if is_orphan(pad0(p, c), rule, budget_nodes):
                least = c
                break
        rows.append({
            "width": p.width,
            "height": p.height,
            "pattern": format_pattern(p).strip().replace("\n", "/"),
            "least_orphan_padding": least,
        })
    return rows


# ---------------------------------------------------------------------------
# DIMACS


def _variable(problem: PreimageProblem, i: int, j: int) -> int:
    """Row-major numbering from the south-west corner of the search domain"""
    return j * problem.domain_width + i + 1


def to_dimacs(problem: PreimageProblem) -> str:
    """
    Blocked-assignment CNF: one clause per neighbourhood whose image is wrong

    Raises:
        ValueError: non-binary alphabet
    """
    rule = problem.rule
    if rule.base != 2:
        raise ValueError("DIMACS export needs a binary alphabet")
    table = rule.lookup_table()
    d = rule.diameter
    target = problem.target.to_array()
    m, n = target.shape
    x0, y0 = problem.domain_origin
    bad = {v: [int(i) for i in np.nonzero(table != v)[0]] for v in (0, 1)}
    clauses: List[List[int]] = []
    for a in range(m):
        for b in range(n):
            variables = [_variable(problem, a + dx, b + dy) for dx in range(d) for dy in range(d)]
            for index in bad[int(target[a, b])]:
                clause = []
                for pos, var in enumerate(variables):
                    clause.append(-var if (index >> pos) & 1 else var)
                clauses.append(clause)
    bounds = problem.cell_bounds()
    h = problem.domain_height
    for t, (lo, hi) in enumerate(bounds):
        if hi == 0:
            clauses.append([-_variable(problem, t // h, t % h)])
    num_vars = problem.domain_width * problem.domain_height
    lines = [
        f"c preimage of a {m}x{n} target under rule {rule.name}",
        f"c variable j*{problem.domain_width}+i+1 is cell ({x0}+i, {y0}+j), row-major from the south-west corner",
        f"p cnf {num_vars} {len(clauses)}",
    ]
    lines.extend(" ".join(map(str, c)) + " 0" for c in clauses)
    return "\n".join(lines) + "\n"


def decode_dimacs_model(problem: PreimageProblem, model: Iterable[int]) -> Pattern:
    """Witness pattern from a solver model (positive literal = live cell)"""
    w, h = problem.domain_width, problem.domain_height
    grid = np.zeros((w, h), dtype=np.uint8)
    for lit in model:
        if lit > 0 and lit <= w * h:
            j, i = divmod(lit - 1, w)
            grid[i, j] = 1
    return Pattern.from_array(grid, problem.domain_origin)


# ---------------------------------------------------------------------------
# brute-force oracles


def _candidate_images(rule: LocalRule, m: int, n: int, candidates: np.ndarray) -> np.ndarray:
    """Image codes (bit a*n+b for target cell (a, b)) of binary candidates in search order"""
    r = rule.radius
    d = rule.diameter
    h = n + 2 * r
    table = rule.lookup_table()
    codes = np.zeros(candidates.shape, dtype=np.int64)
    for a in range(m):
        for b in range(n):
            index = np.zeros(candidates.shape, dtype=np.int64)
            for dx in range(d):
                for dy in range(d):
                    cell = (a + dx) * h + (b + dy)
                    index |= ((candidates >> cell) & 1) << (dx * d + dy)
            codes |= table[index].astype(np.int64) << (a * n + b)
    return codes


def image_code(pattern: Pattern) -> int:
    """Bit a*N+b set iff cell (a, b) of a binary rectangle is live"""
    grid = pattern.to_array()
    m, n = grid.shape
    return sum(int(grid[a, b]) << (a * n + b) for a in range(m) for b in range(n))


def brute_force_preimage(rule: LocalRule, target: Pattern) -> SearchOutcome:
    """Exhaustive enumeration; the witness is the least candidate in search order"""
    problem = PreimageProblem(rule, target)
    if rule.base != 2:
        raise ValueError("brute-force enumeration needs a binary alphabet")
    cells = problem.domain_width * problem.domain_height
    if cells > BRUTE_FORCE_CELL_LIMIT:
        raise ValueError(f"brute force is limited to {BRUTE_FORCE_CELL_LIMIT} cells, got {cells}")
    started = time.monotonic()
    want = image_code(target)
    total = 1 << cells
    for offset in range(0, total, _CHUNK):
        candidates = np.arange(offset, min(total, offset + _CHUNK), dtype=np.int64)
        hits = np.nonzero(_candidate_images(rule, target.width, target.height, candidates) == want)[0]
        if hits.size:
            code = int(candidates[hits[0]])
            values = [(code >> t) & 1 for t in range(cells)]
            witness = _witness_pattern(problem, values)
            return SearchOutcome(Verdict.SAT, witness, offset + int(hits[0]) + 1, time.monotonic() - started)
    return SearchOutcome(Verdict.UNSAT, None, total, time.monotonic() - started)


def achievable_images(rule: LocalRule, m: int, n: int) -> FrozenSet[int]:
    """Image codes of all (m+2r)x(n+2r) binary rectangles"""
    if rule.base != 2:
        raise ValueError("brute-force enumeration needs a binary alphabet")
    cells = (m + 2 * rule.radius) * (n + 2 * rule.radius)
    if cells > BRUTE_FORCE_CELL_LIMIT:
        raise ValueError(f"brute force is limited to {BRUTE_FORCE_CELL_LIMIT} cells, got {cells}")
    seen = np.zeros(1 << (m * n), dtype=bool)
    total = 1 << cells
    for offset in range(0, total, _CHUNK):
        candidates = np.arange(offset, min(total, offset + _CHUNK), dtype=np.int64)
        seen[_candidate_images(rule, m, n, candidates)] = True
    logger.debug("achievable_images %dx%d: %d of %d", m, n, int(seen.sum()), seen.size)
    return frozenset(int(c) for c in np.nonzero(seen)[0])


# ---------------------------------------------------------------------------
# boundary probe

_TURNS_TO_SOUTH = {"S": 0, "E": 1, "N": 2, "W": 3}


def boundary_extension_probe(
    rule: LocalRule, witness: Pattern, direction: str, depth: int
) -> int:
    """
    How many rows the witness extends towards `direction` keeping a zero image

    Each new row must leave every newly determined cell (the windows lying
    inside the known width) mapping to zero.
    """
    if direction not in _TURNS_TO_SOUTH:
        raise ValueError(f"direction must be one of N, S, E, W, got {direction!r}")
    turns = _TURNS_TO_SOUTH[direction]
    forbidden = derive_forbidden(rule, 0).rotate90(turns)
    rotated = witness.rotate90(turns)
    return extension_depth(rotated, depth, forbidden)
