"""
Semilinear preimages of finite-support configurations.

The input is y, supported in [-N, N]^2, and a window x whose zero extension
is a preimage of y.  With R = N + r the square [-R, R]^2 is protected; the
four half-planes beyond it are replaced one after another (north, south,
west, east).  Each replacement keeps the n rows just inside the boundary
(the stripe) and puts k preperiod rows and a p-periodic tail above them.

A replacement is a walk over band columns: a band column holds the n stripe
cells and the k+p continuation cells of one position along the boundary,
with rows past n+k+p folded back into the period.  Every 2r+1 consecutive
band columns must avoid F.  The stripe itself is eventually periodic along
the boundary (period 1 for the north and south stripes, p for the west and
east ones, which cross the earlier replacements), so the walk lives on the
finite graph of (phase, last 2r continuation columns), at most
p |A|^(2r(k+p)) nodes.  Inside the middle range the walk is the
lexicographically least one (columns left to right, rows bottom to top);
outside it the greedy least step among nodes with an infinite continuation
runs into a cycle, whose length becomes the vertical period of the flank
columns and quadrants.

The result is verified on a finite box: the configuration beyond the finite
region bounds is invariant under shifting by the lcm of the periods on that
side, so a cell outside the box sees the same neighbourhood as a cell inside
it, shifted by a multiple of that period.  Checking the box extended by r
plus one such period per side covers every neighbourhood type.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .ca_core import (
    FiniteConfig,
    ForbiddenSet,
    LocalRule,
    Pattern,
    derive_forbidden,
    game_of_life,
    image_array,
    image_of_config,
)
from .exceptions import CapacityExceeded, PeriodizationError
from .traces import TraceConstants

logger = logging.getLogger(__name__)

SIDES = ("N", "S", "W", "E")
QUADRANTS = ("NE", "NW", "SE", "SW")
STAGES = ("x", "x1", "x2", "x3", "x5")

# clockwise quarter turns taking each side to the north
_TURNS_TO_NORTH = {"N": 0, "E": 3, "S": 2, "W": 1}

BAND_TABLE_LIMIT = 1 << 22
VERIFY_CELL_LIMIT = 1 << 22

Bounds = Tuple[Optional[int], Optional[int], Optional[int], Optional[int]]
ValueFn = Callable[[int, int], int]


def _rotate(x: int, y: int, turns: int) -> Tuple[int, int]:
    for _ in range(turns % 4):
        x, y = y, -x
    return x, y


def _symbol_char(v: int) -> str:
    return {0: ".", 1: "O"}.get(v, str(v))


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class RegionSpec:
    """
    A product of two intervals filled by a generator under axis-aligned periods

    bounds are (x_min, x_max, y_min, y_max), None meaning unbounded.  Along
    a periodic axis the generator is one period wide; along the other it
    covers the whole (finite) interval.
    """

    kind: str
    direction: str
    bounds: Bounds
    periods: Tuple[Tuple[int, int], ...]
    generator: Pattern
    name: str = ""

    def __post_init__(self):
        expected = {"core": 0, "strip": 1, "quadrant": 2}
        if self.kind not in expected:
            raise ValueError(f"unknown region kind {self.kind!r}")
        if len(self.periods) != expected[self.kind]:
            raise ValueError(f"a {self.kind} region takes {expected[self.kind]} period vectors")
        for px, py in self.periods:
            if (px == 0) == (py == 0) or px < 0 or py < 0:
                raise ValueError("period vectors must be nonzero, positive and axis-aligned")
        if not self.generator.is_rectangular:
            raise ValueError("region generators must be rectangular")
        x_min, x_max, y_min, y_max = self.bounds
        gx0, gy0, gw, gh = self.generator.rect
        for lo, hi, period, g0, size, axis in (
            (x_min, x_max, self.period_x, gx0, gw, "x"),
            (y_min, y_max, self.period_y, gy0, gh, "y"),
        ):
            if period is None:
                if lo is None or hi is None:
                    raise ValueError(f"unbounded {axis} interval without a period")
                if g0 != lo or size != hi - lo + 1:
                    raise ValueError(f"generator does not cover the {axis} interval")
            elif size != period:
                raise ValueError(f"generator is not one {axis} period wide")

    @property
    def period_x(self) -> Optional[int]:
        return next((px for px, _ in self.periods if px), None)

    @property
    def period_y(self) -> Optional[int]:
        return next((py for _, py in self.periods if py), None)

    def contains(self, x: int, y: int) -> bool:
        x_min, x_max, y_min, y_max = self.bounds
        return (
            (x_min is None or x >= x_min)
            and (x_max is None or x <= x_max)
            and (y_min is None or y >= y_min)
            and (y_max is None or y <= y_max)
        )

    def value(self, x: int, y: int) -> int:
        gx0, gy0 = self.generator.origin
        if self.period_x:
            x = gx0 + (x - gx0) % self.period_x
        if self.period_y:
            y = gy0 + (y - gy0) % self.period_y
        return self.generator[(x, y)]

    def fill(self, grid: np.ndarray, x0: int, y0: int, coverage: Optional[np.ndarray] = None) -> None:
        """Write the region's cells inside grid (indexed [x - x0, y - y0])"""
        w, h = grid.shape
        x_min, x_max, y_min, y_max = self.bounds
        lo_x = x0 if x_min is None else max(x0, x_min)
        hi_x = x0 + w - 1 if x_max is None else min(x0 + w - 1, x_max)
        lo_y = y0 if y_min is None else max(y0, y_min)
        hi_y = y0 + h - 1 if y_max is None else min(y0 + h - 1, y_max)
        if lo_x > hi_x or lo_y > hi_y:
            return
        gx0, gy0 = self.generator.origin
        xs = np.arange(lo_x, hi_x + 1)
        ys = np.arange(lo_y, hi_y + 1)
        gi = (xs - gx0) % self.period_x if self.period_x else xs - gx0
        gj = (ys - gy0) % self.period_y if self.period_y else ys - gy0
        block = self.generator.to_array()[np.ix_(gi, gj)]
        grid[lo_x - x0:hi_x - x0 + 1, lo_y - y0:hi_y - y0 + 1] = block
        if coverage is not None:
            coverage[lo_x - x0:hi_x - x0 + 1, lo_y - y0:hi_y - y0 + 1] += 1

    def to_dict(self) -> Dict:
        from .pattern_io import format_pattern

        return {
            "kind": self.kind,
            "direction": self.direction,
            "name": self.name,
            "bounds": list(self.bounds),
            "periods": [list(v) for v in self.periods],
            "generator_origin": list(self.generator.origin),
            "generator": format_pattern(self.generator).splitlines(),
        }


def _interval_points(values: Sequence[Optional[int]]) -> List[int]:
    """One representative per elementary interval of the breakpoints"""
    breaks = sorted({v for v in values if v is not None})
    if not breaks:
        return [0]
    return [breaks[0] - 1] + breaks


@dataclass
class SemilinearConfig:
    """A configuration given as a finite list of disjoint periodic regions"""

    regions: List[RegionSpec]

    def region_at(self, x: int, y: int) -> RegionSpec:
        for region in self.regions:
            if region.contains(x, y):
                return region
        raise ValueError(f"no region contains ({x}, {y})")

    def value(self, x: int, y: int) -> int:
        return self.region_at(x, y).value(x, y)

    def box(self, x0: int, y0: int, width: int, height: int) -> Pattern:
        grid = np.zeros((width, height), dtype=np.uint8)
        for region in self.regions:
            region.fill(grid, x0, y0)
        return Pattern.from_array(grid, (x0, y0))

    def window(self, radius: int) -> Pattern:
        """The configuration on [-radius, radius]^2"""
        return self.box(-radius, -radius, 2 * radius + 1, 2 * radius + 1)

    def finite_extent(self) -> Tuple[int, int, int, int]:
        """(x_lo, x_hi, y_lo, y_hi) over all finite region bounds"""
        xs = [v for r in self.regions for v in r.bounds[:2] if v is not None] or [0]
        ys = [v for r in self.regions for v in r.bounds[2:] if v is not None] or [0]
        return min(xs), max(xs), min(ys), max(ys)

    def partition_check(self, radius: int) -> bool:
        """
        Regions cover Z^2 exactly once: counted on [-radius, radius]^2 and
        on one representative of every cell of the bound arrangement
        """
        size = 2 * radius + 1
        grid = np.zeros((size, size), dtype=np.uint8)
        coverage = np.zeros((size, size), dtype=np.int64)
        for region in self.regions:
            region.fill(grid, -radius, -radius, coverage)
        if not (coverage == 1).all():
            return False
        xs = _interval_points(
            [r.bounds[0] for r in self.regions]
            + [None if r.bounds[1] is None else r.bounds[1] + 1 for r in self.regions]
        )
        ys = _interval_points(
            [r.bounds[2] for r in self.regions]
            + [None if r.bounds[3] is None else r.bounds[3] + 1 for r in self.regions]
        )
        for x in xs:
            for y in ys:
                if sum(r.contains(x, y) for r in self.regions) != 1:
                    return False
        return True

    def side_period(self, side: str) -> int:
        """lcm of the periods of the regions unbounded towards `side`"""
        index = {"W": 0, "E": 1, "S": 2, "N": 3}[side]
        out = 1
        for region in self.regions:
            if region.bounds[index] is None:
                period = region.period_x if side in "WE" else region.period_y
                out = math.lcm(out, period)
        return out

    def max_period(self) -> int:
        return max((max(v) for r in self.regions for v in r.periods), default=0)

    def to_dict(self) -> Dict:
        return {
            "regions": [r.to_dict() for r in self.regions],
            "max_period": self.max_period(),
        }


# ---------------------------------------------------------------------------
# half-plane continuations


def _tail_value(transient: Sequence[int], cycle: Sequence[int], i: int) -> int:
    if i < len(transient):
        return transient[i]
    return cycle[(i - len(transient)) % len(cycle)]


@dataclass
class HalfPlaneContinuation:
    """
    Replacement of the half-plane beyond one side, in that side's frame

    The frame is the configuration turned so the side faces north; frame
    rows above `boundary` are replaced.  Cross-sections pack the k+p
    continuation cells of a frame column, the lowest row in the least
    significant digit.  Frame columns left of `start` follow the left tail
    (listed outwards), columns right of the middle follow the right tail.
    """

    side: str
    boundary: int
    n: int
    k: int
    p: int
    base: int
    start: int
    middle: Tuple[int, ...]
    left_transient: Tuple[int, ...]
    left_cycle: Tuple[int, ...]
    right_transient: Tuple[int, ...]
    right_cycle: Tuple[int, ...]

    @property
    def turns(self) -> int:
        return _TURNS_TO_NORTH[self.side]

    @property
    def end(self) -> int:
        return self.start + len(self.middle) - 1

    @property
    def left_period(self) -> int:
        return len(self.left_cycle)

    @property
    def right_period(self) -> int:
        return len(self.right_cycle)

    def cross_section(self, u: int) -> int:
        if u < self.start:
            return _tail_value(self.left_transient, self.left_cycle, self.start - 1 - u)
        if u > self.end:
            return _tail_value(self.right_transient, self.right_cycle, u - self.end - 1)
        return self.middle[u - self.start]

    def slot(self, v: int) -> int:
        j = v - self.boundary - 1
        if j < 0:
            raise ValueError(f"frame row {v} is not above the boundary")
        return j if j < self.k else self.k + (j - self.k) % self.p

    def frame_value(self, u: int, v: int) -> int:
        return (self.cross_section(u) // self.base ** self.slot(v)) % self.base

    def contains(self, x: int, y: int) -> bool:
        return _rotate(x, y, self.turns)[1] > self.boundary

    def value(self, x: int, y: int) -> int:
        u, v = _rotate(x, y, self.turns)
        return self.frame_value(u, v)

    def to_pattern(self, radius: int) -> Pattern:
        """The k+p continuation rows over frame columns [-radius, radius], in place"""
        height = self.k + self.p
        cells = {}
        for u in range(-radius, radius + 1):
            for j in range(height):
                v = self.boundary + 1 + j
                cells[(u, v)] = self.frame_value(u, v)
        frame = Pattern(cells, (-radius, self.boundary + 1, 2 * radius + 1, height))
        return frame.rotate90((4 - self.turns) % 4)

    def to_dict(self) -> Dict:
        return {
            "side": self.side,
            "boundary": self.boundary,
            "n": self.n,
            "k": self.k,
            "p": self.p,
            "start": self.start,
            "middle": list(self.middle),
            "left_transient": list(self.left_transient),
            "left_cycle": list(self.left_cycle),
            "right_transient": list(self.right_transient),
            "right_cycle": list(self.right_cycle),
        }


@lru_cache(maxsize=256)
def _band_table(forbidden: ForbiddenSet, n: int, k: int, p: int, stripe: Tuple[Tuple[int, ...], ...]) -> np.ndarray:
    """
    valid[combo] for 2r+1 consecutive band columns over the given stripe
    columns; combo = sum(c_i * B**i), oldest column first, B = |A|^(k+p)
    """
    base = forbidden.base
    r = forbidden.radius
    d = 2 * r + 1
    free = k + p
    height = n + free
    combos = base ** (free * d)
    if combos > BAND_TABLE_LIMIT:
        raise CapacityExceeded(f"band table over {d} columns of height {height}", BAND_TABLE_LIMIT)

    values = np.arange(combos, dtype=np.int64)
    digits = np.empty((d, free, combos), dtype=np.int64)
    for i in range(d):
        for t in range(free):
            values, digits[i, t] = np.divmod(values, base)

    def fold(row: int) -> int:
        return row if row < height else n + k + (row - n - k) % p

    mask = forbidden.mask
    bad = np.zeros(combos, dtype=bool)
    for bottom in range(n - 2 * r, height):
        index = np.zeros(combos, dtype=np.int64)
        weight = 1
        for i in range(d):
            for j in range(d):
                row = fold(bottom + j)
                if row < n:
                    index += stripe[i][row] * weight
                else:
                    index += digits[i, row - n] * weight
                weight *= base
        bad |= mask[index]
    return ~bad


@lru_cache(maxsize=None)
def _lex_order(base: int, free: int) -> np.ndarray:
    """Cross-sections in lexicographic order, lowest row compared first"""
    order = sorted(range(base ** free), key=lambda c: [(c // base ** t) % base for t in range(free)])
    return np.asarray(order, dtype=np.int64)


class _StripeSolver:
    """Lasso search for a continuation of one eventually periodic stripe"""

    def __init__(
        self,
        forbidden: ForbiddenSet,
        n: int,
        k: int,
        p: int,
        stripe: List[Tuple[int, ...]],
        start: int,
        period: int,
    ):
        r = forbidden.radius
        if r < 1:
            raise PeriodizationError("periodization needs a rule of radius at least 1")
        self.forbidden = forbidden
        self.n, self.k, self.p = n, k, p
        self.span = 2 * r
        self.stripe = stripe
        self.start = start
        self.end = start + len(stripe) - 1
        self.period = period
        if len(stripe) < period + 2 * self.span:
            raise PeriodizationError("stripe middle range is shorter than its periodic margins")

        self.letters = forbidden.base ** (k + p)
        if self.letters ** (self.span + 1) > BAND_TABLE_LIMIT:
            raise CapacityExceeded("continuation graph", BAND_TABLE_LIMIT)
        B = self.letters
        self.nodes = B ** self.span
        s = np.arange(self.nodes, dtype=np.int64)[None, :]
        c = np.arange(B, dtype=np.int64)[:, None]
        # [letter, node] arrays
        self.forward_next = s // B + c * B ** (self.span - 1)
        self.forward_combo = s + c * B ** self.span
        self.backward_prev = c + (s % B ** (self.span - 1)) * B
        self.backward_combo = c + s * B
        self.order = _lex_order(forbidden.base, k + p)
        self.rank = np.empty(B, dtype=np.int64)
        self.rank[self.order] = np.arange(B)

    def stripe_at(self, u: int) -> Tuple[int, ...]:
        if u < self.start:
            u = self.start + (u - self.start) % self.period
        elif u > self.end:
            u = self.end - (self.end - u) % self.period
        return self.stripe[u - self.start]

    def table_into(self, u: int) -> np.ndarray:
        """Validity of the edges that append frame column u"""
        columns = tuple(self.stripe_at(u - self.span + i) for i in range(self.span + 1))
        return _band_table(self.forbidden, self.n, self.k, self.p, columns)

    def _fixpoint(self, tables: List[np.ndarray], combo: np.ndarray, following: np.ndarray, step: int) -> np.ndarray:
        period = self.period
        alive = np.ones((period, self.nodes), dtype=bool)
        rounds = 0
        while True:
            rounds += 1
            new = np.stack([
                (tables[phase][combo] & alive[(phase + step) % period][following]).any(axis=0)
                for phase in range(period)
            ])
            if np.array_equal(new, alive):
                break
            alive = new
        logger.debug("continuation fixpoint after %d rounds: %d live nodes", rounds, int(alive.sum()))
        return alive

    def _pick(self, feasible: np.ndarray) -> Optional[int]:
        ranked = feasible[self.order]
        if not ranked.any():
            return None
        return int(self.order[int(np.argmax(ranked))])

    def _tail(self, alive, tables, combo_of, next_of, node: int, step: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        period = self.period
        letters = np.arange(self.letters, dtype=np.int64)
        seen: Dict[Tuple[int, int], int] = {}
        chosen: List[int] = []
        phase = 0
        while (phase, node) not in seen:
            seen[(phase, node)] = len(chosen)
            combos = combo_of(node, letters)
            following = next_of(node, letters)
            feasible = tables[phase][combos] & alive[(phase + step) % period][following]
            letter = self._pick(feasible)
            if letter is None:
                raise PeriodizationError("internal consistency: a live continuation node has no live successor")
            chosen.append(letter)
            node = int(following[letter])
            phase = (phase + step) % period
        first = seen[(phase, node)]
        return tuple(chosen[:first]), tuple(chosen[first:])

    def solve(self):
        B = self.letters
        span = self.span
        period = self.period
        entry = self.start + span - 1

        # right tail: nodes ending at u >= end, phase (u - end) mod period
        right_tables = [self.table_into(self.end + phase + 1) for phase in range(period)]
        good_right = self._fixpoint(right_tables, self.forward_combo, self.forward_next, 1)
        # left tail: nodes ending at w <= entry, phase (w - entry) mod period
        left_tables = [self.table_into(entry - ((-phase) % period)) for phase in range(period)]
        good_left = self._fixpoint(left_tables, self.backward_combo, self.backward_prev, -1)

        reach = {self.end: good_right[0]}
        for u in range(self.end - 1, entry - 1, -1):
            reach[u] = (self.table_into(u + 1)[self.forward_combo] & reach[u + 1][self.forward_next]).any(axis=0)

        candidates = good_left[0] & reach[entry]
        if not candidates.any():
            raise PeriodizationError("not periodizable here: the stripe has no continuation")
        nodes = np.arange(self.nodes, dtype=np.int64)
        key = np.zeros(self.nodes, dtype=np.int64)
        for i in range(span):
            key = key * B + self.rank[(nodes // B ** i) % B]
        node = int(np.argmin(np.where(candidates, key, np.iinfo(np.int64).max)))
        middle = [(node // B ** i) % B for i in range(span)]

        letters = np.arange(B, dtype=np.int64)
        for u in range(entry + 1, self.end + 1):
            following = node // B + letters * B ** (span - 1)
            feasible = self.table_into(u)[node + letters * B ** span] & reach[u][following]
            letter = self._pick(feasible)
            if letter is None:
                raise PeriodizationError("internal consistency: reachable node without a reachable successor")
            middle.append(letter)
            node = int(following[letter])

        right = self._tail(
            good_right, right_tables,
            lambda s, c: s + c * B ** span,
            lambda s, c: s // B + c * B ** (span - 1),
            node, 1,
        )
        first = sum(middle[i] * B ** i for i in range(span))
        left = self._tail(
            good_left, left_tables,
            lambda s, c: c + s * B,
            lambda s, c: c + (s % B ** (span - 1)) * B,
            first, -1,
        )
        return tuple(middle), left, right


def _frame_stripe(prev: ValueFn, turns: int, boundary: int, n: int, start: int, end: int) -> List[Tuple[int, ...]]:
    back = (4 - turns) % 4
    stripe = []
    for u in range(start, end + 1):
        column = []
        for t in range(n):
            x, y = _rotate(u, boundary - n + 1 + t, back)
            column.append(prev(x, y))
        stripe.append(tuple(column))
    return stripe


def _continue(
    prev: ValueFn,
    side: str,
    boundary: int,
    start: int,
    end: int,
    period: int,
    forbidden: ForbiddenSet,
    constants: TraceConstants,
) -> HalfPlaneContinuation:
    turns = _TURNS_TO_NORTH[side]
    n, k, p = constants.n, constants.k, constants.p
    if n < forbidden.n:
        raise PeriodizationError(f"stripe height {n} is below 2r = {forbidden.n}")
    stripe = _frame_stripe(prev, turns, boundary, n, start, end)
    solver = _StripeSolver(forbidden.rotate90(turns), n, k, p, stripe, start, period)
    middle, (lt, lc), (rt, rc) = solver.solve()
    cont = HalfPlaneContinuation(side, boundary, n, k, p, forbidden.base, start, middle, lt, lc, rt, rc)
    logger.info(
        "%s continuation over frame columns [%d, %d]: tails %d+%d (west) and %d+%d (east)",
        side, start, end, len(lt), len(lc), len(rt), len(rc),
    )
    return cont


def _window_span(window: Pattern, turns: int) -> Tuple[int, int, int]:
    """(first column, last column, top row) of the window in a side's frame"""
    x0, y0, w, h = window.rotate90(turns).rect
    return x0, x0 + w - 1, y0 + h - 1


def periodize_halfplane(
    x_window: Pattern,
    side: str,
    constants: TraceConstants,
    rule: Optional[LocalRule] = None,
    boundary: Optional[int] = None,
) -> HalfPlaneContinuation:
    """
    Continue the zero extension of x_window beyond one side

    The stripe is the n frame rows ending at `boundary` (by default the
    outermost n rows of the window on that side).

    Raises:
        PeriodizationError: the stripe has no periodic continuation
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {', '.join(SIDES)}, got {side!r}")
    if not x_window.is_rectangular:
        raise ValueError("the window must be rectangular")
    rule = rule or game_of_life()
    forbidden = derive_forbidden(rule, 0)
    turns = _TURNS_TO_NORTH[side]
    first, last, top = _window_span(x_window, turns)
    boundary = top if boundary is None else boundary
    margin = forbidden.n + 1
    return _continue(
        lambda x, y: x_window.get((x, y), 0),
        side, boundary, first - margin, last + margin, 1, forbidden, constants,
    )


def _compose(base: ValueFn, stages: Sequence[HalfPlaneContinuation]) -> ValueFn:
    stages = list(stages)

    def value(x: int, y: int) -> int:
        for stage in reversed(stages):
            if stage.contains(x, y):
                return stage.value(x, y)
        return base(x, y)

    return value


def _sample(fn: ValueFn, x0: int, y0: int, width: int, height: int) -> Pattern:
    grid = np.zeros((width, height), dtype=np.uint8)
    for i in range(width):
        for j in range(height):
            grid[i, j] = fn(x0 + i, y0 + j)
    return Pattern.from_array(grid, (x0, y0))


# ---------------------------------------------------------------------------
# region decomposition


def _least_period(grid: np.ndarray, axis: int) -> int:
    size = grid.shape[axis]
    for d in range(1, size + 1):
        if size % d == 0 and np.array_equal(grid, np.roll(grid, d, axis=axis)):
            return d
    return size


def _reduce_periods(region: RegionSpec) -> RegionSpec:
    """The same region with every period cut down to its least true value"""
    if not region.periods:
        return region
    grid = region.generator.to_array()
    x0, y0 = region.generator.origin
    x_min, x_max, y_min, y_max = region.bounds
    periods = []
    for px, py in region.periods:
        axis = 0 if px else 1
        d = _least_period(grid, axis)
        anchored_high = (x_min is None) if axis == 0 else (y_min is None)
        size = grid.shape[axis]
        keep = slice(size - d, size) if anchored_high else slice(0, d)
        if axis == 0:
            grid = grid[keep, :]
            x0 = x0 + (size - d if anchored_high else 0)
            periods.append((d, 0))
        else:
            grid = grid[:, keep]
            y0 = y0 + (size - d if anchored_high else 0)
            periods.append((0, d))
    return RegionSpec(
        region.kind, region.direction, region.bounds, tuple(periods),
        Pattern.from_array(grid, (x0, y0)), region.name,
    )


def _make_region(fn: ValueFn, kind: str, direction: str, name: str, bounds: Bounds, periods) -> RegionSpec:
    x_min, x_max, y_min, y_max = bounds
    px = next((a for a, _ in periods if a), None)
    py = next((b for _, b in periods if b), None)
    if px is None:
        gx0, gw = x_min, x_max - x_min + 1
    else:
        gx0, gw = (x_max - px + 1, px) if x_min is None else (x_min, px)
    if py is None:
        gy0, gh = y_min, y_max - y_min + 1
    else:
        gy0, gh = (y_max - py + 1, py) if y_min is None else (y_min, py)
    return RegionSpec(kind, direction, bounds, tuple(periods), _sample(fn, gx0, gy0, gw, gh), name)


def _decompose(fn: ValueFn, stages: Dict[str, HalfPlaneContinuation], R: int, k: int, p: int) -> SemilinearConfig:
    west, east = stages["W"], stages["E"]
    x_w, x_e = -R - k, R + k
    # west frame column = y, east frame column = -y
    y_n = max(R + k, west.end + len(west.right_transient), -east.start + len(east.left_transient))
    y_s = min(-R - k, west.start - len(west.left_transient), -east.end - len(east.right_transient))
    north_west, south_west = west.right_period, west.left_period
    north_east, south_east = east.left_period, east.right_period

    def rows_repeat(y: int, spans) -> bool:
        return all(fn(x, y) == fn(x, y + period) for lo, hi, period in spans for x in range(lo, hi + 1))

    north = [(x_w - p, -R - 1, north_west), (-R, R, p), (R + 1, x_e + p, north_east)]
    south = [(x_w - p, -R - 1, -south_west), (-R, R, -p), (R + 1, x_e + p, -south_east)]
    while y_n > R + k and rows_repeat(y_n, north):
        y_n -= 1
    while y_s < -R - k and rows_repeat(y_s, south):
        y_s += 1

    specs = [
        ("core", "", "core", (x_w, x_e, y_s, y_n), ()),
        ("strip", "N", "north", (-R, R, y_n + 1, None), ((0, p),)),
        ("strip", "N", "north-west flank", (x_w, -R - 1, y_n + 1, None), ((0, north_west),)),
        ("strip", "N", "north-east flank", (R + 1, x_e, y_n + 1, None), ((0, north_east),)),
        ("strip", "S", "south", (-R, R, None, y_s - 1), ((0, p),)),
        ("strip", "S", "south-west flank", (x_w, -R - 1, None, y_s - 1), ((0, south_west),)),
        ("strip", "S", "south-east flank", (R + 1, x_e, None, y_s - 1), ((0, south_east),)),
        ("strip", "W", "west", (None, x_w - 1, y_s, y_n), ((p, 0),)),
        ("strip", "E", "east", (x_e + 1, None, y_s, y_n), ((p, 0),)),
        ("quadrant", "NW", "north-west", (None, x_w - 1, y_n + 1, None), ((p, 0), (0, north_west))),
        ("quadrant", "NE", "north-east", (x_e + 1, None, y_n + 1, None), ((p, 0), (0, north_east))),
        ("quadrant", "SW", "south-west", (None, x_w - 1, None, y_s - 1), ((p, 0), (0, south_west))),
        ("quadrant", "SE", "south-east", (x_e + 1, None, None, y_s - 1), ((p, 0), (0, south_east))),
    ]
    regions = []
    for kind, direction, name, bounds, periods in specs:
        x_min, x_max = bounds[0], bounds[1]
        if x_min is not None and x_max is not None and x_min > x_max:
            continue
        regions.append(_reduce_periods(_make_region(fn, kind, direction, name, bounds, periods)))
    return SemilinearConfig(regions)


def verify_image(x: SemilinearConfig, y: FiniteConfig, rule: Optional[LocalRule] = None) -> bool:
    """
    Whether the rule maps x exactly onto conf_0(y)

    Raises:
        CapacityExceeded: the verification box is too large
    """
    rule = rule or game_of_life()
    r = rule.radius
    x_lo, x_hi, y_lo, y_hi = x.finite_extent()
    x_lo -= r + x.side_period("W")
    x_hi += r + x.side_period("E")
    y_lo -= r + x.side_period("S")
    y_hi += r + x.side_period("N")
    width, height = x_hi - x_lo + 1, y_hi - y_lo + 1
    if width * height > VERIFY_CELL_LIMIT:
        raise CapacityExceeded(f"verification box of {width}x{height} cells", VERIFY_CELL_LIMIT)
    if any(not (x_lo <= c.x <= x_hi and y_lo <= c.y <= y_hi) for c in y.support()):
        return False
    grid = x.box(x_lo - r, y_lo - r, width + 2 * r, height + 2 * r).to_array()
    image = image_array(rule, grid)
    expected = y.window(x_lo, y_lo, width, height).to_array()
    ok = bool(np.array_equal(image, expected))
    logger.debug("verify_image on a %dx%d box: %s", width, height, ok)
    return ok


def replace_quadrant_all_ones(x: SemilinearConfig, quadrant: str) -> SemilinearConfig:
    """Copy of x with the given quadrant filled with 1-cells; verify again afterwards"""
    if quadrant not in QUADRANTS:
        raise ValueError(f"quadrant must be one of {', '.join(QUADRANTS)}, got {quadrant!r}")
    regions = []
    found = False
    for region in x.regions:
        if region.kind == "quadrant" and region.direction == quadrant:
            found = True
            ones = np.ones_like(region.generator.to_array())
            region = RegionSpec(
                region.kind, region.direction, region.bounds, region.periods,
                Pattern.from_array(ones, region.generator.origin), region.name,
            )
        regions.append(region)
    if not found:
        raise ValueError(f"no {quadrant} quadrant in this configuration")
    return SemilinearConfig(regions)


# ---------------------------------------------------------------------------
# the full construction


@dataclass
class PeriodizationCertificate:
    y: FiniteConfig
    window: Pattern
    stages: Dict[str, Pattern]
    constants: TraceConstants
    protected_radius: int
    verified: bool
    continuations: Dict[str, HalfPlaneContinuation] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        from .pattern_io import encode_config, format_pattern

        return {
            "y": encode_config(self.y),
            "window_origin": list(self.window.origin),
            "window": format_pattern(self.window).splitlines(),
            "protected_radius": self.protected_radius,
            "stages": {
                name: {"origin": list(p.origin), "rows": format_pattern(p).splitlines()}
                for name, p in self.stages.items()
            },
            "constants": self.constants.to_dict(),
            "continuations": {side: c.to_dict() for side, c in self.continuations.items()},
            "verified": self.verified,
        }


def _middle_range(side: str, window: Pattern, R: int, k: int, p: int, r: int) -> Tuple[int, int, int]:
    """(start, end, period) of the stripe middle in the side's frame"""
    if side in ("N", "S"):
        first, last, _ = _window_span(window, _TURNS_TO_NORTH[side])
        return first - 2 * r - 1, last + 2 * r + 1, 1
    reach = R + k + p + 2 * r
    return -reach, reach, p


def periodize(
    y: FiniteConfig,
    x_window: Pattern,
    constants: TraceConstants,
    rule: Optional[LocalRule] = None,
    display_radius: Optional[int] = None,
) -> Tuple[SemilinearConfig, PeriodizationCertificate]:
    """
    Semilinear preimage of conf_0(y) agreeing with x_window on [-R, R]^2

    Raises:
        ProvenanceError: constants not verified for the rule
        PeriodizationError: window too small, not a preimage of y, or a
            stripe without continuation
    """
    rule = rule or game_of_life()
    constants.require_verified(rule)
    r = rule.radius
    n, k, p = constants.n, constants.k, constants.p
    if not x_window.is_rectangular:
        raise ValueError("the window must be rectangular")
    N = y.radius()
    R = N + r
    wx0, wy0, w, h = x_window.rect
    if wx0 > -R or wy0 > -R or wx0 + w - 1 < R or wy0 + h - 1 < R:
        raise PeriodizationError(f"window too small: it must contain [-{R}, {R}]^2")
    if image_of_config(rule, FiniteConfig(x_window)) != y:
        raise PeriodizationError("the zero extension of the window is not a preimage of y")

    forbidden = derive_forbidden(rule, 0)

    def base(a: int, b: int) -> int:
        return x_window.get((a, b), 0)

    continuations: Dict[str, HalfPlaneContinuation] = {}
    snapshots_fns = [base]
    current = base
    for side in SIDES:
        start, end, period = _middle_range(side, x_window, R, k, p, r)
        continuations[side] = _continue(current, side, R, start, end, period, forbidden, constants)
        current = _compose(base, list(continuations.values()))
        snapshots_fns.append(current)

    semilinear = _decompose(current, continuations, R, k, p)
    x_lo, x_hi, y_lo, y_hi = semilinear.finite_extent()
    extent = max(abs(x_lo), abs(x_hi), abs(y_lo), abs(y_hi))
    if not semilinear.partition_check(extent + 1):
        raise PeriodizationError("internal consistency: regions do not partition the plane")
    radius = extent + p + r if display_radius is None else display_radius
    size = 2 * radius + 1
    stages = {name: _sample(fn, -radius, -radius, size, size) for name, fn in zip(STAGES, snapshots_fns)}
    if stages["x5"] != semilinear.window(radius):
        raise PeriodizationError("internal consistency: regions disagree with the construction")
    core = x_window.crop(-R, -R, 2 * R + 1, 2 * R + 1)
    for name, snapshot in stages.items():
        if snapshot.crop(-R, -R, 2 * R + 1, 2 * R + 1) != core:
            raise PeriodizationError(f"internal consistency: stage {name} changed the protected square")
    if semilinear.max_period() > constants.q_refined:
        raise PeriodizationError("internal consistency: a period exceeds the per-flank bound")

    verified = verify_image(semilinear, y, rule)
    if not verified:
        raise PeriodizationError("internal consistency: the semilinear configuration is not a preimage")
    logger.info(
        "periodized a radius-%d configuration: %d regions, largest period %d",
        N, len(semilinear.regions), semilinear.max_period(),
    )
    certificate = PeriodizationCertificate(y, x_window, stages, constants, R, verified, continuations)
    return semilinear, certificate


# ---------------------------------------------------------------------------
# sampling and rendering


def sample_preimage_window(
    rule: LocalRule,
    N: int,
    margin: Optional[int] = None,
    density: float = 0.5,
    seed: int = 0,
) -> Pattern:
    """
    Random finite-support preimage whose image lies in [-N, N]^2

    Cells of [-N, N]^2 are drawn independently; while some image cell
    outside [-N, N]^2 is nonzero, a random nonzero cell of its neighbourhood
    is cleared.  Returns the window [-N-margin, N+margin]^2.
    """
    r = rule.radius
    margin = 2 * r if margin is None else margin
    if N < 0 or margin < r:
        raise ValueError("need N >= 0 and a margin of at least r")
    if not rule.is_quiescent():
        raise ValueError("sampling finite preimages needs a quiescent rule")
    rng = np.random.default_rng(seed)
    side = 2 * N + 1
    full = side + 2 * margin
    grid = np.zeros((full, full), dtype=np.uint8)
    live = rng.random((side, side)) < density
    symbols = rng.integers(1, rule.base, size=(side, side)) if rule.base > 2 else np.ones((side, side), dtype=np.int64)
    grid[margin:margin + side, margin:margin + side] = np.where(live, symbols, 0)

    offset = N + margin + r  # image array index of coordinate 0
    outside = np.ones((full + 2 * r, full + 2 * r), dtype=bool)
    outside[offset - N:offset + N + 1, offset - N:offset + N + 1] = False
    cleared = 0
    while True:
        image = image_array(rule, np.pad(grid, 2 * r))
        bad = np.argwhere((image != 0) & outside)
        if bad.size == 0:
            break
        i, j = (int(v) for v in bad[0])
        # image cell (i, j) reads grid cells (i - 2r .. i, j - 2r .. j)
        cells = [
            (a, b)
            for a in range(max(i - 2 * r, 0), min(i, full - 1) + 1)
            for b in range(max(j - 2 * r, 0), min(j, full - 1) + 1)
            if grid[a, b]
        ]
        a, b = cells[int(rng.integers(len(cells)))]
        grid[a, b] = 0
        cleared += 1
    logger.debug("sampled preimage window with N=%d after clearing %d cells", N, cleared)
    return Pattern.from_array(grid, (-N - margin, -N - margin))


def render_stage(config, radius: int, cuts: Optional[Tuple[Sequence[int], Sequence[int]]] = None) -> str:
    """
    Text grid of [-radius, radius]^2, north first

    Region boundaries of a SemilinearConfig (or the given (x, y) cuts) are
    drawn as '|' before a column and as a '-' line below a row.
    """
    if isinstance(config, SemilinearConfig):
        grid = config.window(radius).to_array()
        xs = {r.bounds[0] for r in config.regions if r.bounds[0] is not None}
        ys = {r.bounds[3] for r in config.regions if r.bounds[3] is not None}
    elif isinstance(config, Pattern):
        size = 2 * radius + 1
        grid = FiniteConfig(config).window(-radius, -radius, size, size).to_array()
        xs, ys = (set(cuts[0]), set(cuts[1])) if cuts else (set(), set())
    else:
        raise TypeError(f"cannot render {type(config).__name__}")
    columns = range(-radius, radius + 1)
    bars = {x for x in xs if -radius < x <= radius}
    lines = []
    for y in range(radius, -radius - 1, -1):
        if y in ys and y < radius:
            lines.append("".join(("+" if x in bars else "") + "-" for x in columns))
        lines.append("".join(("|" if x in bars else "") + _symbol_char(int(grid[x + radius, y + radius])) for x in columns))
    return "\n".join(lines) + "\n"
