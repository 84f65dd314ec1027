"""
Cellular-automaton rules, finite patterns and their geometry.

Conventions used throughout the package:

* x grows to the east, y grows to the north; text renderings put the
  northernmost row first.
* A radius-r neighbourhood is the (2r+1)x(2r+1) square around a cell.  Its
  cells are numbered column-major: digit position (dx + r) * (2r+1) + (dy + r),
  so the westernmost column comes first and each column is read bottom to top.
  A neighbourhood index is sum(value * base ** position).
* The Game of Life is stated with the 9-cell sum that includes the center:
  a dead cell is born when the sum is 3, a live cell survives when the sum
  is 3 or 4.  This is the familiar B3/S23 rule.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .config import load_yaml
from .exceptions import AlphabetMismatch, CapacityExceeded, RuleSpecError

logger = logging.getLogger(__name__)

# Rules with more neighbourhoods than this are evaluated lazily.
MATERIALIZE_LIMIT = 2 ** 22


class Coordinate(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class Alphabet:
    """Symbols 0..size-1; 0 is the zero symbol"""

    size: int = 2

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("alphabet needs at least two symbols")

    @property
    def zero(self) -> int:
        return 0

    def __contains__(self, symbol: int) -> bool:
        return 0 <= symbol < self.size


# ---------------------------------------------------------------------------
# neighbourhood numbering


def neighborhood_offsets(radius: int) -> List[Tuple[int, int]]:
    """Offsets (dx, dy) in digit order"""
    return [(dx, dy) for dx in range(-radius, radius + 1) for dy in range(-radius, radius + 1)]


def neighborhood_index(cells: Dict[Tuple[int, int], int], radius: int, base: int) -> int:
    """Index of a neighbourhood given as offset -> symbol"""
    index = 0
    weight = 1
    for offset in neighborhood_offsets(radius):
        index += cells.get(offset, 0) * weight
        weight *= base
    return index


def neighborhood_cells(index: int, radius: int, base: int) -> Dict[Tuple[int, int], int]:
    """Inverse of neighborhood_index"""
    cells = {}
    for offset in neighborhood_offsets(radius):
        index, cells[offset] = divmod(index, base)
    return cells


def _digit_matrix(radius: int, base: int) -> np.ndarray:
    """All neighbourhoods as an array of shape (base ** cells, cells)"""
    cells = (2 * radius + 1) ** 2
    indices = np.arange(base ** cells, dtype=np.int64)
    digits = np.empty((indices.size, cells), dtype=np.int64)
    for pos in range(cells):
        indices, digits[:, pos] = np.divmod(indices, base)
    return digits


def _rotation_permutation(radius: int) -> List[int]:
    """perm[pos] = digit position that cell pos moves to under a clockwise turn"""
    d = 2 * radius + 1
    perm = []
    for dx, dy in neighborhood_offsets(radius):
        nx, ny = dy, -dx
        perm.append((nx + radius) * d + (ny + radius))
    return perm


def rotate_index(index: int, radius: int, base: int, turns: int = 1) -> int:
    """Rotate a neighbourhood index clockwise `turns` times"""
    perm = _rotation_permutation(radius)
    for _ in range(turns % 4):
        digits = [0] * len(perm)
        for pos in range(len(perm)):
            index, digits[perm[pos]] = divmod(index, base)
        index = 0
        for pos in reversed(range(len(perm))):
            index = index * base + digits[pos]
    return index


# ---------------------------------------------------------------------------
# rules


class LocalRule:
    """
    A radius-r local rule over {0..base-1}.

    The rule is either given as a full lookup table (indexed by neighbourhood
    index) or as a function of the digit tuple.  Small rules are always
    materialized so search kernels can use array lookups.
    """

    def __init__(
        self,
        alphabet_size: int,
        radius: int,
        table: Optional[Sequence[int]] = None,
        function: Optional[Callable[[Tuple[int, ...]], int]] = None,
        name: str = "",
    ):
        if radius < 1:
            raise ValueError("radius must be at least 1")
        self.alphabet = Alphabet(alphabet_size)
        self.radius = radius
        self.name = name or "anonymous"
        self._function = function
        size = self.neighborhood_count
        if table is not None:
            arr = np.asarray(table, dtype=np.uint8)
            if arr.shape != (size,):
                raise ValueError(f"rule table must have {size} entries, got {arr.shape}")
            self._table = arr
        elif function is None:
            raise ValueError("either a table or a function is required")
        elif size <= MATERIALIZE_LIMIT:
            digits = _digit_matrix(radius, alphabet_size)
            self._table = np.fromiter(
                (function(tuple(row)) for row in digits), dtype=np.uint8, count=size
            )
        else:
            self._table = None
        if self._table is not None and int(self._table.max(initial=0)) >= alphabet_size:
            raise ValueError("rule table produces symbols outside the alphabet")

    @property
    def base(self) -> int:
        return self.alphabet.size

    @property
    def diameter(self) -> int:
        return 2 * self.radius + 1

    @property
    def cell_count(self) -> int:
        return self.diameter ** 2

    @property
    def neighborhood_count(self) -> int:
        return self.base ** self.cell_count

    @property
    def materialized(self) -> bool:
        return self._table is not None

    def lookup_table(self) -> np.ndarray:
        """The materialized table; raises CapacityExceeded for lazy rules"""
        if self._table is None:
            raise CapacityExceeded(f"lookup table of rule {self.name}", MATERIALIZE_LIMIT)
        return self._table

    def output(self, index: int) -> int:
        if self._table is not None:
            return int(self._table[index])
        digits = []
        for _ in range(self.cell_count):
            index, d = divmod(index, self.base)
            digits.append(d)
        return int(self._function(tuple(digits)))

    def apply_indices(self, indices: np.ndarray) -> np.ndarray:
        if self._table is not None:
            return self._table[indices]
        flat = np.fromiter((self.output(int(i)) for i in indices.ravel()), dtype=np.uint8, count=indices.size)
        return flat.reshape(indices.shape)

    def rotate90(self, turns: int = 1) -> "LocalRule":
        """The rule conjugated by a clockwise rotation: f'(rot(Q)) = f(Q)"""
        turns %= 4
        if turns == 0:
            return self
        table = self.lookup_table()
        perm = _rotation_permutation(self.radius)
        digits = _digit_matrix(self.radius, self.base)
        for _ in range(turns):
            rotated = np.empty_like(digits)
            rotated[:, perm] = digits
            digits = rotated
        weights = self.base ** np.arange(self.cell_count, dtype=np.int64)
        new_index = digits @ weights
        new_table = np.empty_like(table)
        new_table[new_index] = table
        return LocalRule(self.base, self.radius, table=new_table, name=f"{self.name}@rot{turns}")

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.base}:{self.radius}:".encode())
        h.update(self.lookup_table().tobytes())
        return h.hexdigest()

    def is_quiescent(self) -> bool:
        return self.output(0) == 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocalRule):
            return NotImplemented
        return (
            self.base == other.base
            and self.radius == other.radius
            and np.array_equal(self.lookup_table(), other.lookup_table())
        )

    def __hash__(self) -> int:
        return hash((self.base, self.radius, self.digest()))

    def __repr__(self) -> str:
        return f"LocalRule(name={self.name!r}, alphabet={self.base}, radius={self.radius})"


def _center_and_sum(digits: Tuple[int, ...], radius: int = 1) -> Tuple[int, int]:
    center = digits[len(digits) // 2]
    return center, sum(digits)


def life_like(birth: Iterable[int], survive: Iterable[int], name: str = "") -> LocalRule:
    """
    Binary radius-1 rule in B/S notation (counts over the 8 outer neighbours)

    Args:
        birth: neighbour counts at which a dead cell becomes live
        survive: neighbour counts at which a live cell stays live
        name: optional label; defaults to the rulestring

    Returns:
        LocalRule
    """
    birth = frozenset(birth)
    survive = frozenset(survive)

    def rule(digits: Tuple[int, ...]) -> int:
        center, total = _center_and_sum(digits)
        neighbours = total - center
        if center == 0:
            return 1 if neighbours in birth else 0
        return 1 if neighbours in survive else 0

    label = name or "B{}/S{}".format("".join(map(str, sorted(birth))), "".join(map(str, sorted(survive))))
    return LocalRule(2, 1, function=rule, name=label)


def game_of_life() -> LocalRule:
    """Output 1 iff (center 0 and 9-cell sum 3) or (center 1 and 9-cell sum in {3, 4})"""

    def rule(digits: Tuple[int, ...]) -> int:
        center, total = _center_and_sum(digits)
        if center == 0:
            return 1 if total == 3 else 0
        return 1 if total in (3, 4) else 0

    return LocalRule(2, 1, function=rule, name="life")


def identity_rule(alphabet_size: int = 2, radius: int = 1) -> LocalRule:
    return LocalRule(alphabet_size, radius, function=lambda d: d[len(d) // 2], name="identity")


def constant_rule(value: int = 0, alphabet_size: int = 2, radius: int = 1) -> LocalRule:
    return LocalRule(alphabet_size, radius, function=lambda d: value, name=f"constant{value}")


def and_rule() -> LocalRule:
    """1 iff the whole 3x3 neighbourhood is 1"""
    return LocalRule(2, 1, function=lambda d: int(all(d)), name="and")


BUILTIN_RULES: Dict[str, Callable[[], LocalRule]] = {
    "life": game_of_life,
    "zero": constant_rule,
    "identity": identity_rule,
    "and": and_rule,
}


# ---------------------------------------------------------------------------
# patterns


class Pattern:
    """
    A finite assignment of symbols to cells.

    Rectangular patterns remember (x0, y0, width, height); their cells can be
    exchanged with numpy arrays indexed [x - x0, y - y0].
    """

    __slots__ = ("_cells", "_rect", "_hash")

    def __init__(self, cells: Dict[Tuple[int, int], int], rect: Optional[Tuple[int, int, int, int]] = None):
        self._cells = {Coordinate(*c): int(v) for c, v in cells.items()}
        if rect is not None:
            x0, y0, w, h = rect
            if w < 0 or h < 0 or len(self._cells) != w * h:
                raise ValueError("rectangular descriptor does not match the domain")
            for (x, y) in self._cells:
                if not (x0 <= x < x0 + w and y0 <= y < y0 + h):
                    raise ValueError("rectangular descriptor does not match the domain")
        self._rect = rect
        self._hash = None

    # construction ---------------------------------------------------------

    @classmethod
    def from_array(cls, grid: np.ndarray, origin: Tuple[int, int] = (0, 0)) -> "Pattern":
        """Rectangular pattern from an array indexed [x, y]"""
        grid = np.asarray(grid)
        x0, y0 = origin
        w, h = grid.shape
        cells = {(x0 + i, y0 + j): int(grid[i, j]) for i in range(w) for j in range(h)}
        return cls(cells, (x0, y0, w, h))

    @classmethod
    def from_rows(cls, rows: Sequence[str], origin: Tuple[int, int] = (0, 0)) -> "Pattern":
        """Rectangular pattern from text rows, northernmost first ('.'/'0' and 'O'/'1')"""
        rows = [r.strip() for r in rows if r.strip()]
        if not rows:
            return cls.from_array(np.zeros((0, 0), dtype=np.uint8), origin)
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("rows have different lengths")
        grid = np.zeros((width, len(rows)), dtype=np.uint8)
        for j, row in enumerate(reversed(rows)):
            for i, ch in enumerate(row):
                grid[i, j] = symbol_of(ch)
        return cls.from_array(grid, origin)

    @classmethod
    def rectangle(cls, values: Sequence[Sequence[int]], origin: Tuple[int, int] = (0, 0)) -> "Pattern":
        """Rectangular pattern from nested values indexed [x][y]"""
        return cls.from_array(np.asarray(values, dtype=np.uint8), origin)

    @classmethod
    def zeros(cls, width: int, height: int, origin: Tuple[int, int] = (0, 0)) -> "Pattern":
        return cls.from_array(np.zeros((width, height), dtype=np.uint8), origin)

    # access ---------------------------------------------------------------

    @property
    def domain(self) -> FrozenSet[Coordinate]:
        return frozenset(self._cells)

    @property
    def rect(self) -> Optional[Tuple[int, int, int, int]]:
        return self._rect

    @property
    def is_rectangular(self) -> bool:
        return self._rect is not None

    @property
    def width(self) -> int:
        return self._require_rect()[2]

    @property
    def height(self) -> int:
        return self._require_rect()[3]

    @property
    def origin(self) -> Tuple[int, int]:
        x0, y0, _, _ = self._require_rect()
        return x0, y0

    def _require_rect(self) -> Tuple[int, int, int, int]:
        if self._rect is None:
            raise ValueError("pattern is not rectangular")
        return self._rect

    def __getitem__(self, cell: Tuple[int, int]) -> int:
        return self._cells[Coordinate(*cell)]

    def get(self, cell: Tuple[int, int], default: int = 0) -> int:
        return self._cells.get(Coordinate(*cell), default)

    def __contains__(self, cell) -> bool:
        return Coordinate(*cell) in self._cells

    def __len__(self) -> int:
        return len(self._cells)

    def items(self) -> Iterator[Tuple[Coordinate, int]]:
        return iter(self._cells.items())

    def to_array(self) -> np.ndarray:
        x0, y0, w, h = self._require_rect()
        grid = np.zeros((w, h), dtype=np.uint8)
        for (x, y), v in self._cells.items():
            grid[x - x0, y - y0] = v
        return grid

    def support(self) -> FrozenSet[Coordinate]:
        return frozenset(c for c, v in self._cells.items() if v != 0)

    def max_symbol(self) -> int:
        return max(self._cells.values(), default=0)

    # geometry -------------------------------------------------------------

    def translate(self, dx: int, dy: int) -> "Pattern":
        rect = None
        if self._rect is not None:
            x0, y0, w, h = self._rect
            rect = (x0 + dx, y0 + dy, w, h)
        return Pattern({(x + dx, y + dy): v for (x, y), v in self._cells.items()}, rect)

    def rotate90(self, turns: int = 1) -> "Pattern":
        """Clockwise rotation about the origin: (x, y) -> (y, -x)"""
        cells = dict(self._cells)
        rect = self._rect
        for _ in range(turns % 4):
            cells = {(y, -x): v for (x, y), v in cells.items()}
            if rect is not None:
                x0, y0, w, h = rect
                rect = (y0, -(x0 + w - 1), h, w)
        return Pattern(cells, rect)

    def reflect_horizontal(self) -> "Pattern":
        """Mirror x -> -x"""
        rect = None
        if self._rect is not None:
            x0, y0, w, h = self._rect
            rect = (-(x0 + w - 1), y0, w, h)
        return Pattern({(-x, y): v for (x, y), v in self._cells.items()}, rect)

    def reflect_vertical(self) -> "Pattern":
        """Mirror y -> -y"""
        rect = None
        if self._rect is not None:
            x0, y0, w, h = self._rect
            rect = (x0, -(y0 + h - 1), w, h)
        return Pattern({(x, -y): v for (x, y), v in self._cells.items()}, rect)

    def crop(self, x0: int, y0: int, width: int, height: int) -> "Pattern":
        """Restriction to a rectangle, which must lie inside the domain"""
        cells = {}
        for i in range(width):
            for j in range(height):
                c = Coordinate(x0 + i, y0 + j)
                if c not in self._cells:
                    raise ValueError(f"cell {c} is outside the pattern domain")
                cells[c] = self._cells[c]
        return Pattern(cells, (x0, y0, width, height))

    # comparison -----------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pattern):
            return NotImplemented
        return self._cells == other._cells

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._cells.items()))
        return self._hash

    def __repr__(self) -> str:
        if self._rect is not None:
            return "Pattern(rect={}, support={})".format(self._rect, len(self.support()))
        return f"Pattern(cells={len(self._cells)})"


def symbol_of(ch: str) -> int:
    if ch in ".0b":
        return 0
    if ch in "O1o*":
        return 1
    if ch.isdigit():
        return int(ch)
    raise ValueError(f"unknown cell character {ch!r}")


@dataclass(frozen=True)
class FiniteConfig:
    """conf_0(P): the pattern's values on its domain, zero elsewhere"""

    pattern: Pattern

    def value(self, x: int, y: int) -> int:
        return self.pattern.get((x, y), 0)

    def support(self) -> FrozenSet[Coordinate]:
        return self.pattern.support()

    def radius(self) -> int:
        """Least N with support inside [-N, N]^2"""
        return max((max(abs(x), abs(y)) for x, y in self.support()), default=0)

    def bounding_box(self) -> Optional[Tuple[int, int, int, int]]:
        support = self.support()
        if not support:
            return None
        xs = [c.x for c in support]
        ys = [c.y for c in support]
        return min(xs), min(ys), max(xs) - min(xs) + 1, max(ys) - min(ys) + 1

    def window(self, x0: int, y0: int, width: int, height: int) -> Pattern:
        grid = np.zeros((width, height), dtype=np.uint8)
        for (x, y) in self.support():
            if x0 <= x < x0 + width and y0 <= y < y0 + height:
                grid[x - x0, y - y0] = self.pattern[(x, y)]
        return Pattern.from_array(grid, (x0, y0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteConfig):
            return NotImplemented
        mine = {c: self.pattern[c] for c in self.support()}
        theirs = {c: other.pattern[c] for c in other.support()}
        return mine == theirs

    def __hash__(self) -> int:
        return hash(frozenset((c, self.pattern[c]) for c in self.support()))


# ---------------------------------------------------------------------------
# forbidden sets


@dataclass(frozen=True)
class ForbiddenSet:
    """
    Neighbourhoods whose image differs from `target`.

    Members are stored as neighbourhood indices; `patterns` gives them as
    (2r+1)x(2r+1) Patterns on [-r, r]^2.  The stripe height is n = 2r.
    """

    rule: LocalRule
    indices: FrozenSet[int]
    target: int = 0
    _mask: Optional[np.ndarray] = field(default=None, compare=False, repr=False, hash=False)

    @property
    def radius(self) -> int:
        return self.rule.radius

    @property
    def base(self) -> int:
        return self.rule.base

    @property
    def n(self) -> int:
        return 2 * self.rule.radius

    @property
    def window_size(self) -> int:
        return self.rule.diameter

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, item: Union[int, Pattern]) -> bool:
        if isinstance(item, Pattern):
            item = pattern_to_index(item, self.radius, self.base)
        return item in self.indices

    @property
    def mask(self) -> np.ndarray:
        """Boolean array over all neighbourhood indices"""
        if self._mask is None:
            mask = self.rule.lookup_table() != self.target
            object.__setattr__(self, "_mask", mask)
        return self._mask

    @property
    def patterns(self) -> List[Pattern]:
        r = self.radius
        out = []
        for index in sorted(self.indices):
            cells = neighborhood_cells(index, r, self.base)
            out.append(Pattern(cells, (-r, -r, self.window_size, self.window_size)))
        return out

    def rotate90(self, turns: int = 1) -> "ForbiddenSet":
        if turns % 4 == 0:
            return self
        return derive_forbidden(self.rule.rotate90(turns), self.target)

    def is_rotation_invariant(self) -> bool:
        return self.rotate90(1).indices == self.indices

    def is_empty(self) -> bool:
        return not self.indices


def derive_forbidden(rule: LocalRule, target: int = 0) -> ForbiddenSet:
    """All neighbourhoods whose rule output differs from `target`"""
    if target not in rule.alphabet:
        raise AlphabetMismatch(f"symbol {target} is not in the rule's alphabet")
    table = rule.lookup_table()
    indices = frozenset(int(i) for i in np.nonzero(table != target)[0])
    logger.debug("rule %s: %d forbidden neighbourhoods for target %d", rule.name, len(indices), target)
    return ForbiddenSet(rule, indices, target)


def pattern_to_index(p: Pattern, radius: int, base: int) -> int:
    """Neighbourhood index of a (2r+1)-square pattern, wherever it is placed"""
    x0, y0, w, h = p.rect if p.rect is not None else (None, None, None, None)
    d = 2 * radius + 1
    if p.rect is None or w != d or h != d:
        raise ValueError("pattern is not a neighbourhood-sized square")
    cells = {(x - x0 - radius, y - y0 - radius): v for (x, y), v in p.items()}
    return neighborhood_index(cells, radius, base)


def rotate90(obj, turns: int = 1):
    """Clockwise rotation of a Pattern or ForbiddenSet"""
    if isinstance(obj, (Pattern, ForbiddenSet)):
        return obj.rotate90(turns)
    raise TypeError(f"cannot rotate {type(obj).__name__}")


# ---------------------------------------------------------------------------
# rule application


def window_indices(grid: np.ndarray, radius: int, base: int) -> np.ndarray:
    """
    Neighbourhood index of every fully contained window of an [x, y] array

    Returns:
        int64 array of shape (w - 2r, h - 2r)
    """
    grid = np.asarray(grid, dtype=np.int64)
    w, h = grid.shape
    d = 2 * radius + 1
    out_w, out_h = w - 2 * radius, h - 2 * radius
    if out_w <= 0 or out_h <= 0:
        return np.zeros((max(out_w, 0), max(out_h, 0)), dtype=np.int64)
    index = np.zeros((out_w, out_h), dtype=np.int64)
    weight = 1
    for i in range(d):
        for j in range(d):
            index += grid[i:i + out_w, j:j + out_h] * weight
            weight *= base
    return index


def image_array(rule: LocalRule, grid: np.ndarray) -> np.ndarray:
    """Image of a rectangular array on its erosion"""
    return rule.apply_indices(window_indices(grid, rule.radius, rule.base)).astype(np.uint8)


def apply_rule(rule: LocalRule, p: Pattern) -> Pattern:
    """
    Apply the local rule to a pattern

    The output domain is the erosion {v : v + [-r, r]^2 inside the domain}.
    """
    r = rule.radius
    if p.max_symbol() >= rule.base:
        raise AlphabetMismatch("pattern uses symbols outside the rule's alphabet")
    if p.is_rectangular:
        x0, y0, w, h = p.rect
        out = image_array(rule, p.to_array())
        return Pattern.from_array(out, (x0 + r, y0 + r))
    domain = p.domain
    offsets = neighborhood_offsets(r)
    cells = {}
    for (x, y) in domain:
        if all((x + dx, y + dy) in domain for dx, dy in offsets):
            nb = {(dx, dy): p[(x + dx, y + dy)] for dx, dy in offsets}
            cells[(x, y)] = rule.output(neighborhood_index(nb, r, rule.base))
    return Pattern(cells)


def pad0(p: Pattern, c: int) -> Pattern:
    """Surround a rectangular pattern with a zero border of thickness c"""
    if c < 0:
        raise ValueError("padding thickness must be non-negative")
    if not p.is_rectangular:
        raise ValueError("pad0 needs a rectangular pattern")
    x0, y0, w, h = p.rect
    grid = np.zeros((w + 2 * c, h + 2 * c), dtype=np.uint8)
    grid[c:c + w, c:c + h] = p.to_array()
    return Pattern.from_array(grid, (x0 - c, y0 - c))


def image_of_config(rule: LocalRule, config: FiniteConfig) -> FiniteConfig:
    """Image of conf_0(P); its support lies in the support's box dilated by r"""
    if not rule.is_quiescent():
        raise ValueError("the image of a finite configuration is finite only for quiescent rules")
    box = config.bounding_box()
    if box is None:
        return FiniteConfig(Pattern({}))
    x0, y0, w, h = box
    r = rule.radius
    window = config.window(x0 - 2 * r, y0 - 2 * r, w + 4 * r, h + 4 * r)
    return FiniteConfig(apply_rule(rule, window))


# ---------------------------------------------------------------------------
# rule files


def parse_rulestring(text: str) -> LocalRule:
    """B3/S23-style rulestring (either order, case-insensitive)"""
    birth, survive = None, None
    for part in text.strip().upper().split("/"):
        if part.startswith("B") and (part[1:].isdigit() or part[1:] == ""):
            birth = {int(ch) for ch in part[1:]}
        elif part.startswith("S") and (part[1:].isdigit() or part[1:] == ""):
            survive = {int(ch) for ch in part[1:]}
        else:
            raise RuleSpecError(f"malformed rulestring {text!r}")
    if birth is None or survive is None or any(v > 8 for v in birth | survive):
        raise RuleSpecError(f"malformed rulestring {text!r}")
    return life_like(birth, survive, name=text.strip().upper())


def _totalistic_rule(alphabet: int, radius: int, spec: Dict[Any, Dict[Any, Any]]) -> LocalRule:
    """{center: {sum: out}}; missing entries map to 0; sums include the center"""
    table = {}
    try:
        for center, row in spec.items():
            for total, out in row.items():
                table[(int(center), int(total))] = int(out)
    except (AttributeError, TypeError, ValueError) as e:
        raise RuleSpecError(f"malformed totalistic table: {e}") from e

    def rule(digits: Tuple[int, ...]) -> int:
        center = digits[len(digits) // 2]
        return table.get((center, sum(digits)), 0)

    return LocalRule(alphabet, radius, function=rule, name="totalistic")


def load_rule_spec(spec: Union[str, Path, Dict[str, Any]]) -> LocalRule:
    """
    Build a rule from a built-in name, a rulestring, a YAML file or a mapping

    Mappings take one of the forms
    {rulestring: "B3/S23"}, {builtin: life},
    {alphabet, radius, table: "<digits>"} and
    {alphabet, radius, totalistic: {center: {sum: out}}}.

    Raises:
        RuleSpecError: on anything that does not describe a rule
    """
    if isinstance(spec, (str, Path)):
        text = str(spec)
        if text in BUILTIN_RULES:
            return BUILTIN_RULES[text]()
        if Path(text).is_file():
            data = load_yaml(text)
            if isinstance(data, str):
                return load_rule_spec(data)
            return load_rule_spec(data or {})
        if text.upper().startswith(("B", "S")) and "/" in text:
            return parse_rulestring(text)
        raise RuleSpecError(f"unknown rule {text!r}")
    if not isinstance(spec, dict):
        raise RuleSpecError("rule specification must be a mapping")

    if "builtin" in spec:
        return load_rule_spec(str(spec["builtin"]))
    if "rulestring" in spec:
        return parse_rulestring(str(spec["rulestring"]))
    try:
        alphabet = int(spec.get("alphabet", 2))
        radius = int(spec.get("radius", 1))
    except (TypeError, ValueError) as e:
        raise RuleSpecError(f"bad alphabet or radius: {e}") from e
    name = str(spec.get("name", ""))
    if "table" in spec:
        digits = str(spec["table"]).replace(" ", "").replace("\n", "")
        try:
            rule = LocalRule(alphabet, radius, table=[int(ch) for ch in digits], name=name)
        except ValueError as e:
            raise RuleSpecError(str(e)) from e
        return rule
    if "totalistic" in spec:
        try:
            rule = _totalistic_rule(alphabet, radius, spec["totalistic"])
        except ValueError as e:
            raise RuleSpecError(str(e)) from e
        rule.name = name or rule.name
        return rule
    raise RuleSpecError("rule specification needs one of builtin, rulestring, table, totalistic")
