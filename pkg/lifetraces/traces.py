"""
Stripe automata for one-sided traces of the preimage SFT of the zero configuration.

Words are read west to east; a letter is a height-n column packed
little-endian (bottom cell = least significant digit).  For a forbidden set F
of radius r and a stripe height n >= 2r:

* L_{n,l}  height-n words that are the bottom of an F-free rectangle of
           height n+l and the same width;
* S_{n,l}  the largest subshift inside L_{n,l}, i.e. the height-n stripes of
           F-free bi-infinite strips of height n+l;
* P_{n,k,p} stripes of F-free upper half-planes that are vertically
           p-periodic from row n+k on.

L_{n,l} is built one row at a time.  If a rectangle of height n+l+1 has
bottom row u, its rows 1..n+l form a rectangle of height n+l; the only
windows that touch row 0 have their bottom on row 0 and lie inside rows
0..2r.  So L_{n,l+1} is the bottom-n projection of height-(n+1) words whose
row-0 windows avoid F and whose top n rows lie in L_{n,l}.  Each layer is
determinized and minimised before the next one is added.

P_{n,k,p} starts from the F-free vertical tori of height p, unrolled to the
n rows n+k..2n+k-1, and then adds the n+k rows below it the same way.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import config
from .automata import (
    DFA,
    NFA,
    IndexedAlphabet,
    Word,
    determinize,
    dfa_to_nfa,
    equivalent,
    ext_language,
    fingerprint,
    includes,
    minimize,
    subshift_dfa,
    universal_dfa,
)
from .ca_core import ForbiddenSet, LocalRule, Pattern, derive_forbidden, game_of_life
from .exceptions import (
    CapacityExceeded,
    LifeTracesError,
    PeriodizationError,
    ProvenanceError,
    StabilityNotEstablished,
)

logger = logging.getLogger(__name__)

# (hist, column) tables larger than this are refused
HISTORY_TABLE_LIMIT = 1 << 20

ROTATIONS = (0, 1, 2, 3)


@dataclass(frozen=True)
class StripeColumn:
    """A column of `height` cells, bottom first"""

    cells: Tuple[int, ...]
    base: int = 2

    @property
    def height(self) -> int:
        return len(self.cells)

    @property
    def index(self) -> int:
        letter = 0
        for v in reversed(self.cells):
            letter = letter * self.base + v
        return letter

    @classmethod
    def from_index(cls, letter: int, height: int, base: int = 2) -> "StripeColumn":
        cells = []
        for _ in range(height):
            letter, d = divmod(letter, base)
            cells.append(d)
        return cls(tuple(cells), base)


def word_from_rows(rows: Sequence[str], base: int = 2) -> Word:
    """Letters of a stripe given as text rows, northernmost first"""
    rows = [r.strip() for r in rows]
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("rows have different lengths")
    bottom_up = list(reversed(rows))
    return [
        StripeColumn(tuple(int(row[i]) for row in bottom_up), base).index for i in range(width)
    ]


def word_to_rows(word: Sequence[int], height: int, base: int = 2) -> List[str]:
    """Inverse of word_from_rows"""
    cols = [StripeColumn.from_index(a, height, base).cells for a in word]
    return ["".join(str(c[j]) for c in cols) for j in reversed(range(height))]


# ---------------------------------------------------------------------------
# column histories


class _ColumnHistory:
    """
    Deterministic memory of the last 2r columns of height `column_height`.

    States 0..H-1 are full histories v = sum(col_i * base**(h*i)), oldest
    column first; the remaining states are the warm-up prefixes read before
    2r columns are known.  valid[s, c] says whether appending column c
    completes only F-free windows; rows(b) lists, for every window bottom
    row b, the column rows the window reads (wrapping rows for tori).
    """

    def __init__(self, forbidden: ForbiddenSet, column_height: int, window_rows: List[List[int]]):
        base = forbidden.base
        r = forbidden.radius
        d = 2 * r + 1
        h = column_height
        span = 2 * r
        full = base ** (h * span)
        letters = base ** h
        combos = full * letters
        if combos > HISTORY_TABLE_LIMIT:
            raise CapacityExceeded(f"column history of height {h}", HISTORY_TABLE_LIMIT)

        values = np.arange(combos, dtype=np.int64)
        digits = np.empty((combos, d * h), dtype=np.int64)
        for pos in range(d * h):
            values, digits[:, pos] = np.divmod(values, base)
        mask = forbidden.mask
        bad = np.zeros(combos, dtype=bool)
        for rows in window_rows:
            index = np.zeros(combos, dtype=np.int64)
            weight = 1
            for i in range(d):
                for j in range(d):
                    index += digits[:, i * h + rows[j]] * weight
                    weight *= base
            bad |= mask[index]
        # combined value = v + c * full
        full_valid = ~bad.reshape(letters, full).T
        v = np.arange(full, dtype=np.int64)[:, None]
        c = np.arange(letters, dtype=np.int64)[None, :]
        full_next = v // (base ** h) + c * base ** (h * (span - 1))

        offsets = []
        total = full
        for length in range(span):
            offsets.append(total)
            total += base ** (h * length)
        nxt = np.zeros((total, letters), dtype=np.int64)
        valid = np.ones((total, letters), dtype=bool)
        nxt[:full] = full_next
        valid[:full] = full_valid
        for length in range(span):
            for w in range(base ** (h * length)):
                grown = w + np.arange(letters, dtype=np.int64) * base ** (h * length)
                if length + 1 == span:
                    nxt[offsets[length] + w] = grown
                else:
                    nxt[offsets[length] + w] = offsets[length + 1] + grown
        self.next = nxt
        self.valid = valid
        self.start = offsets[0]
        self.num_states = total
        self.letters = letters


@lru_cache(maxsize=None)
def _layer_history(forbidden: ForbiddenSet) -> _ColumnHistory:
    d = forbidden.window_size
    return _ColumnHistory(forbidden, d, [list(range(d))])


@lru_cache(maxsize=None)
def _strip_history(forbidden: ForbiddenSet, height: int) -> _ColumnHistory:
    d = forbidden.window_size
    return _ColumnHistory(
        forbidden, height, [[b + j for j in range(d)] for b in range(height - d + 1)]
    )


@lru_cache(maxsize=None)
def _torus_history(forbidden: ForbiddenSet, period: int) -> _ColumnHistory:
    d = forbidden.window_size
    return _ColumnHistory(
        forbidden, period, [[(b + j) % period for j in range(d)] for b in range(period)]
    )


def _history_dfa(history: _ColumnHistory, alphabet: IndexedAlphabet) -> DFA:
    """The deterministic history automaton with an explicit sink"""
    sink = history.num_states
    delta = np.where(history.valid, history.next, sink)
    delta = np.vstack([delta, np.full((1, history.letters), sink, dtype=np.int64)])
    final = np.ones(sink + 1, dtype=bool)
    final[sink] = False
    dfa = DFA(alphabet, delta, history.start, final)
    return minimize(dfa)


# ---------------------------------------------------------------------------
# layered construction


def _check_height(forbidden: ForbiddenSet, n: int):
    if n < forbidden.n:
        raise ValueError(f"stripe height {n} is below 2r = {forbidden.n}")


def add_layer(forbidden: ForbiddenSet, n: int, upper: DFA, max_states: Optional[int] = None) -> DFA:
    """
    One row below a stripe language

    Args:
        forbidden: the forbidden windows
        n: stripe height of `upper`
        upper: minimal DFA of the language of the rows above

    Returns:
        minimal DFA of the bottom-n words of height-(n+1) rectangles whose
        row-0 windows avoid F and whose top n rows are accepted by `upper`
    """
    cap = config.MAX_STATES if max_states is None else max_states
    base = forbidden.base
    d = forbidden.window_size
    history = _layer_history(forbidden)
    out_alphabet = IndexedAlphabet.columns(n, base)
    q_count = upper.num_states
    live = upper.live_states()

    moves: List[List[Tuple[int, int]]] = []
    for a in range(base ** n):
        per_letter = []
        for t in range(base):
            column = a + t * base ** n
            per_letter.append((column % base ** d, a // base + t * base ** (n - 1)))
        moves.append(per_letter)

    start = np.array([history.start * q_count + upper.initial], dtype=np.int64)
    if not live[upper.initial]:
        start = start[:0]
    index: Dict[bytes, int] = {start.tobytes(): 0}
    subsets = [start]
    rows: List[List[int]] = []
    i = 0
    while i < len(subsets):
        flat = subsets[i]
        h = flat // q_count
        q = flat % q_count
        row = []
        for per_letter in moves:
            parts = []
            for column, upper_letter in per_letter:
                ok = history.valid[h, column]
                if not ok.any():
                    continue
                q_next = upper.delta[q[ok], upper_letter]
                keep = live[q_next]
                if keep.any():
                    parts.append(history.next[h[ok][keep], column] * q_count + q_next[keep])
            nxt = np.unique(np.concatenate(parts)) if parts else flat[:0]
            key = nxt.tobytes()
            j = index.get(key)
            if j is None:
                j = len(subsets)
                if j >= cap:
                    raise CapacityExceeded("layer construction", cap)
                index[key] = j
                subsets.append(nxt)
            row.append(j)
        rows.append(row)
        i += 1
        if i % 20000 == 0:
            logger.debug("add_layer: %d subsets expanded, %d discovered", i, len(subsets))
    final = np.array([bool(upper.final[s % q_count].any()) if s.size else False for s in subsets])
    dfa = DFA(out_alphabet, np.array(rows, dtype=np.int64), 0, final)
    result = minimize(dfa)
    logger.debug("add_layer: %d subsets, %d states after minimisation", len(subsets), result.num_states)
    return result


def _direct_L_nfa(forbidden: ForbiddenSet, n: int, ell: int) -> NFA:
    """Letters are height-(n+l) columns guessed nondeterministically; the output is the bottom n"""
    base = forbidden.base
    height = n + ell
    history = _strip_history(forbidden, height)
    out_alphabet = IndexedAlphabet.columns(n, base)
    transitions = []
    for s in range(history.num_states):
        for column in np.nonzero(history.valid[s])[0]:
            transitions.append((s, int(column) % base ** n, int(history.next[s, column])))
    return NFA(out_alphabet, history.num_states, transitions, [history.start], range(history.num_states))


@lru_cache(maxsize=None)
def _free_strip_dfa(forbidden: ForbiddenSet, n: int) -> DFA:
    """Minimal DFA of L_{n,0}: F-free height-n rectangles"""
    alphabet = IndexedAlphabet.columns(n, forbidden.base)
    if n < forbidden.window_size:
        return universal_dfa(alphabet)
    return _history_dfa(_strip_history(forbidden, n), alphabet)


@lru_cache(maxsize=None)
def _layered_L(forbidden: ForbiddenSet, n: int, ell: int, max_states: int) -> DFA:
    if ell == 0:
        return _free_strip_dfa(forbidden, n)
    upper = _layered_L(forbidden, n, ell - 1, max_states)
    dfa = add_layer(forbidden, n, upper, max_states)
    logger.info("L_{%d,%d}: %d states", n, ell, dfa.num_states)
    return dfa


def build_L_dfa(
    forbidden: ForbiddenSet,
    n: int,
    ell: int,
    construction: str = "layered",
    max_states: Optional[int] = None,
) -> DFA:
    """Minimal DFA of L_{n,l}(F)"""
    _check_height(forbidden, n)
    if ell < 0:
        raise ValueError("extension height must be non-negative")
    cap = config.MAX_STATES if max_states is None else max_states
    if construction == "layered":
        return _layered_L(forbidden, n, ell, cap)
    if construction == "direct":
        return minimize(determinize(_direct_L_nfa(forbidden, n, ell), cap))
    raise ValueError(f"unknown construction {construction!r}")


def build_L_automaton(
    forbidden: ForbiddenSet,
    n: int,
    ell: int,
    construction: str = "layered",
    max_states: Optional[int] = None,
) -> NFA:
    """L_{n,l}(F) as an automaton whose states are all initial and final"""
    return dfa_to_nfa(build_L_dfa(forbidden, n, ell, construction, max_states))


@lru_cache(maxsize=None)
def _subshift(forbidden: ForbiddenSet, n: int, ell: int, max_states: int) -> DFA:
    dfa = subshift_dfa(dfa_to_nfa(_layered_L(forbidden, n, ell, max_states)), max_states)
    logger.info("S_{%d,%d}: %d states", n, ell, dfa.num_states)
    return dfa


def build_S_subshift(
    forbidden: ForbiddenSet,
    n: int,
    ell: int,
    construction: str = "layered",
    max_states: Optional[int] = None,
) -> DFA:
    """Canonical minimal DFA of the language of S_{n,l}(F)"""
    _check_height(forbidden, n)
    cap = config.MAX_STATES if max_states is None else max_states
    if construction == "layered":
        return _subshift(forbidden, n, ell, cap)
    return subshift_dfa(build_L_automaton(forbidden, n, ell, construction, cap), cap)


@lru_cache(maxsize=None)
def _periodic_base(forbidden: ForbiddenSet, n: int, p: int, max_states: int) -> DFA:
    """F-free vertical tori of height p, read on the rows 0..n-1 of their unrolling"""
    base = forbidden.base
    torus = _history_dfa(_torus_history(forbidden, p), IndexedAlphabet.columns(p, base))
    letter_map = []
    for letter in range(base ** p):
        cells = StripeColumn.from_index(letter, p, base).cells
        letter_map.append(StripeColumn(tuple(cells[i % p] for i in range(n)), base).index)
    nfa = NFA(
        IndexedAlphabet.columns(n, base),
        torus.num_states,
        [
            (s, letter_map[a], int(torus.delta[s, a]))
            for s in range(torus.num_states)
            for a in range(base ** p)
        ],
        [torus.initial],
        [int(s) for s in np.nonzero(torus.final)[0]],
    )
    return minimize(determinize(nfa, max_states))


@lru_cache(maxsize=None)
def _periodic_L(forbidden: ForbiddenSet, n: int, k: int, p: int, max_states: int) -> DFA:
    dfa = _periodic_base(forbidden, n, p, max_states)
    for _ in range(n + k):
        dfa = add_layer(forbidden, n, dfa, max_states)
    return dfa


def build_P_automaton(
    forbidden: ForbiddenSet, n: int, k: int, p: int, max_states: Optional[int] = None
) -> DFA:
    """Canonical minimal DFA of the language of P_{n,k,p}(F)"""
    _check_height(forbidden, n)
    if p < 1 or k < 0:
        raise ValueError("need p >= 1 and k >= 0")
    cap = config.MAX_STATES if max_states is None else max_states
    dfa = subshift_dfa(dfa_to_nfa(_periodic_L(forbidden, n, k, p, cap)), cap)
    logger.info("P_{%d,%d,%d}: %d states", n, k, p, dfa.num_states)
    return dfa


def periodic_band_dfa(
    forbidden: ForbiddenSet, n: int, k: int, p: int, max_states: Optional[int] = None
) -> DFA:
    """
    P_{n,k,p}(F) through one explicit band

    Letters are columns of the rows 0..n+k+p-1; windows are checked inside
    the band and across the junction, with rows above n+k+p-1 read as
    rows n+k+((b-n-k) mod p).  Only usable for small n+k+p.
    """
    _check_height(forbidden, n)
    cap = config.MAX_STATES if max_states is None else max_states
    d = forbidden.window_size
    height = n + k + p

    def fold(row: int) -> int:
        return row if row < height else n + k + (row - n - k) % p

    window_rows = [[fold(b + j) for j in range(d)] for b in range(height)]
    history = _ColumnHistory(forbidden, height, window_rows)
    base = forbidden.base
    transitions = []
    for s in range(history.num_states):
        for column in np.nonzero(history.valid[s])[0]:
            transitions.append((s, int(column) % base ** n, int(history.next[s, column])))
    nfa = NFA(
        IndexedAlphabet.columns(n, base), history.num_states, transitions, [history.start],
        range(history.num_states),
    )
    return subshift_dfa(dfa_to_nfa(minimize(determinize(nfa, cap))), cap)


# ---------------------------------------------------------------------------
# stability, periodizability, extension constants


def _rotations(forbidden: ForbiddenSet) -> Dict[int, ForbiddenSet]:
    if forbidden.is_rotation_invariant():
        return {0: forbidden}
    return {i: forbidden.rotate90(i) for i in ROTATIONS}


@dataclass
class DirectionEntry:
    """Trace data for one rotation of F"""

    rotation: int
    stable_at: Optional[int] = None
    L: Optional[DFA] = None
    S: Optional[DFA] = None
    level_witnesses: Dict[int, Word] = field(default_factory=dict)
    periodizable: Optional[bool] = None
    periodizability_witness: Optional[Word] = None

    def to_dict(self, n: int, base: int) -> Dict:
        out = {
            "rotation": self.rotation,
            "stable_at": self.stable_at,
            "level_witnesses": {
                str(level): word_to_rows(w, n, base) for level, w in sorted(self.level_witnesses.items())
            },
            "periodizable": self.periodizable,
            "periodizability_witness": (
                word_to_rows(self.periodizability_witness, n, base)
                if self.periodizability_witness is not None
                else None
            ),
        }
        if self.L is not None:
            out["L_fingerprint"] = fingerprint(self.L)
        if self.S is not None:
            out["S_fingerprint"] = fingerprint(self.S)
        return out


@dataclass
class DirectionalTraceReport:
    """
    Stability data for the four rotations of F

    For a rotation-invariant F only rotation 0 is computed and it stands for
    all four.
    """

    n: int
    ell_max: int
    base: int
    rotation_invariant: bool
    directions: Dict[int, DirectionEntry]
    stable_at: Optional[int] = None

    def entry(self, rotation: int) -> DirectionEntry:
        if self.rotation_invariant:
            return self.directions[0]
        return self.directions[rotation]

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "ell_max": self.ell_max,
            "stable_at": self.stable_at,
            "rotation_invariant": self.rotation_invariant,
            "directions": [e.to_dict(self.n, self.base) for _, e in sorted(self.directions.items())],
        }


def check_stable(
    forbidden: ForbiddenSet, n: int, ell_max: Optional[int] = None, max_states: Optional[int] = None
) -> Tuple[Optional[int], DirectionalTraceReport]:
    """
    Smallest l <= ell_max with S_{n,l} = S_{n,l+1} in every rotation

    Returns:
        (stable_at or None, report); on success each entry holds T_n = S_{n,l}
    """
    ell_max = config.ELL_MAX if ell_max is None else ell_max
    if ell_max < 1:
        raise ValueError("ell_max must be at least 1")
    _check_height(forbidden, n)
    rotations = _rotations(forbidden)
    report = DirectionalTraceReport(
        n, ell_max, forbidden.base, len(rotations) == 1, {i: DirectionEntry(i) for i in rotations}
    )
    for i, rotated in rotations.items():
        entry = report.directions[i]
        current = build_S_subshift(rotated, n, 0, max_states=max_states)
        for ell in range(ell_max + 1):
            following = build_S_subshift(rotated, n, ell + 1, max_states=max_states)
            same, witness = equivalent(current, following, max_states)
            if same:
                entry.stable_at = ell
                entry.S = current
                entry.L = build_L_dfa(rotated, n, ell, max_states=max_states)
                break
            entry.level_witnesses[ell] = witness
            logger.info("rotation %d: S_{%d,%d} != S_{%d,%d} (witness length %d)", i, n, ell, n, ell + 1, len(witness))
            current = following
    levels = [e.stable_at for e in report.directions.values()]
    report.stable_at = None if any(v is None for v in levels) else max(levels)
    return report.stable_at, report


@dataclass
class PeriodizabilityResult:
    holds: bool
    n: int
    ell: int
    k: int
    p: int
    per_rotation: Dict[int, Tuple[bool, Optional[Word]]]

    def to_dict(self) -> Dict:
        return {
            "holds": self.holds,
            "n": self.n,
            "ell": self.ell,
            "k": self.k,
            "p": self.p,
            "rotations": [
                {
                    "rotation": i,
                    "holds": ok,
                    "witness": None if w is None else word_to_rows(w, self.n),
                }
                for i, (ok, w) in sorted(self.per_rotation.items())
            ],
        }


def _require_stable(forbidden: ForbiddenSet, n: int, ell: int, report, max_states) -> None:
    if report is not None:
        if report.stable_at is None or report.stable_at > ell:
            raise StabilityNotEstablished(f"traces are not known to be stable at level {ell}")
        return
    for rotated in _rotations(forbidden).values():
        same, _ = equivalent(
            build_S_subshift(rotated, n, ell, max_states=max_states),
            build_S_subshift(rotated, n, ell + 1, max_states=max_states),
            max_states,
        )
        if not same:
            raise StabilityNotEstablished(f"S_{{{n},{ell}}} differs from S_{{{n},{ell + 1}}}")


def check_periodizable(
    forbidden: ForbiddenSet,
    n: int,
    ell: int,
    k: int,
    p: int,
    report: Optional[DirectionalTraceReport] = None,
    max_states: Optional[int] = None,
) -> PeriodizabilityResult:
    """
    Whether L(S_{n,l}) is included in L(P_{n,k,p}) in every rotation

    Raises:
        StabilityNotEstablished: S_{n,l} is not stable (or the given report
            says so)
    """
    _require_stable(forbidden, n, ell, report, max_states)
    per_rotation = {}
    for i, rotated in _rotations(forbidden).items():
        s = build_S_subshift(rotated, n, ell, max_states=max_states)
        periodic = build_P_automaton(rotated, n, k, p, max_states)
        ok, witness = includes(periodic, s, max_states)
        per_rotation[i] = (ok, witness)
        if report is not None:
            entry = report.entry(i)
            entry.periodizable = ok
            entry.periodizability_witness = witness
    holds = all(ok for ok, _ in per_rotation.values())
    logger.info("periodizable with (l, k, p) = (%d, %d, %d): %s", ell, k, p, holds)
    return PeriodizabilityResult(holds, n, ell, k, p, per_rotation)


def sweep_periodizable(
    forbidden: ForbiddenSet,
    n: int,
    ell: int,
    k_max: Optional[int] = None,
    p_max: Optional[int] = None,
    max_states: Optional[int] = None,
) -> Optional[Tuple[int, int]]:
    """Least (k, p), ordered by p first, for which the traces are periodizable"""
    k_max = config.SWEEP_K_MAX if k_max is None else k_max
    p_max = config.SWEEP_P_MAX if p_max is None else p_max
    _require_stable(forbidden, n, ell, None, max_states)
    for p in range(1, p_max + 1):
        for k in range(k_max + 1):
            if check_periodizable(forbidden, n, ell, k, p, max_states=max_states).holds:
                return k, p
    return None


def min_extension_constant(
    forbidden: ForbiddenSet,
    n: int,
    ell: int,
    c_max: Optional[int] = None,
    max_states: Optional[int] = None,
) -> int:
    """
    Smallest C with ext_language(L_{n,l}, C) inside L(S_{n,l}), over all rotations

    The default search bound is the number of live states of the L automaton
    plus one, which always suffices.
    """
    result = 0
    for rotated in _rotations(forbidden).values():
        lang = build_L_dfa(rotated, n, ell, max_states=max_states)
        sub = build_S_subshift(rotated, n, ell, max_states=max_states)
        bound = int(lang.live_states().sum()) + 1 if c_max is None else c_max
        for c in range(bound + 1):
            ok, _ = includes(sub, ext_language(lang, c), max_states)
            if ok:
                result = max(result, c)
                break
        else:
            raise LifeTracesError(f"no extension constant up to {bound}")
    return result


# ---------------------------------------------------------------------------
# constants


@dataclass
class TraceConstants:
    """
    Constants consumed by the orphan reduction and the periodization

    c = C + l is the padding; q = p |A|^(2n(k+p)) is the coarse vertical
    period bound and q_refined = p |A|^(n(k+p)) the per-flank one.
    """

    n: int
    ell: int
    k: int
    p: int
    C: int
    alphabet_size: int = 2
    radius: int = 1
    rule_name: str = ""
    rule_digest: str = ""
    verified: bool = False

    def __post_init__(self):
        if self.p < 1 or min(self.n, self.ell, self.k, self.C) < 0:
            raise ValueError("trace constants must be non-negative with p >= 1")

    @property
    def c(self) -> int:
        return self.C + self.ell

    @property
    def q(self) -> int:
        return self.p * self.alphabet_size ** (2 * self.n * (self.k + self.p))

    @property
    def q_refined(self) -> int:
        return self.p * self.alphabet_size ** (self.n * (self.k + self.p))

    def require_verified(self, rule: LocalRule) -> None:
        """Raise ProvenanceError unless these constants were verified for `rule`"""
        if not self.verified:
            raise ProvenanceError("trace constants lack verified provenance")
        if self.rule_digest != rule.digest():
            raise ProvenanceError(f"trace constants were verified for a different rule ({self.rule_name})")

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "ell": self.ell,
            "k": self.k,
            "p": self.p,
            "C": self.C,
            "c": self.c,
            "q": self.q,
            "q_refined": self.q_refined,
            "alphabet_size": self.alphabet_size,
            "radius": self.radius,
            "provenance": {
                "rule": self.rule_name,
                "rule_digest": self.rule_digest,
                "verified": self.verified,
            },
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "TraceConstants":
        provenance = data.get("provenance") or {}
        return cls(
            n=int(data["n"]),
            ell=int(data["ell"]),
            k=int(data["k"]),
            p=int(data["p"]),
            C=int(data["C"]),
            alphabet_size=int(data.get("alphabet_size", 2)),
            radius=int(data.get("radius", 1)),
            rule_name=str(provenance.get("rule", "")),
            rule_digest=str(provenance.get("rule_digest", "")),
            verified=bool(provenance.get("verified", False)),
        )


def load_constants(path) -> TraceConstants:
    data = config.load_yaml(path)
    if not isinstance(data, dict):
        raise ProvenanceError(f"{path}: not a constants mapping")
    return TraceConstants.from_dict(data)


def game_of_life_constants() -> TraceConstants:
    """The bundled, previously verified constants for the Game of Life"""
    return load_constants(config.FIXTURES_DIR / "game_of_life_constants.yaml")


def derive_trace_constants(
    rule: LocalRule,
    ell_max: Optional[int] = None,
    k_max: Optional[int] = None,
    p_max: Optional[int] = None,
    max_states: Optional[int] = None,
) -> TraceConstants:
    """
    Run stability, the (k, p) sweep and the extension constant for a rule

    Raises:
        StabilityNotEstablished: no stable level up to ell_max
        PeriodizationError: no (k, p) within the sweep limits
    """
    forbidden = derive_forbidden(rule, 0)
    n = forbidden.n
    stable_at, report = check_stable(forbidden, n, ell_max, max_states)
    if stable_at is None:
        raise StabilityNotEstablished(f"rule {rule.name}: traces not stable up to level {report.ell_max}")
    found = sweep_periodizable(forbidden, n, stable_at, k_max, p_max, max_states)
    if found is None:
        raise PeriodizationError(f"rule {rule.name}: no periodizing (k, p) within the sweep limits")
    k, p = found
    c_ext = min_extension_constant(forbidden, n, stable_at, max_states=max_states)
    constants = TraceConstants(
        n, stable_at, k, p, c_ext, rule.base, rule.radius, rule.name, rule.digest(), verified=True
    )
    logger.info("rule %s: constants %s", rule.name, constants.to_dict())
    return constants


# ---------------------------------------------------------------------------
# oracles and diagnostics


def brute_force_L_membership(forbidden: ForbiddenSet, word: Sequence[int], ell: int, n: Optional[int] = None) -> bool:
    """Whether some height-(n+l) completion of the word avoids F (exhaustive)"""
    base = forbidden.base
    r = forbidden.radius
    d = forbidden.window_size
    n = forbidden.n if n is None else n
    height = n + ell
    mask = forbidden.mask
    bottoms = [StripeColumn.from_index(a, n, base).cells for a in word]
    extras = [StripeColumn.from_index(e, ell, base).cells for e in range(base ** ell)] if ell else [()]

    def window_ok(columns: List[Tuple[int, ...]]) -> bool:
        for b in range(height - d + 1):
            index = 0
            weight = 1
            for col in columns:
                for j in range(d):
                    index += col[b + j] * weight
                    weight *= base
            if mask[index]:
                return False
        return True

    def extend(chosen: List[Tuple[int, ...]]) -> bool:
        x = len(chosen)
        if x == len(bottoms):
            return True
        for extra in extras:
            column = bottoms[x] + extra
            chosen.append(column)
            if (len(chosen) < d or window_ok(chosen[-d:])) and extend(chosen):
                return True
            chosen.pop()
        return False

    if height < d:
        return True
    return extend([])


def separating_word() -> Word:
    """The 30-column word separating S_{2,3} from S_{2,4} for the Game of Life"""
    with open(config.FIXTURES_DIR / "separating_word.txt") as f:
        rows = [ln.strip() for ln in f if ln.strip() and not ln.startswith("#")]
    return word_from_rows(rows)


def forced_window() -> Pattern:
    """The 7x2 window below which only 0001000 can follow"""
    with open(config.FIXTURES_DIR / "forced_window.txt") as f:
        rows = [ln.strip() for ln in f if ln.strip() and not ln.startswith("#")]
    return Pattern.from_rows(rows)


_PN_TOP = "010001010101000100"
_PN_BOTTOM = "010101000100010001"


def make_Pn_pattern(n: int) -> Pattern:
    """Height-2 pattern P_n whose columns force a period-3 continuation"""
    if n < 0:
        raise ValueError("n must be non-negative")
    top = _PN_TOP + "00" * n + "0"
    bottom = _PN_BOTTOM + "01" * n + "0"
    return Pattern.from_rows([top, bottom])


@dataclass
class ForcedRowsReport:
    width: int
    steps: int
    outside: str
    rows: List[List[Tuple[int, ...]]]

    @property
    def unique(self) -> List[bool]:
        return [len(r) == 1 for r in self.rows]

    @property
    def forced_columns(self) -> List[Dict[int, int]]:
        out = []
        for candidates in self.rows:
            fixed = {}
            if candidates:
                for x in range(self.width):
                    values = {row[x] for row in candidates}
                    if len(values) == 1:
                        fixed[x] = values.pop()
            out.append(fixed)
        return out

    def to_dict(self) -> Dict:
        return {
            "width": self.width,
            "steps": self.steps,
            "outside": self.outside,
            "rows": [["".join(map(str, row)) for row in step] for step in self.rows],
            "unique": self.unique,
            "forced_columns": [
                {str(x): v for x, v in sorted(fixed.items())} for fixed in self.forced_columns
            ],
        }


def _rows_below(
    state: Tuple[Tuple[int, ...], ...], forbidden: ForbiddenSet, width: int, outside: str
) -> Iterator[Tuple[int, ...]]:
    """Rows that can be placed below `state` (its rows listed bottom first)"""
    base = forbidden.base
    r = forbidden.radius
    d = forbidden.window_size
    mask = forbidden.mask
    context = [sum(state[j][x] * base ** (j + 1) for j in range(2 * r)) for x in range(width)]
    zero = outside == "zero"

    def column_value(row: List[int], x: int) -> int:
        if 0 <= x < width:
            return row[x] + context[x]
        return 0

    def window_ok(row: List[int], last: int) -> bool:
        index = 0
        for i in range(d):
            index += column_value(row, last - 2 * r + i) * base ** (d * i)
        return not mask[index]

    row: List[int] = []

    def extend() -> Iterator[Tuple[int, ...]]:
        x = len(row)
        if x == width:
            if zero and not all(window_ok(row, last) for last in range(width, width + 2 * r)):
                return
            yield tuple(row)
            return
        for v in range(base):
            row.append(v)
            if (x >= 2 * r or zero) and not window_ok(row, x):
                row.pop()
                continue
            yield from extend()
            row.pop()

    yield from extend()


def forced_rows(
    window: Pattern,
    steps: int,
    forbidden: Optional[ForbiddenSet] = None,
    outside: str = "free",
) -> ForcedRowsReport:
    """
    Rows that can be appended below a window, step by step

    A row counts for step i when it occurs in some continuation that reaches
    the full number of steps.  With outside="free" only windows inside the
    known width are checked; with outside="zero" the columns beyond it are
    zero in every row.
    """
    forbidden = forbidden or derive_forbidden(game_of_life(), 0)
    if outside not in ("free", "zero"):
        raise ValueError(f"unknown outside mode {outside!r}")
    grid = window.to_array()
    width, height = grid.shape
    if height < forbidden.n:
        raise ValueError("window must have at least 2r rows")
    span = forbidden.n
    start = tuple(tuple(int(v) for v in grid[:, j]) for j in range(span))

    layers: List[Dict[Tuple, Set[Tuple]]] = [{start: set()}]
    for step in range(steps):
        layer: Dict[Tuple, Set[Tuple]] = {}
        for state in layers[-1]:
            for new_row in _rows_below(state, forbidden, width, outside):
                layer.setdefault((new_row,) + state[: span - 1], set()).add(state)
        logger.debug("forced_rows: step %d has %d states", step + 1, len(layer))
        layers.append(layer)
        if not layer:
            break

    alive: List[Set[Tuple]] = [set() for _ in range(steps + 1)]
    if len(layers) == steps + 1:
        alive[steps] = set(layers[steps])
    for i in range(steps, 0, -1):
        for state in alive[i]:
            alive[i - 1] |= layers[i][state]
    rows = [sorted({state[0] for state in alive[i]}) for i in range(1, steps + 1)]
    return ForcedRowsReport(width, steps, outside, rows)


def extension_depth(window: Pattern, depth: int, forbidden: ForbiddenSet, outside: str = "free") -> int:
    """Largest d <= depth such that d rows can be appended below the window"""
    grid = window.to_array()
    width, height = grid.shape
    span = forbidden.n
    if height < span:
        raise ValueError("window must have at least 2r rows")
    frontier = {tuple(tuple(int(v) for v in grid[:, j]) for j in range(span))}
    for step in range(depth):
        following = set()
        for state in frontier:
            for new_row in _rows_below(state, forbidden, width, outside):
                following.add((new_row,) + state[: span - 1])
        if not following:
            return step
        frontier = following
    return depth
