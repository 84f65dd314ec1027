"""
Finite automata over small indexed alphabets.

DFAs carry a dense numpy transition table delta[state, letter] and are always
total; a missing transition is represented by an explicit sink.  NFAs keep
successor tuples per (state, letter).  Words are lists of letter indices.

The empty word is treated like any other word: an automaton accepts it iff an
initial state is final.  All trace languages built in this package are
factor-closed and therefore contain it.
"""

import hashlib
import logging
from collections import deque
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .exceptions import AlphabetMismatch, CapacityExceeded

logger = logging.getLogger(__name__)

Word = List[int]

# Products with more state pairs than this are explored pair by pair.
FULL_PRODUCT_LIMIT = 1 << 18


@dataclass(frozen=True)
class IndexedAlphabet:
    """
    Letters 0..size-1, optionally annotated as columns of a CA alphabet

    When column_height is set, letter i is the height-h column whose cell j
    (counted from the bottom) is the j-th base-`base` digit of i.
    """

    size: int
    column_height: Optional[int] = None
    base: int = 2

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("alphabet must have at least one letter")
        if self.column_height is not None and self.base ** self.column_height != self.size:
            raise ValueError("column annotation does not match the alphabet size")

    @classmethod
    def columns(cls, height: int, base: int = 2) -> "IndexedAlphabet":
        return cls(base ** height, height, base)

    def decode(self, letter: int) -> Tuple[int, ...]:
        if self.column_height is None:
            raise ValueError("alphabet has no column annotation")
        cells = []
        for _ in range(self.column_height):
            letter, d = divmod(letter, self.base)
            cells.append(d)
        return tuple(cells)

    def encode(self, cells: Sequence[int]) -> int:
        letter = 0
        for d in reversed(cells):
            letter = letter * self.base + int(d)
        return letter


def _check_same_alphabet(a, b):
    if a.alphabet.size != b.alphabet.size:
        raise AlphabetMismatch(
            f"alphabet sizes differ: {a.alphabet.size} and {b.alphabet.size}"
        )


def _cap(max_states: Optional[int]) -> int:
    return config.MAX_STATES if max_states is None else max_states


class NFA:
    """Nondeterministic automaton without epsilon moves"""

    def __init__(
        self,
        alphabet: IndexedAlphabet,
        num_states: int,
        transitions: Iterable[Tuple[int, int, int]],
        initial: Iterable[int],
        final: Iterable[int],
        all_initial_final: bool = False,
    ):
        self.alphabet = alphabet
        self.num_states = num_states
        k = alphabet.size
        succ: List[List[set]] = [[set() for _ in range(k)] for _ in range(num_states)]
        for s, a, t in transitions:
            if not (0 <= s < num_states and 0 <= t < num_states and 0 <= a < k):
                raise ValueError(f"transition {(s, a, t)} references an unknown state or letter")
            succ[s][a].add(t)
        self.succ: List[List[Tuple[int, ...]]] = [[tuple(sorted(x)) for x in row] for row in succ]
        if all_initial_final:
            self.initial = frozenset(range(num_states))
            self.final = frozenset(range(num_states))
        else:
            self.initial = frozenset(initial)
            self.final = frozenset(final)
        self.all_initial_final = all_initial_final

    def transitions(self) -> Iterable[Tuple[int, int, int]]:
        for s, row in enumerate(self.succ):
            for a, targets in enumerate(row):
                for t in targets:
                    yield s, a, t

    @property
    def num_transitions(self) -> int:
        return sum(len(t) for row in self.succ for t in row)

    def accepts(self, word: Sequence[int]) -> bool:
        current = set(self.initial)
        for a in word:
            current = {t for s in current for t in self.succ[s][a]}
            if not current:
                return False
        return bool(current & self.final)

    def __repr__(self) -> str:
        return f"NFA(states={self.num_states}, letters={self.alphabet.size}, transitions={self.num_transitions})"


class DFA:
    """Total deterministic automaton"""

    def __init__(
        self,
        alphabet: IndexedAlphabet,
        delta: np.ndarray,
        initial: int,
        final: np.ndarray,
        minimal: bool = False,
    ):
        delta = np.asarray(delta, dtype=np.int32)
        final = np.asarray(final, dtype=bool)
        if delta.ndim != 2 or delta.shape[1] != alphabet.size:
            raise ValueError("transition table shape does not match the alphabet")
        if final.shape != (delta.shape[0],):
            raise ValueError("final-state vector does not match the state count")
        if delta.size and (delta.min() < 0 or delta.max() >= delta.shape[0]):
            raise ValueError("transition table references unknown states")
        if not 0 <= initial < delta.shape[0]:
            raise ValueError("initial state out of range")
        self.alphabet = alphabet
        self.delta = delta
        self.initial = int(initial)
        self.final = final
        self.minimal = minimal

    @property
    def num_states(self) -> int:
        return self.delta.shape[0]

    def run(self, word: Sequence[int], start: Optional[int] = None) -> int:
        q = self.initial if start is None else start
        for a in word:
            q = int(self.delta[q, a])
        return q

    def accepts(self, word: Sequence[int]) -> bool:
        return bool(self.final[self.run(word)])

    def live_states(self) -> np.ndarray:
        """Boolean mask of states from which a final state is reachable"""
        live = self.final.copy()
        while True:
            grown = live | live[self.delta].any(axis=1)
            if np.array_equal(grown, live):
                return live
            live = grown

    def reachable_states(self) -> np.ndarray:
        seen = np.zeros(self.num_states, dtype=bool)
        seen[self.initial] = True
        frontier = np.array([self.initial])
        while frontier.size:
            nxt = np.unique(self.delta[frontier].ravel())
            nxt = nxt[~seen[nxt]]
            seen[nxt] = True
            frontier = nxt
        return seen

    def to_dict(self) -> Dict:
        """Documented JSON form"""
        out = {
            "alphabet_size": self.alphabet.size,
            "states": self.num_states,
            "initial": self.initial,
            "final": [int(s) for s in np.nonzero(self.final)[0]],
            "transitions": self.delta.tolist(),
            "minimal": self.minimal,
        }
        if self.alphabet.column_height is not None:
            out["column_height"] = self.alphabet.column_height
            out["column_base"] = self.alphabet.base
        return out

    @classmethod
    def from_dict(cls, data: Dict) -> "DFA":
        alphabet = IndexedAlphabet(
            int(data["alphabet_size"]), data.get("column_height"), int(data.get("column_base", 2))
        )
        final = np.zeros(int(data["states"]), dtype=bool)
        final[list(data["final"])] = True
        delta = np.asarray(data["transitions"], dtype=np.int32).reshape(int(data["states"]), alphabet.size)
        return cls(alphabet, delta, int(data["initial"]), final, bool(data.get("minimal", False)))

    def __repr__(self) -> str:
        return f"DFA(states={self.num_states}, letters={self.alphabet.size}, minimal={self.minimal})"


# ---------------------------------------------------------------------------
# construction


def universal_dfa(alphabet: IndexedAlphabet) -> DFA:
    delta = np.zeros((1, alphabet.size), dtype=np.int32)
    return DFA(alphabet, delta, 0, np.array([True]), minimal=True)


def empty_dfa(alphabet: IndexedAlphabet) -> DFA:
    delta = np.zeros((1, alphabet.size), dtype=np.int32)
    return DFA(alphabet, delta, 0, np.array([False]), minimal=True)


def _iter_bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def determinize(a: NFA, max_states: Optional[int] = None) -> DFA:
    """
    Subset construction over reachable subsets

    Subsets are Python-int bitsets over the NFA states; the empty subset is
    the sink.

    Raises:
        CapacityExceeded: more than max_states subsets
    """
    cap = _cap(max_states)
    k = a.alphabet.size
    succ_mask = [[0] * a.num_states for _ in range(k)]
    for s, row in enumerate(a.succ):
        for letter, targets in enumerate(row):
            m = 0
            for t in targets:
                m |= 1 << t
            succ_mask[letter][s] = m
    final_mask = 0
    for s in a.final:
        final_mask |= 1 << s

    start = 0
    for s in a.initial:
        start |= 1 << s
    index: Dict[int, int] = {start: 0}
    subsets = [start]
    rows: List[List[int]] = []
    i = 0
    while i < len(subsets):
        current = subsets[i]
        bits = list(_iter_bits(current))
        row = []
        for letter in range(k):
            table = succ_mask[letter]
            nxt = 0
            for s in bits:
                nxt |= table[s]
            j = index.get(nxt)
            if j is None:
                j = len(subsets)
                if j >= cap:
                    raise CapacityExceeded("subset construction", cap)
                index[nxt] = j
                subsets.append(nxt)
            row.append(j)
        rows.append(row)
        i += 1
        if i % 10000 == 0:
            logger.debug("determinize: %d subsets expanded, %d discovered", i, len(subsets))
    final = np.array([bool(s & final_mask) for s in subsets])
    logger.debug("determinize: %d NFA states -> %d DFA states", a.num_states, len(subsets))
    return DFA(a.alphabet, np.array(rows, dtype=np.int32).reshape(len(subsets), k), 0, final)


def _renumber_bfs(d: DFA, classes: np.ndarray) -> DFA:
    """Quotient by `classes`, numbering blocks in BFS order from the initial block"""
    nblocks = int(classes.max()) + 1
    # representative transitions per block
    rep = np.zeros(nblocks, dtype=np.int64)
    rep[classes] = np.arange(d.num_states)
    block_delta = classes[d.delta[rep]]
    block_final = d.final[rep]
    start = int(classes[d.initial])
    order = {start: 0}
    queue = deque([start])
    while queue:
        b = queue.popleft()
        for letter in range(d.alphabet.size):
            t = int(block_delta[b, letter])
            if t not in order:
                order[t] = len(order)
                queue.append(t)
    blocks = sorted(order, key=order.get)
    perm = np.full(nblocks, -1, dtype=np.int64)
    perm[blocks] = np.arange(len(blocks))
    new_delta = perm[block_delta[blocks]]
    return DFA(d.alphabet, new_delta, 0, block_final[blocks], minimal=True)


def minimize(d: DFA) -> DFA:
    """
    Canonical minimal DFA

    Moore partition refinement on the reachable part, then breadth-first
    renumbering so equal languages give identical tables.
    """
    if d.minimal:
        return d
    reach = d.reachable_states()
    if not reach.all():
        keep = np.nonzero(reach)[0]
        remap = np.full(d.num_states, -1, dtype=np.int64)
        remap[keep] = np.arange(keep.size)
        d = DFA(d.alphabet, remap[d.delta[keep]], int(remap[d.initial]), d.final[keep])
    classes = d.final.astype(np.int64)
    count = len(np.unique(classes))
    rounds = 0
    while True:
        signature = np.column_stack([classes, classes[d.delta]])
        _, inverse = np.unique(signature, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        new_count = int(inverse.max()) + 1
        rounds += 1
        if new_count == count:
            classes = inverse
            break
        classes, count = inverse, new_count
    logger.debug("minimize: %d states -> %d blocks after %d rounds", d.num_states, count, rounds)
    return _renumber_bfs(d, classes)


def _product(a: DFA, b: DFA, accept: Callable[[np.ndarray, np.ndarray], np.ndarray], max_states: Optional[int]) -> DFA:
    _check_same_alphabet(a, b)
    cap = _cap(max_states)
    k = a.alphabet.size
    nb = b.num_states
    if a.num_states * nb <= min(cap, FULL_PRODUCT_LIMIT):
        ia = np.repeat(np.arange(a.num_states), nb)
        ib = np.tile(np.arange(nb), a.num_states)
        delta = a.delta[ia] * nb + b.delta[ib]
        final = accept(a.final[ia], b.final[ib])
        return DFA(a.alphabet, delta, a.initial * nb + b.initial, final)
    # reachable pairs only
    index = {(a.initial, b.initial): 0}
    pairs = [(a.initial, b.initial)]
    rows = []
    i = 0
    while i < len(pairs):
        p, q = pairs[i]
        row = []
        for letter in range(k):
            t = (int(a.delta[p, letter]), int(b.delta[q, letter]))
            j = index.get(t)
            if j is None:
                j = len(pairs)
                if j >= cap:
                    raise CapacityExceeded("product construction", cap)
                index[t] = j
                pairs.append(t)
            row.append(j)
        rows.append(row)
        i += 1
    pa = np.array([p for p, _ in pairs])
    pb = np.array([q for _, q in pairs])
    return DFA(a.alphabet, np.array(rows, dtype=np.int32), 0, accept(a.final[pa], b.final[pb]))


def intersect(a: DFA, b: DFA, max_states: Optional[int] = None) -> DFA:
    return minimize(_product(a, b, np.logical_and, max_states))


def union(a: DFA, b: DFA, max_states: Optional[int] = None) -> DFA:
    return minimize(_product(a, b, np.logical_or, max_states))


def difference(a: DFA, b: DFA, max_states: Optional[int] = None) -> DFA:
    """L(a) minus L(b)"""
    return minimize(_product(a, b, lambda x, y: x & ~y, max_states))


def complement(a: DFA) -> DFA:
    return DFA(a.alphabet, a.delta, a.initial, ~a.final, minimal=a.minimal)


# ---------------------------------------------------------------------------
# queries


def _shortlex_search(d: DFA, target: np.ndarray, max_depth: Optional[int] = None) -> Optional[Word]:
    """Shortlex-least word leading from the initial state into `target`"""
    parent: Dict[int, Tuple[int, int]] = {d.initial: (-1, -1)}
    depth = {d.initial: 0}
    queue = deque([d.initial])
    found = d.initial if target[d.initial] else None
    while queue and found is None:
        s = queue.popleft()
        if max_depth is not None and depth[s] >= max_depth:
            continue
        for letter in range(d.alphabet.size):
            t = int(d.delta[s, letter])
            if t in parent:
                continue
            parent[t] = (s, letter)
            depth[t] = depth[s] + 1
            if target[t]:
                found = t
                break
            queue.append(t)
    if found is None:
        return None
    word = []
    s = found
    while parent[s][0] != -1:
        s, letter = parent[s]
        word.append(letter)
    return word[::-1]


def shortest_accepted(d: DFA) -> Optional[Word]:
    return _shortlex_search(d, d.final)


def is_empty(d: DFA) -> Tuple[bool, Optional[Word]]:
    """
    Emptiness test

    Returns:
        (True, None) for the empty language, otherwise (False, w) with w the
        shortest accepted word, least in letter order among the shortest
    """
    word = shortest_accepted(d)
    return word is None, word


def includes(a: DFA, b: DFA, max_states: Optional[int] = None) -> Tuple[bool, Optional[Word]]:
    """Whether L(b) is a subset of L(a); on failure a shortest word of L(b) - L(a)"""
    empty, witness = is_empty(difference(b, a, max_states))
    return empty, witness


def equivalent(a: DFA, b: DFA, max_states: Optional[int] = None) -> Tuple[bool, Optional[Word]]:
    """Language equality; on failure a shortest word in exactly one language"""
    sym = minimize(_product(a, b, np.logical_xor, max_states))
    empty, witness = is_empty(sym)
    return empty, witness


def universal_up_to_length(d: DFA, m: int) -> Tuple[bool, Optional[Word]]:
    """
    Whether every word of length at most m is accepted

    The empty word counts as the word of length 0.  On failure the shortlex
    least rejected word is returned.
    """
    if m < 0:
        raise ValueError("length bound must be non-negative")
    missing = _shortlex_search(d, ~d.final, max_depth=m)
    return missing is None, missing


def count_words(d: DFA, max_length: int) -> List[int]:
    """Number of accepted words of each length 0..max_length"""
    counts = d.final.astype(object)
    accepted = np.zeros(max_length + 1, dtype=object)
    # counts[s] = accepted words of the current length starting at s
    per_length = [counts]
    for _ in range(max_length):
        counts = per_length[-1][d.delta].sum(axis=1)
        per_length.append(counts)
    for length, c in enumerate(per_length):
        accepted[length] = c[d.initial]
    return [int(x) for x in accepted]


def fingerprint(d: DFA, max_length: int = 8) -> Dict:
    """State count, accepted-word counts per length and a digest of the canonical table"""
    m = minimize(d)
    h = hashlib.sha256()
    h.update(f"{m.alphabet.size}:{m.num_states}:".encode())
    h.update(m.delta.astype(np.int32).tobytes())
    h.update(m.final.astype(np.uint8).tobytes())
    return {
        "states": m.num_states,
        "word_counts": count_words(m, max_length),
        "sha256": h.hexdigest(),
    }


# ---------------------------------------------------------------------------
# NFA-level operations


def dfa_to_nfa(d: DFA, all_initial_final: bool = True) -> NFA:
    """
    Restrict to states that can still reach a final state

    With all_initial_final (the default) every kept state becomes initial
    and final; for a factor-closed language this recognises the same
    language.
    """
    live = d.live_states()
    if not all_initial_final:
        live = live & d.reachable_states()
    keep = np.nonzero(live)[0]
    remap = {int(s): i for i, s in enumerate(keep)}
    transitions = []
    for s in keep:
        for letter in range(d.alphabet.size):
            t = int(d.delta[s, letter])
            if t in remap:
                transitions.append((remap[int(s)], letter, remap[t]))
    if all_initial_final:
        return NFA(d.alphabet, len(keep), transitions, (), (), all_initial_final=True)
    initial = [remap[d.initial]] if d.initial in remap else []
    final = [remap[int(s)] for s in keep if d.final[s]]
    return NFA(d.alphabet, len(keep), transitions, initial, final)


def project(d: DFA, letter_map: Sequence[int], out_alphabet: IndexedAlphabet) -> NFA:
    """Relabel every transition by letter_map (negative entries drop the letter)"""
    if len(letter_map) != d.alphabet.size:
        raise ValueError("letter map does not cover the alphabet")
    transitions = []
    for s in range(d.num_states):
        for letter, out in enumerate(letter_map):
            if out >= 0:
                transitions.append((s, int(out), int(d.delta[s, letter])))
    final = [int(s) for s in np.nonzero(d.final)[0]]
    return NFA(out_alphabet, d.num_states, transitions, [d.initial], final)


def trim_biextendable(a: NFA) -> NFA:
    """
    Keep only states on bi-infinite paths

    States without an incoming or an outgoing transition (among the states
    still kept) are removed until nothing changes.  The result has every
    state initial and final.
    """
    n = a.num_states
    indeg = [0] * n
    outdeg = [0] * n
    preds: List[List[int]] = [[] for _ in range(n)]
    succs: List[List[int]] = [[] for _ in range(n)]
    for s, _, t in a.transitions():
        outdeg[s] += 1
        indeg[t] += 1
        succs[s].append(t)
        preds[t].append(s)
    alive = [True] * n
    work = [s for s in range(n) if indeg[s] == 0 or outdeg[s] == 0]
    while work:
        s = work.pop()
        if not alive[s]:
            continue
        alive[s] = False
        for t in succs[s]:
            indeg[t] -= 1
            if alive[t] and indeg[t] == 0:
                work.append(t)
        for p in preds[s]:
            outdeg[p] -= 1
            if alive[p] and outdeg[p] == 0:
                work.append(p)
    keep = [s for s in range(n) if alive[s]]
    remap = {s: i for i, s in enumerate(keep)}
    transitions = [
        (remap[s], letter, remap[t]) for s, letter, t in a.transitions() if s in remap and t in remap
    ]
    logger.debug("trim_biextendable: %d -> %d states", n, len(keep))
    return NFA(a.alphabet, len(keep), transitions, (), (), all_initial_final=True)


def ext_language(d: DFA, c: int) -> DFA:
    """
    Two-sided quotient by words of length exactly c

    Accepts { w : u w v is accepted for some |u| = |v| = c }.
    """
    if c < 0:
        raise ValueError("extension length must be non-negative")
    start = np.zeros(d.num_states, dtype=bool)
    start[d.initial] = True
    for _ in range(c):
        nxt = np.zeros(d.num_states, dtype=bool)
        nxt[np.unique(d.delta[start].ravel())] = True
        start = nxt
    ends = d.final.copy()
    for _ in range(c):
        ends = ends[d.delta].any(axis=1)
    transitions = [
        (s, letter, int(d.delta[s, letter]))
        for s in range(d.num_states)
        for letter in range(d.alphabet.size)
    ]
    nfa = NFA(
        d.alphabet,
        d.num_states,
        transitions,
        [int(s) for s in np.nonzero(start)[0]],
        [int(s) for s in np.nonzero(ends)[0]],
    )
    return minimize(determinize(nfa))


def subshift_dfa(a: NFA, max_states: Optional[int] = None) -> DFA:
    """Minimal DFA of the language of the largest subshift inside L(a)"""
    return minimize(determinize(trim_biextendable(a), max_states))
