"""
Pattern file formats.

text      rows of '.'/'0' (zero) and 'O'/'1' (one), northernmost row first;
          other digits stand for themselves.  Lines starting with '#' or '!'
          are comments.
rle       the common Life RLE subset: optional 'x = .., y = ..' header,
          run counts, 'b' / 'o' (or digits-as-letters 'A'..), '$' and '!'.
binary    the shape-prefixed encoding 0^M 1^N 0 u of a finite-support
          configuration (see encode_config).

Parsed rectangular patterns have their south-west corner at the origin
unless the format carries its own coordinates.
"""

import logging
import re
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from .ca_core import FiniteConfig, Pattern, symbol_of
from .exceptions import EncodingError, PatternFormatError

logger = logging.getLogger(__name__)

FORMATS = ("auto", "text", "rle", "binary")

_RLE_HEADER = re.compile(r"^\s*x\s*=\s*(\d+)\s*,\s*y\s*=\s*(\d+)", re.IGNORECASE)
_RLE_TOKEN = re.compile(r"(\d*)([bo.A-Xa-x$!])")


def _guess_format(text: str) -> str:
    stripped = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if any(_RLE_HEADER.match(ln) for ln in stripped) or any(ch in text for ch in "$!"):
        return "rle"
    return "text"


def _parse_text(text: str) -> Pattern:
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line[0] in "#!":
            continue
        rows.append(line)
    if not rows:
        raise PatternFormatError("pattern text is empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise PatternFormatError("pattern rows have different lengths")
    try:
        return Pattern.from_rows(rows)
    except ValueError as e:
        raise PatternFormatError(str(e)) from e


def _rle_symbol(tag: str) -> int:
    if tag in "b.":
        return 0
    if tag == "o":
        return 1
    # multi-state RLE: 'A' is state 1
    return ord(tag.upper()) - ord("A") + 1


def _parse_rle(text: str) -> Pattern:
    width = height = None
    body = []
    for line in text.splitlines():
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        m = _RLE_HEADER.match(s)
        if m:
            width, height = int(m.group(1)), int(m.group(2))
            continue
        body.append(s)
    data = "".join(body)
    rows: List[List[int]] = [[]]
    pos = 0
    for m in _RLE_TOKEN.finditer(data):
        if m.start() != pos:
            raise PatternFormatError(f"unexpected RLE text at offset {pos}: {data[pos:m.start()]!r}")
        pos = m.end()
        count = int(m.group(1)) if m.group(1) else 1
        tag = m.group(2)
        if tag == "!":
            break
        if tag == "$":
            rows.extend([] for _ in range(count))
            continue
        rows[-1].extend([_rle_symbol(tag)] * count)
    else:
        if data[pos:].strip():
            raise PatternFormatError("trailing characters after RLE body")

    width = max(width or 0, max(len(r) for r in rows))
    height = max(height or 0, len(rows))
    grid = np.zeros((width, height), dtype=np.uint8)
    for j, row in enumerate(rows):
        for i, v in enumerate(row):
            grid[i, height - 1 - j] = v
    return Pattern.from_array(grid)


def parse_pattern(text: str, fmt: str = "auto") -> Pattern:
    """
    Parse a pattern from text

    Args:
        text: file contents
        fmt: one of auto, text, rle, binary

    Returns:
        Pattern (rectangular)

    Raises:
        PatternFormatError: malformed input
        EncodingError: malformed binary encoding
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown pattern format {fmt!r}")
    if fmt == "auto":
        fmt = _guess_format(text)
    if fmt == "text":
        return _parse_text(text)
    if fmt == "rle":
        return _parse_rle(text)
    return decode_config("".join(text.split())).pattern


def read_pattern(path: Union[str, Path], fmt: str = "auto") -> Pattern:
    with open(path, "r") as f:
        text = f.read()
    logger.debug("read pattern file %s", path)
    return parse_pattern(text, fmt)


def _symbol_char(v: int) -> str:
    return {0: ".", 1: "O"}.get(v, str(v))


def format_pattern(p: Pattern, fmt: str = "text") -> str:
    """Render a rectangular pattern; the inverse of parse_pattern up to origin"""
    grid = p.to_array()
    w, h = grid.shape
    if fmt == "text":
        return "\n".join(
            "".join(_symbol_char(int(grid[i, j])) for i in range(w)) for j in reversed(range(h))
        ) + "\n"
    if fmt == "rle":
        lines = [f"x = {w}, y = {h}"]
        runs = []
        for j in reversed(range(h)):
            row = [int(grid[i, j]) for i in range(w)]
            while row and row[-1] == 0:
                row.pop()
            out = []
            i = 0
            while i < len(row):
                k = i
                while k < len(row) and row[k] == row[i]:
                    k += 1
                tag = "b" if row[i] == 0 else "o" if row[i] == 1 else chr(ord("A") + row[i] - 1)
                out.append(f"{k - i if k - i > 1 else ''}{tag}")
                i = k
            runs.append("".join(out))
        lines.append("$".join(runs) + "!")
        return "\n".join(lines) + "\n"
    if fmt == "binary":
        return encode_config(FiniteConfig(p)) + "\n"
    raise ValueError(f"unknown pattern format {fmt!r}")


# ---------------------------------------------------------------------------
# shape-prefixed encoding


def _payload_position(a: int, b: int, m: int, n: int, order: str) -> int:
    if order == "row":
        return (b + n) * (2 * m + 1) + (a + m)
    return (a + m) * (2 * n + 1) + (b + n)


def encode_config(y: FiniteConfig, order: str = "row") -> str:
    """
    Encode conf_0(P) as 0^M 1^N 0 u with |u| = (2M+1)(2N+1)

    M and N are the least values with the support inside [-M, M] x [-N, N].
    With order="row" the payload lists rows bottom to top,
    u[(b+N)(2M+1) + (a+M)] = y(a, b); order="column" lists columns west to
    east, u[(a+M)(2N+1) + (b+N)] = y(a, b).  Symbols above 1 are written as
    their decimal digit.
    """
    if order not in ("row", "column"):
        raise ValueError(f"unknown payload order {order!r}")
    support = y.support()
    m = max((abs(c.x) for c in support), default=0)
    n = max((abs(c.y) for c in support), default=0)
    payload = ["0"] * ((2 * m + 1) * (2 * n + 1))
    for c in support:
        v = y.value(c.x, c.y)
        if v > 9:
            raise EncodingError("symbols above 9 cannot be written in the binary encoding")
        payload[_payload_position(c.x, c.y, m, n, order)] = str(v)
    return "0" * m + "1" * n + "0" + "".join(payload)


def _split_prefix(word: str) -> Tuple[int, int, str]:
    """Return (M, N, payload); exactly one of the two readings can fit"""
    lead = len(word) - len(word.lstrip("0"))
    if lead < len(word) and word[lead] == "1":
        ones = len(word[lead:]) - len(word[lead:].lstrip("1"))
        m, n = lead, ones
        rest = word[lead + ones:]
        if rest.startswith("0") and len(rest) - 1 == (2 * m + 1) * (2 * n + 1):
            return m, n, rest[1:]
    # N = 0: the word is 0^(M+1) u with |u| = 2M+1
    if len(word) >= 2 and (len(word) - 2) % 3 == 0:
        m = (len(word) - 2) // 3
        if lead >= m + 1:
            return m, 0, word[m + 1:]
    raise EncodingError(f"word of length {len(word)} has no valid shape prefix")


def decode_config(word: str, order: str = "row") -> FiniteConfig:
    """Inverse of encode_config"""
    if order not in ("row", "column"):
        raise ValueError(f"unknown payload order {order!r}")
    word = word.strip()
    if not word or any(not ch.isdigit() for ch in word):
        raise EncodingError("encoded configurations are words over decimal digits")
    m, n, payload = _split_prefix(word)
    grid = np.zeros((2 * m + 1, 2 * n + 1), dtype=np.uint8)
    for a in range(-m, m + 1):
        for b in range(-n, n + 1):
            grid[a + m, b + n] = symbol_of(payload[_payload_position(a, b, m, n, order)])
    return FiniteConfig(Pattern.from_array(grid, (-m, -n)))
