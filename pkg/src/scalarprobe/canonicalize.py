"""Exponent-explicit rewriting of numeric literals in plain text.

Subword tokenizers shred numerals into arbitrary pieces, so a model never
sees magnitude directly.  The rewrite here makes magnitude a literal token:
every number is replaced by ``<significand>[EXP]<exponent>``, where the
significand keeps only the significant digits and the exponent is the
decimal exponent of the leading digit.  ``314.1`` becomes ``3141[EXP]2``,
``0.25`` becomes ``25[EXP]-1``.

The transform is exact (no float parsing anywhere) and idempotent: text
that already contains rewritten numbers passes through unchanged.
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

EXP_TOKEN = "[EXP]"

# Decimal exponents beyond double range are left untouched; downstream
# consumers parse rewritten literals back into floats.
MAX_ABS_EXPONENT = 308

# Maximal numeric literal: optional sign, integer part with optional
# strict 3-digit comma grouping, optional fraction, optional e-part.
# The grouped alternative comes first so "1,234" wins over "1".
_NUMBER_RE = re.compile(
    r"(?P<sign>[+-])?"
    r"(?P<int>[0-9]{1,3}(?:,[0-9]{3})+|[0-9]+)"
    r"(?:\.(?P<frac>[0-9]+))?"
    r"(?:[eE](?P<exp>[+-]?[0-9]+))?"
)


class StreamIOError(OSError):
    """I/O failure during stream canonicalization.

    ``byte_offset`` is the count of bytes successfully read (for read
    failures) or written (for write failures) before the error.
    """

    def __init__(self, message: str, byte_offset: int):
        super().__init__(message)
        self.byte_offset = byte_offset


@dataclass
class NumericLiteral:
    """One numeric literal found in text.

    ``significand_digits`` has no sign, no separators, no leading zeros and
    no trailing zeros ("0" for zero).  ``exponent`` is the base-10 exponent
    of the leading significant digit, i.e. floor(log10(|value|)) for
    nonzero values and 0 for zero.
    """

    raw_text: str
    start: int
    end: int
    negative: bool
    significand_digits: str
    exponent: int

    def value(self) -> Fraction:
        """Exact value of the literal."""
        if self.significand_digits == "0":
            return Fraction(0)
        mag = Fraction(int(self.significand_digits))
        mag *= Fraction(10) ** (self.exponent - (len(self.significand_digits) - 1))
        return -mag if self.negative else mag


@dataclass
class CanonicalizeStats:
    literals_rewritten: int = 0
    literals_skipped: int = 0
    bytes_in: int = 0
    bytes_out: int = 0

    def merge(self, other: "CanonicalizeStats") -> None:
        self.literals_rewritten += other.literals_rewritten
        self.literals_skipped += other.literals_skipped
        self.bytes_in += other.bytes_in
        self.bytes_out += other.bytes_out

    def as_dict(self) -> dict:
        return {
            "literals_rewritten": self.literals_rewritten,
            "literals_skipped": self.literals_skipped,
            "bytes_in": self.bytes_in,
            "bytes_out": self.bytes_out,
        }


def _parse_match(m: re.Match) -> Optional[NumericLiteral]:
    """Normalize a regex match into a literal, or None if out of range."""
    frac = m.group("frac") or ""
    digits = m.group("int").replace(",", "") + frac
    last_exp = (int(m.group("exp")) if m.group("exp") else 0) - len(frac)

    sig = digits.lstrip("0")
    if not sig:
        return NumericLiteral(m.group(0), m.start(), m.end(), False, "0", 0)
    stripped = sig.rstrip("0")
    last_exp += len(sig) - len(stripped)
    exponent = last_exp + len(stripped) - 1
    if abs(exponent) > MAX_ABS_EXPONENT:
        return None
    return NumericLiteral(
        raw_text=m.group(0),
        start=m.start(),
        end=m.end(),
        negative=m.group("sign") == "-",
        significand_digits=stripped,
        exponent=exponent,
    )


def _scan(text: str) -> Iterator[tuple]:
    """Yield ("lit", NumericLiteral) and ("skip", start, end) events in order.

    Skips cover three cases: literals touching a letter on either side
    (unit suffixes, identifiers), literals already adjacent to an
    [EXP] token (output of a previous pass), and exponents outside
    double range.
    """
    pos = 0
    n = len(text)
    while pos < n:
        m = _NUMBER_RE.search(text, pos)
        if m is None:
            return
        if m.group("sign") and m.start() > 0 and text[m.start() - 1].isalnum():
            # "3-4", "x-4": the sign binds to the preceding token, keep
            # only the digits.
            m = _NUMBER_RE.match(text, m.start() + 1)
        start, end = m.start(), m.end()
        pos = end
        before = text[start - 1] if start > 0 else ""
        after = text[end] if end < n else ""
        if before.isalpha() or after.isalpha():
            yield ("skip", start, end)
            continue
        if text.startswith(EXP_TOKEN, end) or text.endswith(EXP_TOKEN, 0, start):
            # Already-canonical significand or exponent; leave alone so a
            # second pass is a no-op.
            yield ("skip", start, end)
            continue
        lit = _parse_match(m)
        if lit is None:
            yield ("skip", start, end)
            continue
        yield ("lit", lit)


def scan_numbers(text: str) -> Iterator[NumericLiteral]:
    """Yield every rewritable numeric literal in ``text``, left to right.

    Literals fused with letters, literals that are part of an existing
    ``[EXP]`` form, and literals with |exponent| > 308 are not yielded.
    """
    for event in _scan(text):
        if event[0] == "lit":
            yield event[1]


def to_scientific(lit: NumericLiteral) -> str:
    """Render a literal as ``<significand>[EXP]<exponent>``."""
    if lit.significand_digits == "0":
        return f"0{EXP_TOKEN}0"
    sign = "-" if lit.negative else ""
    return f"{sign}{lit.significand_digits}{EXP_TOKEN}{lit.exponent}"


_SCI_RE = re.compile(r"(-?)([0-9]+)\[EXP\](-?[0-9]+)")


def from_scientific(text: str) -> Fraction:
    """Parse a string produced by :func:`to_scientific` back to its exact value.

    Raises ValueError on anything the writer could not have emitted
    (leading zeros, trailing zeros, signed zero, un-normalized exponent).
    """
    m = _SCI_RE.fullmatch(text)
    if m is None:
        raise ValueError(f"not a canonical scientific literal: {text!r}")
    sign, sig, exp = m.group(1), m.group(2), int(m.group(3))
    if sig == "0":
        if sign or exp != 0:
            raise ValueError(f"zero must be written 0[EXP]0: {text!r}")
        return Fraction(0)
    if sig[0] == "0" or sig[-1] == "0":
        raise ValueError(f"significand not normalized: {text!r}")
    value = Fraction(int(sig)) * Fraction(10) ** (exp - (len(sig) - 1))
    return -value if sign else value


def canonicalize_text(text: str) -> tuple[str, CanonicalizeStats]:
    """Rewrite every rewritable literal in ``text``; all other bytes pass
    through unchanged."""
    stats = CanonicalizeStats(bytes_in=len(text.encode("utf-8")))
    parts = []
    last = 0
    for event in _scan(text):
        if event[0] == "skip":
            stats.literals_skipped += 1
            continue
        lit = event[1]
        parts.append(text[last: lit.start])
        parts.append(to_scientific(lit))
        last = lit.end
        stats.literals_rewritten += 1
    parts.append(text[last:])
    out = "".join(parts)
    stats.bytes_out = len(out.encode("utf-8"))
    return out, stats


def _last_whitespace(chunk: str) -> Optional[int]:
    for i in range(len(chunk) - 1, -1, -1):
        if chunk[i].isspace():
            return i
    return None


def canonicalize_stream(reader, writer, chunk_size: int = 64 * 1024) -> CanonicalizeStats:
    """Canonicalize ``reader`` into ``writer`` in bounded memory.

    The buffer is always cut at whitespace, so no literal ever straddles a
    chunk boundary and every literal sees its true neighbors.  Only text
    containing no whitespace at all is held unbounded.
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    stats = CanonicalizeStats()
    carry = ""

    def emit(piece: str) -> None:
        out, s = canonicalize_text(piece)
        try:
            writer.write(out)
        except OSError as exc:
            raise StreamIOError(
                f"write failed after {stats.bytes_out} bytes: {exc}", stats.bytes_out
            ) from exc
        stats.literals_rewritten += s.literals_rewritten
        stats.literals_skipped += s.literals_skipped
        stats.bytes_out += s.bytes_out

    while True:
        try:
            chunk = reader.read(chunk_size)
        except OSError as exc:
            raise StreamIOError(
                f"read failed after {stats.bytes_in} bytes: {exc}", stats.bytes_in
            ) from exc
        if not chunk:
            break
        stats.bytes_in += len(chunk.encode("utf-8"))
        # carry never contains whitespace except at position 0, so only the
        # new chunk needs scanning.
        j = _last_whitespace(chunk)
        if j is None:
            carry += chunk
            continue
        cut = len(carry) + j
        buf = carry + chunk
        emit(buf[:cut])
        carry = buf[cut:]
    if carry:
        emit(carry)
    return stats
