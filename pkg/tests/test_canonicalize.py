"""Tests for numeric literal detection and scientific-notation rewriting.

The exactness contract is the core concern: every rewrite must be value
preserving as an exact rational, and re-running the rewriter over its own
output must change nothing.
"""

import io
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from scalarprobe.canonicalize import (
    EXP_TOKEN,
    MAX_ABS_EXPONENT,
    CanonicalizeStats,
    StreamIOError,
    canonicalize_stream,
    canonicalize_text,
    from_scientific,
    scan_numbers,
    to_scientific,
)


def oracle_value(raw: str) -> Fraction:
    """Exact value of a decimal literal, computed without the module under
    test: Decimal parses the digit string exactly, Fraction keeps it exact."""
    return Fraction(Decimal(raw.replace(",", "")))


class TestRewriteTable:
    """Frozen input/output pairs covering the grammar and skip rules."""

    CASES = [
        ("314.1", "3141[EXP]2"),
        ("It weighs 314.1 grams.", "It weighs 3141[EXP]2 grams."),
        ("1,234", "1234[EXP]3"),
        ("1,234.56", "123456[EXP]3"),
        ("10,000,000", "1[EXP]7"),
        ("0", "0[EXP]0"),
        ("-0", "0[EXP]0"),
        ("0.000", "0[EXP]0"),
        ("0.5", "5[EXP]-1"),
        ("-2.5", "-25[EXP]0"),
        ("1e3", "1[EXP]3"),
        ("2.5E-4", "25[EXP]-4"),
        ("007", "7[EXP]0"),
        ("1.50", "15[EXP]0"),
        ("price: $19.99", "price: $1999[EXP]1"),
        # a sign preceded by an alphanumeric binds to that token, not the digits
        ("3-4", "3[EXP]0-4[EXP]0"),
        ("x-4", "x-4[EXP]0"),
        ("H=768", "H=768[EXP]2"),
        # comma groups must be exactly three digits; otherwise split
        ("1,23", "1[EXP]0,23[EXP]1"),
        ("no numbers here", "no numbers here"),
    ]

    @pytest.mark.parametrize("raw,expected", CASES)
    def test_rewrite(self, raw, expected):
        out, _ = canonicalize_text(raw)
        assert out == expected

    def test_letter_adjacent_literals_are_skipped(self):
        for raw in ("12eggs", "eggs12", "a1b", "BERT12"):
            out, stats = canonicalize_text(raw)
            assert out == raw
            assert stats.literals_rewritten == 0
            assert stats.literals_skipped == 1

    def test_exponent_out_of_double_range_is_skipped(self):
        out, stats = canonicalize_text("1e400 big")
        assert out == "1e400 big"
        assert stats.literals_skipped == 1
        # the boundary itself is still rewritable
        out, stats = canonicalize_text(f"1e{MAX_ABS_EXPONENT}")
        assert out == f"1[EXP]{MAX_ABS_EXPONENT}"
        out, stats = canonicalize_text(f"1e{MAX_ABS_EXPONENT + 1}")
        assert stats.literals_skipped == 1

    def test_small_value_exponent_bound(self):
        out, _ = canonicalize_text("1e-308")
        assert out == "1[EXP]-308"
        out, stats = canonicalize_text("1e-309")
        assert out == "1e-309"
        assert stats.literals_skipped == 1


class TestStats:
    def test_counts_and_bytes(self):
        text = "It weighs 314.1 grams and costs 1,234 dollars."
        out, stats = canonicalize_text(text)
        assert stats.literals_rewritten == 2
        assert stats.literals_skipped == 0
        assert stats.bytes_in == len(text.encode("utf-8"))
        assert stats.bytes_out == len(out.encode("utf-8"))

    def test_merge_adds_fields(self):
        a = CanonicalizeStats(1, 2, 10, 20)
        a.merge(CanonicalizeStats(3, 4, 30, 40))
        assert a.as_dict() == {
            "literals_rewritten": 4,
            "literals_skipped": 6,
            "bytes_in": 40,
            "bytes_out": 60,
        }


class TestValueEquivalence:
    """Every rewrite preserves the literal's exact rational value."""

    @pytest.mark.parametrize(
        "raw",
        ["314.1", "1,234.56", "0.5", "-2.5", "1e3", "2.5E-4", "007",
         "1.50", "123456789012345", "9.999999999999e300"],
    )
    def test_round_trip_against_decimal(self, raw):
        lits = list(scan_numbers(raw))
        assert len(lits) == 1
        lit = lits[0]
        expected = oracle_value(raw)
        assert lit.value() == expected
        assert from_scientific(to_scientific(lit)) == expected

    def test_zero_forms_collapse(self):
        for raw in ("0", "-0", "0.000", "0e5", "000.000"):
            (lit,) = scan_numbers(raw)
            assert to_scientific(lit) == "0[EXP]0"
            assert from_scientific("0[EXP]0") == 0


class TestFromScientificStrictness:
    """The parser accepts only what the writer can emit."""

    @pytest.mark.parametrize(
        "bad",
        ["3141", "3141[EXP]", "[EXP]2", "03[EXP]1", "30[EXP]1", "-0[EXP]0",
         "0[EXP]1", "3.1[EXP]0", "3141[EXP]2 ", " 3141[EXP]2", "+3[EXP]0"],
    )
    def test_rejects_non_canonical(self, bad):
        with pytest.raises(ValueError):
            from_scientific(bad)

    def test_accepts_negative_exponent_and_sign(self):
        assert from_scientific("-25[EXP]-4") == Fraction(-25, 100000)


class TestIdempotence:
    def test_double_pass_is_identity(self):
        text = "It weighs 314.1 grams and costs 1,234 dollars. H=768, 3-4 of 12eggs."
        once, _ = canonicalize_text(text)
        twice, stats = canonicalize_text(once)
        assert twice == once
        assert stats.literals_rewritten == 0

    def test_existing_tokens_left_alone(self):
        out, stats = canonicalize_text("3141[EXP]2")
        assert out == "3141[EXP]2"
        assert stats.literals_rewritten == 0
        # both the significand and the exponent register as skips
        assert stats.literals_skipped == 2


# strategy for decimal literals with at most 15 significant digits
_significands = st.integers(min_value=0, max_value=10**15 - 1)


@st.composite
def decimal_literals(draw):
    sig = draw(_significands)
    point = draw(st.integers(min_value=0, max_value=16))
    exp = draw(st.one_of(st.none(), st.integers(min_value=-290, max_value=290)))
    neg = draw(st.booleans())
    digits = str(sig)
    if point:
        digits = digits.zfill(point + 1)
        digits = digits[:-point] + "." + digits[-point:]
    raw = ("-" if neg else "") + digits
    if exp is not None:
        raw += draw(st.sampled_from(["e", "E"])) + str(exp)
    return raw


class TestPropertyBased:
    @given(decimal_literals())
    @settings(max_examples=300)
    def test_generated_literal_round_trips(self, raw):
        out, _ = canonicalize_text(f"v = {raw} units")
        (lit,) = scan_numbers(f"v = {raw} units")
        assert from_scientific(to_scientific(lit)) == oracle_value(raw)
        # the rewritten token embedded in context parses back identically
        token = out[len("v = "): -len(" units")]
        assert from_scientific(token) == oracle_value(raw)

    @given(st.text(alphabet=st.characters(codec="ascii"), max_size=200))
    @settings(max_examples=300)
    def test_idempotent_on_arbitrary_ascii(self, text):
        once, _ = canonicalize_text(text)
        twice, _ = canonicalize_text(once)
        assert twice == once

    @given(
        st.text(alphabet=" abz,.-019e[]EXP\n", max_size=300),
        st.integers(min_value=1, max_value=64),
    )
    @settings(max_examples=200)
    def test_stream_matches_whole_text(self, text, chunk_size):
        buf = io.StringIO()
        stats = canonicalize_stream(io.StringIO(text), buf, chunk_size=chunk_size)
        expected, expected_stats = canonicalize_text(text)
        assert buf.getvalue() == expected
        assert stats.as_dict() == expected_stats.as_dict()


class TestStream:
    def test_chunk_sizes_agree_on_long_text(self):
        words = []
        for i in range(2000):
            words.append(f"item{i} weighs {i}.{i % 97} grams, costs {i * 13},{i % 1000:03d}")
        text = " ".join(words) + "\n"
        expected, expected_stats = canonicalize_text(text)
        for chunk_size in (7, 64, 1024, 65536):
            buf = io.StringIO()
            stats = canonicalize_stream(io.StringIO(text), buf, chunk_size=chunk_size)
            assert buf.getvalue() == expected, chunk_size
            assert stats.as_dict() == expected_stats.as_dict()

    def test_literal_never_straddles_a_boundary(self):
        # chunk size 3 cuts "314.1" mid-literal unless the buffer logic holds
        text = "aa 314.159265 bb"
        buf = io.StringIO()
        canonicalize_stream(io.StringIO(text), buf, chunk_size=3)
        assert buf.getvalue() == canonicalize_text(text)[0]

    def test_whitespace_free_input_is_flushed_at_eof(self):
        buf = io.StringIO()
        canonicalize_stream(io.StringIO("12345"), buf, chunk_size=2)
        assert buf.getvalue() == "12345[EXP]4"

    def test_rejects_nonpositive_chunk_size(self):
        with pytest.raises(ValueError):
            canonicalize_stream(io.StringIO("x"), io.StringIO(), chunk_size=0)

    def test_read_failure_reports_byte_offset(self):
        class FlakyReader:
            def __init__(self):
                self.calls = 0

            def read(self, n):
                self.calls += 1
                if self.calls > 1:
                    raise OSError("disk gone")
                return "abc def "

        with pytest.raises(StreamIOError) as exc_info:
            canonicalize_stream(FlakyReader(), io.StringIO(), chunk_size=8)
        assert exc_info.value.byte_offset == 8

    def test_write_failure_reports_byte_offset(self):
        class BrokenWriter:
            def write(self, s):
                raise OSError("pipe closed")

        with pytest.raises(StreamIOError) as exc_info:
            canonicalize_stream(io.StringIO("two words"), BrokenWriter(), chunk_size=4)
        assert exc_info.value.byte_offset == 0
