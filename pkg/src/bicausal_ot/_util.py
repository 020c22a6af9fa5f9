"""Small shared helpers: rational parsing/formatting, directed-rounding roots,
interval values for irrational metrics, and a deterministic parallel map."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence, TypeVar, Union

from .errors import InexactValue, PrecisionBand, SchemaError

T = TypeVar("T")
U = TypeVar("U")

# width of the band used for inexact metric values
PRECISION_SCALE = 10**12


def parse_rational(text: str) -> Fraction:
    """Parse "num/den" or plain integer strings into a Fraction."""
    if not isinstance(text, str):
        raise SchemaError(f"rational must be a string, got {type(text).__name__}", value=repr(text))
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"cannot parse rational {text!r}", value=text) from exc


def format_rational(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def parse_decimal(text: str) -> Fraction:
    """Parse a finite decimal string ("1.5", "-0.25", "3") into a Fraction."""
    if not isinstance(text, str):
        raise SchemaError(f"coordinate must be a decimal string, got {type(text).__name__}", value=repr(text))
    s = text.strip()
    neg = s.startswith("-")
    if neg or s.startswith("+"):
        s = s[1:]
    if not s or s.count(".") > 1 or not s.replace(".", "").isdigit():
        raise SchemaError(f"cannot parse decimal {text!r}", value=text)
    if "." in s:
        whole, frac = s.split(".")
        den = 10 ** len(frac)
        num = int(whole or "0") * den + int(frac or "0")
    else:
        num, den = int(s), 1
    value = Fraction(num, den)
    return -value if neg else value


def format_decimal(value: Fraction) -> str:
    """Render a Fraction whose denominator is of the form 2^a 5^b as a minimal
    decimal string. Raises InexactValue otherwise."""
    den = value.denominator
    a = b = 0
    while den % 2 == 0:
        den //= 2
        a += 1
    while den % 5 == 0:
        den //= 5
        b += 1
    if den != 1:
        raise InexactValue(
            "value has no finite decimal representation", value=format_rational(value)
        )
    k = max(a, b)
    scaled = value.numerator * 10**k // value.denominator
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(k + 1, "0")
    if k == 0:
        return sign + digits
    whole, frac = digits[:-k], digits[-k:]
    frac = frac.rstrip("0")
    return sign + whole + ("." + frac if frac else "")


def iroot(n: int, k: int) -> int:
    """Floor of the integer k-th root of n >= 0."""
    if n < 0:
        raise ValueError("iroot of negative number")
    if n == 0:
        return 0
    if k == 1:
        return n
    if k == 2:
        return math.isqrt(n)
    # Newton iteration from a bit-length seed; safe for arbitrarily large n
    x = 1 << (n.bit_length() // k + 1)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


@dataclass(frozen=True)
class Interval:
    """Directed-rounding enclosure of an irrational nonnegative value."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("empty interval")


MetricValue = Union[Fraction, Interval]


def root_value(q: Fraction, k: int) -> MetricValue:
    """k-th root of a nonnegative rational, exact when the result is rational,
    otherwise an Interval of width at most 1/PRECISION_SCALE."""
    if q < 0:
        raise ValueError("root of negative value")
    if q == 0:
        return Fraction(0)
    rn = iroot(q.numerator, k)
    rd = iroot(q.denominator, k)
    if rn**k == q.numerator and rd**k == q.denominator:
        return Fraction(rn, rd)
    # floor k-th root of q * scale^k gives a lower bound at resolution 1/scale
    scaled = q.numerator * PRECISION_SCALE**k
    r = iroot(scaled // q.denominator, k)
    lo = Fraction(r, PRECISION_SCALE)
    hi = Fraction(r + 1, PRECISION_SCALE)
    return Interval(lo, hi)


def mv_bounds(v: MetricValue) -> tuple[Fraction, Fraction]:
    if isinstance(v, Interval):
        return v.lo, v.hi
    return v, v


def mv_add(a: MetricValue, b: MetricValue) -> MetricValue:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    alo, ahi = mv_bounds(a)
    blo, bhi = mv_bounds(b)
    return Interval(alo + blo, ahi + bhi)


def mv_pow(v: MetricValue, num: int, den: int = 1) -> MetricValue:
    """v ** (num/den) for nonnegative v with positive rational exponent."""
    if isinstance(v, Fraction):
        base: MetricValue = v**num if den == 1 else root_value(v**num, den)
        return base
    lo, hi = mv_bounds(v)
    plo = lo**num if den == 1 else mv_bounds(root_value(lo**num, den))[0]
    phi = hi**num if den == 1 else mv_bounds(root_value(hi**num, den))[1]
    return Interval(plo, phi)


def mv_max(values: Iterable[MetricValue]) -> MetricValue:
    best: MetricValue = Fraction(0)
    for v in values:
        if mv_le(v, best, context="max"):
            continue
        best = v
    return best


def mv_le(a: MetricValue, b: MetricValue, context: str = "comparison") -> bool:
    """Decide a <= b, raising PrecisionBand when the enclosures overlap."""
    alo, ahi = mv_bounds(a)
    blo, bhi = mv_bounds(b)
    if ahi <= blo:
        return True
    if bhi < alo:
        return False
    if alo == ahi and blo == bhi:
        return alo <= blo
    raise PrecisionBand(
        f"{context}: intervals [{alo},{ahi}] and [{blo},{bhi}] overlap within the precision band"
    )


def mv_exact(v: MetricValue, context: str = "value") -> Fraction:
    if isinstance(v, Interval):
        raise InexactValue(
            f"{context} is not exactly representable",
            lo=format_rational(v.lo),
            hi=format_rational(v.hi),
        )
    return v


def ordered_parallel_map(fn: Callable[[T], U], items: Sequence[T], threads: int = 1) -> list[U]:
    """Apply fn to items, optionally on a thread pool. Results keep the input
    order, so downstream aggregation is deterministic for any thread count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
