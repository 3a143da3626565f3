"""Exact USD arithmetic on :class:`decimal.Decimal`.

Every amount that leaves this package is a ``Decimal`` produced under
:data:`EXACT`, which raises instead of rounding.
"""

from __future__ import annotations

from decimal import Context, Decimal, Inexact, InvalidOperation, Rounded
from typing import Iterable

# Enough headroom for any mantissa we accept (see normalize.MAX_MANTISSA_DIGITS)
# plus sums over tens of millions of rows.
EXACT = Context(prec=1200, Emax=999999, Emin=-999999, traps=[InvalidOperation, Inexact, Rounded])

ZERO = Decimal(0)


def canonical(value: Decimal) -> Decimal:
    """Strip trailing zeros so equal amounts share one representation."""
    return value.normalize(EXACT)


def exact_sum(values: Iterable[Decimal]) -> Decimal:
    total = ZERO
    for v in values:
        total = EXACT.add(total, v)
    return canonical(total)


def add(a: Decimal, b: Decimal) -> Decimal:
    return canonical(EXACT.add(a, b))


def format_usd(value: Decimal) -> str:
    """Plain positional rendering, never scientific notation.

    >>> format_usd(Decimal("1.15E+11"))
    '115000000000'
    >>> format_usd(Decimal("2.50"))
    '2.5'
    """
    return format(canonical(value), "f")


def parse_usd(text: str) -> Decimal:
    value = Decimal(text)
    if not value.is_finite():
        raise ValueError(f"not a finite amount: {text!r}")
    return canonical(value)
