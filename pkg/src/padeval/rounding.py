"""Decimal rounding used for every human-readable number."""

from decimal import ROUND_HALF_EVEN, ROUND_HALF_UP, Decimal

# Binary representation noise (e.g. 1.6830499999999997 for 1.68305) is
# removed at this many decimals before the final half-up rounding.
_GUARD = Decimal("1e-10")


def round_half_up(value: float, places: int = 4) -> str:
    d = Decimal(float(value)).quantize(_GUARD, rounding=ROUND_HALF_EVEN)
    out = d.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
    if out.is_zero():
        out = abs(out)
    return f"{out:f}"


def percent(rate: float, places: int = 4) -> str:
    """``rate`` as a percentage string, e.g. 0.0133865 -> '1.3387'."""
    return round_half_up(float(rate) * 100.0, places)
