"""Integer-cent money arithmetic.

All balances in the simulator are integer cents so that conservation can be
checked exactly, with no float drift. Fractional rates (tax rates, interest,
propensities) are quantized to parts-per-million before being applied, which
keeps every money flow an exact integer.
"""

PPM = 1_000_000


def frac(amount: int, fraction: float) -> int:
    """Integer share of ``amount`` at the given fractional rate.

    The rate is quantized to parts-per-million and the result floored, so
    frac(a, f) + (a - frac(a, f)) == a always holds exactly.
    """
    if amount < 0:
        raise ValueError("amount must be non-negative")
    ppm = round(fraction * PPM)
    if ppm < 0:
        raise ValueError("fraction must be non-negative")
    return amount * ppm // PPM


def scale(amount: int, multiplier: float) -> int:
    """Scale a money amount by a multiplier >= 0, floored to whole cents."""
    if multiplier < 0:
        raise ValueError("multiplier must be non-negative")
    return amount * round(multiplier * PPM) // PPM
