"""Configurable fixed-point arithmetic shared by all neuron models.

Values are carried as plain integers (or int64 numpy arrays) holding
``value * 2**frac_bits``. Overflow never wraps: callers pass a
:class:`SaturationCounter` and out-of-range results are clamped and counted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FixedPointFormat:
    """Bit layout of a fixed-point register."""

    total_bits: int = 32
    frac_bits: int = 16
    signed: bool = True

    def __post_init__(self):
        if not (0 <= self.frac_bits < self.total_bits <= 64):
            raise ValueError(
                f"need 0 <= frac_bits < total_bits <= 64, got "
                f"{self.frac_bits}/{self.total_bits}"
            )
        object.__setattr__(self, "scale", 1 << self.frac_bits)
        if self.signed:
            object.__setattr__(self, "raw_max", (1 << (self.total_bits - 1)) - 1)
            object.__setattr__(self, "raw_min", -(1 << (self.total_bits - 1)))
        else:
            object.__setattr__(self, "raw_max", (1 << self.total_bits) - 1)
            object.__setattr__(self, "raw_min", 0)

    @property
    def resolution(self) -> float:
        return 1.0 / self.scale


DEFAULT_FORMAT = FixedPointFormat(total_bits=32, frac_bits=16, signed=True)


class SaturationCounter:
    """Mutable tally of clamp events; queryable, never silent."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def add(self, n: int):
        self.count += int(n)

    def __repr__(self):
        return f"SaturationCounter(count={self.count})"


def to_fixed(value, fmt: FixedPointFormat = DEFAULT_FORMAT, counter: SaturationCounter | None = None):
    """Round a real value (or array) to raw fixed-point representation."""
    raw = np.rint(np.asarray(value, dtype=np.float64) * fmt.scale).astype(np.int64)
    raw = saturate(raw, fmt, counter)
    if np.ndim(value) == 0:
        return int(raw)
    return raw


def from_fixed(raw, fmt: FixedPointFormat = DEFAULT_FORMAT):
    """Raw representation back to float."""
    if np.ndim(raw) == 0:
        return float(raw) / fmt.scale
    return np.asarray(raw, dtype=np.float64) / fmt.scale


def saturate(raw, fmt: FixedPointFormat, counter: SaturationCounter | None = None):
    """Clamp raw values into the format's range, counting every clamp."""
    if np.ndim(raw) == 0:
        raw = int(raw)
        if raw > fmt.raw_max:
            if counter is not None:
                counter.add(1)
            return fmt.raw_max
        if raw < fmt.raw_min:
            if counter is not None:
                counter.add(1)
            return fmt.raw_min
        return raw
    if raw.size == 0:
        return raw
    hi = int(raw.max())
    lo = int(raw.min())
    if hi <= fmt.raw_max and lo >= fmt.raw_min:
        return raw
    if counter is not None:
        counter.add(int(((raw > fmt.raw_max) | (raw < fmt.raw_min)).sum()))
    return np.clip(raw, fmt.raw_min, fmt.raw_max)


def fixed_mul(a, b, fmt: FixedPointFormat = DEFAULT_FORMAT, counter: SaturationCounter | None = None):
    """Fixed-point product: (a*b) >> frac_bits, floor semantics, then clamp.

    Array operands require total_bits <= 32 so the intermediate product
    fits in int64 without wrapping; scalar ints are exact at any width.
    """
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        prod = (int(a) * int(b)) >> fmt.frac_bits
        return saturate(prod, fmt, counter)
    if fmt.total_bits > 32:
        raise ValueError("array fixed_mul supports total_bits <= 32 only")
    prod = np.asarray(a, dtype=np.int64) * np.asarray(b, dtype=np.int64)
    prod >>= fmt.frac_bits
    return saturate(prod, fmt, counter)
