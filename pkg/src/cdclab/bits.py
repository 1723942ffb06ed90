"""Fixed-length bit strings backed by Python integers.

The most significant bit of ``value`` is bit 0 of the string, so slicing
and concatenation behave like ordinary string operations on ``str(bits)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True, slots=True)
class Bits:
    value: int
    length: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError(f"negative bit length {self.length}")
        if not 0 <= self.value < (1 << self.length):
            raise ValueError(f"value does not fit in {self.length} bits")

    @classmethod
    def zeros(cls, length: int) -> Bits:
        return cls(0, length)

    @classmethod
    def from_bytes(cls, data: bytes, length: int) -> Bits:
        """Take the leading ``length`` bits of ``data``."""
        if len(data) * 8 < length:
            raise ValueError(f"need {length} bits, got {len(data) * 8}")
        value = int.from_bytes(data, "big") >> (len(data) * 8 - length)
        return cls(value, length)

    @classmethod
    def from_str(cls, text: str) -> Bits:
        if text and set(text) - {"0", "1"}:
            raise ValueError(f"not a bit string: {text!r}")
        return cls(int(text, 2) if text else 0, len(text))

    @classmethod
    def concat(cls, parts: Iterable[Bits]) -> Bits:
        value, length = 0, 0
        for part in parts:
            value = (value << part.length) | part.value
            length += part.length
        return cls(value, length)

    def __len__(self) -> int:
        return self.length

    def __str__(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    def __xor__(self, other: Bits) -> Bits:
        if self.length != other.length:
            raise ValueError(f"length mismatch: {self.length} vs {other.length}")
        return Bits(self.value ^ other.value, self.length)

    def slice(self, start: int, stop: int) -> Bits:
        if not 0 <= start <= stop <= self.length:
            raise IndexError(f"slice [{start}:{stop}) outside {self.length} bits")
        width = stop - start
        return Bits((self.value >> (self.length - stop)) & ((1 << width) - 1), width)

    def split(self, parts: int) -> list[Bits]:
        """Cut into ``parts`` contiguous pieces of equal length."""
        if parts < 1 or self.length % parts:
            raise ValueError(f"{self.length} bits do not split into {parts} equal parts")
        step = self.length // parts
        return [self.slice(i * step, (i + 1) * step) for i in range(parts)]

    def flip(self, index: int) -> Bits:
        if not 0 <= index < self.length:
            raise IndexError(index)
        return Bits(self.value ^ (1 << (self.length - 1 - index)), self.length)

    def to_bytes(self) -> bytes:
        """Left-aligned big-endian bytes, zero-padded at the tail."""
        nbytes = (self.length + 7) // 8
        return (self.value << (nbytes * 8 - self.length)).to_bytes(nbytes, "big")
