"""Exact arithmetic over Q extended by a declared irrational basis.

Rational numbers are plain ``fractions.Fraction``.  A :class:`FormalReal`
is an element of Q + sum Q*r_i for a finite list of basis irrationals
r_1, ..., r_c that the caller declares Q-linearly independent (together
with r_0 = 1).  Equality is coordinate equality; strict comparison is
decided by refining interval enclosures built from the decimal witnesses
attached to the basis.  Witnesses are never trusted for equality, only
for separating values that differ as formal coordinates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Rational = Fraction

RationalLike = Union[Fraction, int]

#: Interval refinement schedule (significant digits of the witnesses).
REFINEMENT_DIGITS = (50, 100, 200, 400)


class WitnessTooCoarse(Exception):
    """Interval refinement exhausted without separating unequal values."""


class BasisMismatch(ValueError):
    """Two FormalReals over incompatible bases were combined."""


class Ordering(Enum):
    LT = -1
    EQ = 0
    GT = 1


_DECIMAL_RE = re.compile(r"^[+-]?(\d+)(\.(\d+))?$")


def _parse_decimal(text: str) -> tuple[Fraction, Fraction, int]:
    """Parse a decimal witness string.

    Returns (value, ulp, significant_digits); the true number is asserted
    to lie in [value - ulp, value + ulp].
    """
    m = _DECIMAL_RE.match(text.strip())
    if m is None:
        raise ValueError(f"not a decimal literal: {text!r}")
    frac_digits = len(m.group(3) or "")
    value = Fraction(text)
    ulp = Fraction(1, 10**frac_digits)
    sig = len((m.group(1) + (m.group(3) or "")).lstrip("0"))
    return value, ulp, sig


def _truncate(value: Fraction, ulp: Fraction, digits: int) -> tuple[Fraction, Fraction]:
    """Widen a witness interval to roughly ``digits`` significant digits."""
    if value == 0:
        return value, max(ulp, Fraction(1, 10**digits))
    scale = Fraction(1, 10**digits) * abs(value)
    return value, max(ulp, scale)


@dataclass(frozen=True)
class Basis:
    """Declared Q-linearly independent irrationals with decimal witnesses.

    ``names`` orders the irrational part; ``witnesses[name]`` is a decimal
    string with at least 30 significant digits.  r_0 = 1 is implicit.
    """

    names: tuple[str, ...]
    witnesses: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) != len(self.witnesses):
            raise ValueError("names and witnesses must align")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate basis names")
        for name, w in zip(self.names, self.witnesses):
            _, _, sig = _parse_decimal(w)
            if sig < 30:
                raise ValueError(f"witness for {name} has only {sig} significant digits")

    @staticmethod
    def of(**witnesses: str) -> "Basis":
        names = tuple(sorted(witnesses))
        return Basis(names, tuple(witnesses[n] for n in names))

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def witness_interval(self, i: int, digits: int) -> tuple[Fraction, Fraction]:
        value, ulp, _ = _parse_decimal(self.witnesses[i])
        return _truncate(value, ulp, digits)


EMPTY_BASIS = Basis((), ())


def _coerce_coords(basis: Basis, value: "FormalReal | RationalLike") -> tuple[Fraction, ...]:
    if isinstance(value, FormalReal):
        if value.basis != basis and value.basis.size > 0:
            if basis.size == 0:
                if not value.is_rational():
                    raise BasisMismatch("irrational value over a different basis")
                return (value.coords[0],) + (Fraction(0),) * basis.size
            raise BasisMismatch(f"bases differ: {value.basis.names} vs {basis.names}")
        if value.basis.size == 0 and basis.size > 0:
            return (value.coords[0],) + (Fraction(0),) * basis.size
        return value.coords
    return (Fraction(value),) + (Fraction(0),) * basis.size


class FormalReal:
    """q_0 + sum q_i * r_i with exact rational coordinates."""

    __slots__ = ("basis", "coords")

    def __init__(self, basis: Basis, coords: Sequence[RationalLike]):
        if len(coords) != basis.size + 1:
            raise ValueError("coordinate vector must have length c+1")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "coords", tuple(Fraction(c) for c in coords))

    def __setattr__(self, *a):  # immutable
        raise AttributeError("FormalReal is immutable")

    # -- constructors -------------------------------------------------
    @staticmethod
    def rational(value: RationalLike, basis: Basis = EMPTY_BASIS) -> "FormalReal":
        return FormalReal(basis, _coerce_coords(basis, Fraction(value)))

    @staticmethod
    def generator(basis: Basis, name: str) -> "FormalReal":
        coords = [Fraction(0)] * (basis.size + 1)
        coords[basis.index(name) + 1] = Fraction(1)
        return FormalReal(basis, coords)

    # -- predicates ----------------------------------------------------
    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coords[1:])

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.coords[0]

    def is_integral(self) -> bool:
        return self.is_rational() and self.coords[0].denominator == 1

    # -- arithmetic ----------------------------------------------------
    def _binop(self, other, sign: int) -> "FormalReal":
        if isinstance(other, FormalReal) and other.basis.size > self.basis.size:
            coords = _coerce_coords(other.basis, self)
            oc = other.coords
            return FormalReal(other.basis, [a + sign * b for a, b in zip(coords, oc)])
        oc = _coerce_coords(self.basis, other)
        return FormalReal(self.basis, [a + sign * b for a, b in zip(self.coords, oc)])

    def __add__(self, other):
        return self._binop(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, -1)

    def __rsub__(self, other):
        return (-self)._binop(other, 1)

    def __neg__(self):
        return FormalReal(self.basis, [-c for c in self.coords])

    def __mul__(self, other):
        if isinstance(other, FormalReal):
            if other.is_rational():
                other = other.coords[0]
            elif self.is_rational():
                return other * self.coords[0]
            else:
                raise ValueError("product of two irrational FormalReals leaves the span")
        q = Fraction(other)
        return FormalReal(self.basis, [c * q for c in self.coords])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, FormalReal):
            other = other.as_fraction()
        return self * (1 / Fraction(other))

    # -- comparison ----------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.coords[0] == other
        if not isinstance(other, FormalReal):
            return NotImplemented
        if self.is_rational() and other.is_rational():
            return self.coords[0] == other.coords[0]
        try:
            oc = _coerce_coords(self.basis, other)
        except BasisMismatch:
            return False
        if len(oc) != len(self.coords):
            return self._binop(other, -1) == 0
        return self.coords == oc

    def __hash__(self):
        if self.is_rational():
            return hash(self.coords[0])
        return hash((self.basis.names, self.coords))

    def interval(self, digits: int) -> tuple[Fraction, Fraction]:
        """Enclosure [lo, hi] of the true value at the given precision."""
        lo = hi = self.coords[0]
        for i, q in enumerate(self.coords[1:]):
            if q == 0:
                continue
            w, u = self.basis.witness_interval(i, digits)
            if q > 0:
                lo += q * (w - u)
                hi += q * (w + u)
            else:
                lo += q * (w + u)
                hi += q * (w - u)
        return lo, hi

    def sign(self) -> int:
        """Exact sign, by interval refinement (0 iff coordinates vanish)."""
        if all(c == 0 for c in self.coords):
            return 0
        if self.is_rational():
            q = self.coords[0]
            return -1 if q < 0 else 1
        for digits in REFINEMENT_DIGITS:
            lo, hi = self.interval(digits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
        raise WitnessTooCoarse(
            f"cannot separate {self} from 0 at {REFINEMENT_DIGITS[-1]} digits; "
            "witness inconsistent with declared independence?"
        )

    def _cmp(self, other) -> int:
        return self._binop(other, -1).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __float__(self):
        lo, hi = self.interval(50)
        return float((lo + hi) / 2)

    def approx(self, places: int = 12) -> str:
        lo, hi = self.interval(max(30, places + 5))
        mid = (lo + hi) / 2
        scaled = mid * 10**places
        n = scaled.numerator // scaled.denominator
        sign = "-" if n < 0 else ""
        n = abs(n)
        whole, frac = divmod(n, 10**places)
        return f"{sign}{whole}.{frac:0{places}d}"

    # -- printing --------------------------------------------------------
    def __str__(self):
        parts = []
        if self.coords[0] != 0 or self.is_rational():
            parts.append(str(self.coords[0]))
        for name, q in zip(self.basis.names, self.coords[1:]):
            if q == 0:
                continue
            term = f"{abs(q)}*{name}"
            if not parts:
                parts.append(term if q > 0 else f"-{term}")
            else:
                parts.append(f"+ {term}" if q > 0 else f"- {term}")
        return " ".join(parts) if parts else "0"

    def __repr__(self):
        return f"FormalReal({self})"


FormalLike = Union[FormalReal, Fraction, int]


def as_formal(value: FormalLike, basis: Basis = EMPTY_BASIS) -> FormalReal:
    if isinstance(value, FormalReal):
        return value
    return FormalReal.rational(value, basis)


def compare(x: FormalLike, y: FormalLike) -> Ordering:
    """Total order on FormalReals over a common basis."""
    s = as_formal(x)._cmp(y)
    return Ordering(0 if s == 0 else (1 if s > 0 else -1))


def fmin(values: Iterable[FormalLike]) -> FormalReal:
    it = iter(values)
    best = as_formal(next(it))
    for v in it:
        v = as_formal(v)
        if v < best:
            best = v
    return best


def fmax(values: Iterable[FormalLike]) -> FormalReal:
    it = iter(values)
    best = as_formal(next(it))
    for v in it:
        v = as_formal(v)
        if v > best:
            best = v
    return best


def lcm_denominators(xs: Sequence[RationalLike]) -> int:
    """Least positive I with I*x integral for every x in the list."""
    if not xs:
        raise ValueError("empty list")
    out = 1
    for x in xs:
        d = Fraction(x).denominator
        g = _gcd(out, d)
        out = out // g * d
    return out


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def simplest_in_interval(lo: Fraction, hi: Fraction) -> Fraction:
    """The smallest-denominator rational strictly inside (lo, hi)."""
    lo, hi = Fraction(lo), Fraction(hi)
    if not lo < hi:
        raise ValueError("empty interval")
    k = lo.numerator // lo.denominator
    if k + 1 < hi:
        return Fraction(k + 1)
    # (lo, hi) sits inside [k, k+1]: x = k + 1/y, reciprocate the tail
    a = 1 / (hi - k)
    if lo == k:
        y = Fraction(a.numerator // a.denominator + 1)
    else:
        y = simplest_in_interval(a, 1 / (lo - k))
    return k + 1 / y


def rational_approx(x: FormalLike, tol: Fraction) -> Fraction:
    """A rational q with |x - q| < tol, simplest available, from witnesses."""
    x = as_formal(x)
    if x.is_rational():
        return x.coords[0]
    tol = Fraction(tol)
    for digits in REFINEMENT_DIGITS:
        lo, hi = x.interval(digits)
        if hi - lo < tol:
            return simplest_in_interval(hi - tol, lo + tol)
    raise WitnessTooCoarse(f"cannot approximate {x} within {tol}")


# Widely used witnesses (60 significant digits) for tests and presets.
SQRT2_60 = "1.41421356237309504880168872420969807856967187537694480731767"
SQRT3_60 = "1.73205080756887729352744634150587236694280525381038062805581"
SQRT5_60 = "2.23606797749978969640917366873127623544061835961152572427090"
