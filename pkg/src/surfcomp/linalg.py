"""Exact rational linear algebra and affine forms in named parameters.

Log discrepancies of a fixed graph or cluster are affine functions of the
boundary coefficients.  We solve the defining linear systems once over
:class:`AffineForm` (rational constant plus rational multiples of named
parameters) and evaluate the forms at rational or formal-real coefficient
vectors afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .exact import FormalLike, FormalReal, as_formal


class SingularMatrix(ValueError):
    pass


@dataclass(frozen=True)
class AffineForm:
    """const + sum coeffs[name] * parameter(name), all rational."""

    const: Fraction = Fraction(0)
    coeffs: tuple[tuple[str, Fraction], ...] = ()

    @staticmethod
    def of(const=0, **coeffs) -> "AffineForm":
        return AffineForm(
            Fraction(const),
            tuple(sorted((k, Fraction(v)) for k, v in coeffs.items() if v != 0)),
        )

    @staticmethod
    def constant(value) -> "AffineForm":
        return AffineForm(Fraction(value), ())

    @staticmethod
    def parameter(name: str, scale=1) -> "AffineForm":
        return AffineForm(Fraction(0), ((name, Fraction(scale)),))

    def coeff(self, name: str) -> Fraction:
        for k, v in self.coeffs:
            if k == name:
                return v
        return Fraction(0)

    def _merge(self, other: "AffineForm", sign: int) -> "AffineForm":
        d = dict(self.coeffs)
        for k, v in other.coeffs:
            d[k] = d.get(k, Fraction(0)) + sign * v
        return AffineForm(
            self.const + sign * other.const,
            tuple(sorted((k, v) for k, v in d.items() if v != 0)),
        )

    def __add__(self, other):
        if not isinstance(other, AffineForm):
            other = AffineForm.constant(other)
        return self._merge(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, AffineForm):
            other = AffineForm.constant(other)
        return self._merge(other, -1)

    def __rsub__(self, other):
        return AffineForm.constant(other)._merge(self, -1)

    def __neg__(self):
        return AffineForm(-self.const, tuple((k, -v) for k, v in self.coeffs))

    def __mul__(self, scalar):
        q = Fraction(scalar)
        if q == 0:
            return AffineForm()
        return AffineForm(self.const * q, tuple((k, v * q) for k, v in self.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1 / Fraction(scalar))

    def is_constant(self) -> bool:
        return not self.coeffs

    def __call__(self, assignment: Mapping[str, FormalLike]) -> FormalReal:
        out = as_formal(self.const)
        for name, q in self.coeffs:
            out = out + q * as_formal(assignment[name])
        return out

    def eval_fraction(self, assignment: Mapping[str, Fraction]) -> Fraction:
        out = self.const
        for name, q in self.coeffs:
            out += q * Fraction(assignment[name])
        return out

    def __str__(self):
        parts = [str(self.const)] if (self.const != 0 or not self.coeffs) else []
        for name, q in self.coeffs:
            term = f"{abs(q)}*{name}"
            if not parts:
                parts.append(term if q > 0 else f"-{term}")
            else:
                parts.append(f"+ {term}" if q > 0 else f"- {term}")
        return " ".join(parts)


def solve_affine(
    matrix: Sequence[Sequence[Fraction]], rhs: Sequence[AffineForm]
) -> list[AffineForm]:
    """Solve M x = rhs exactly; rhs entries are affine forms."""
    n = len(matrix)
    m = [[Fraction(v) for v in row] for row in matrix]
    b = list(rhs)
    if any(len(row) != n for row in m) or len(b) != n:
        raise ValueError("shape mismatch")
    perm = list(range(n))
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise SingularMatrix("matrix is singular")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            b[col], b[piv] = b[piv], b[col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            f = m[r][col]
            if f == 0:
                continue
            f *= inv
            for c in range(col, n):
                if m[col][c] != 0:
                    m[r][c] -= f * m[col][c]
            b[r] = b[r] - f * b[col]
    x: list[AffineForm] = [AffineForm()] * n
    for r in range(n - 1, -1, -1):
        acc = b[r]
        for c in range(r + 1, n):
            if m[r][c] != 0:
                acc = acc - m[r][c] * x[c]
        x[r] = acc / m[r][r]
    return x


def determinant(matrix: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(matrix)
    if n == 0:
        return Fraction(1)
    m = [[Fraction(v) for v in row] for row in matrix]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            f = m[r][col]
            if f == 0:
                continue
            f *= inv
            for c in range(col, n):
                if m[col][c] != 0:
                    m[r][c] -= f * m[col][c]
    return det


def is_negative_definite(matrix: Sequence[Sequence[Fraction]]) -> bool:
    """Exact test for a symmetric matrix, via signs of elimination pivots."""
    n = len(matrix)
    m = [[Fraction(v) for v in row] for row in matrix]
    for col in range(n):
        pivot = m[col][col]
        if pivot >= 0:
            return False
        inv = 1 / pivot
        for r in range(col + 1, n):
            f = m[r][col]
            if f == 0:
                continue
            f *= inv
            for c in range(col, n):
                if m[col][c] != 0:
                    m[r][c] -= f * m[col][c]
    return True
