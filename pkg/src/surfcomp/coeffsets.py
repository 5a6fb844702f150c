"""Arithmetic of coefficient sets: sums below 1, hyperstandard sets, and
the DCC-to-finite projection.

Infinite sets enter only through generator tags with explicit truncation;
every operation here is exact on finite data.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .exact import FormalLike, FormalReal, as_formal


class EmptyGamma(ValueError):
    pass


@dataclass(frozen=True)
class CoeffSet:
    """Sorted, deduplicated values in [0, 1]."""

    values: tuple[FormalReal, ...]

    @staticmethod
    def of(values: Iterable[FormalLike]) -> "CoeffSet":
        vals = sorted({as_formal(v) for v in values})
        for v in vals:
            if v < 0 or v > 1:
                raise ValueError(f"coefficient {v} outside [0, 1]")
        return CoeffSet(tuple(vals))

    @staticmethod
    def standard(max_n: int, include_one: bool = True) -> "CoeffSet":
        """Truncated standard set {1 - 1/n : n <= max_n} (plus 1)."""
        vals = [Fraction(n - 1, n) for n in range(1, max_n + 1)]
        if include_one:
            vals.append(Fraction(1))
        return CoeffSet.of(vals)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __contains__(self, item):
        return as_formal(item) in set(self.values)

    def fractions(self) -> list[Fraction]:
        return [v.as_fraction() for v in self.values]

    def min_positive(self) -> Optional[FormalReal]:
        for v in self.values:
            if v > 0:
                return v
        return None


def gamma_plus(gamma: CoeffSet, max_terms: int) -> CoeffSet:
    """{0} plus all sums of at most max_terms elements of gamma that are <= 1.

    Stabilizes once max_terms >= ceil(1 / min positive element); sums are
    built in non-decreasing element order to avoid duplicate multisets.
    """
    elements = [v for v in gamma.values if v > 0]
    out = {as_formal(0)}
    if 0 in set(gamma.values):
        pass
    frontier = [(as_formal(0), 0)]
    for _ in range(max_terms):
        new = []
        for total, start in frontier:
            for j in range(start, len(elements)):
                t = total + elements[j]
                if t <= 1:
                    if t not in out:
                        out.add(t)
                        new.append((t, j))
                else:
                    break  # elements are sorted; larger ones overflow too
        if not new:
            break
        frontier = new
    return CoeffSet(tuple(sorted(out)))


@dataclass(frozen=True)
class DElement:
    """Element of the hyperstandard set with its provenance (m, f)."""

    value: FormalReal
    m: int
    f: FormalReal


def d_of_with_provenance(
    gamma: CoeffSet, max_m: int, max_terms: int
) -> list[DElement]:
    plus = gamma_plus(gamma, max_terms)
    seen: dict[FormalReal, DElement] = {}
    for m in range(1, max_m + 1):
        for f in plus:
            a = (Fraction(m - 1) + f) / Fraction(m)
            if a <= 1 and a not in seen:
                seen[a] = DElement(a, m, f)
    return sorted(seen.values(), key=lambda e: e.value)


def d_of(gamma: CoeffSet, max_m: int, max_terms: int) -> CoeffSet:
    """Truncated hyperstandard set {(m - 1 + f)/m <= 1 : m <= max_m, f in gamma_plus}."""
    return CoeffSet(tuple(e.value for e in d_of_with_provenance(gamma, max_m, max_terms)))


def _restrict_to_denominator(values: Iterable[FormalReal], bound: int) -> set[Fraction]:
    out = set()
    for v in values:
        q = v.as_fraction()
        if q.denominator <= bound:
            out.add(q)
    return out


@dataclass(frozen=True)
class DDCheck:
    holds: bool
    counterexample: Optional[Fraction]
    truncation_m: int
    truncation_terms: int


def check_dd_identity(gamma: CoeffSet, bound: int) -> DDCheck:
    """Empirical D(D(gamma)) = D(gamma) + {1}, restricted to denominators <= bound.

    Truncation parameters start at the structural minimum and are doubled
    until both restricted sides stabilize, so the comparison below the
    bound is complete.
    """
    for v in gamma:
        if not v.is_rational():
            raise ValueError("identity check needs rational gamma")
    min_pos = gamma.min_positive()
    base_terms = 1
    if min_pos is not None:
        q = min_pos.as_fraction()
        base_terms = int(1 / q) + 1
    max_m, terms = max(2 * bound, 4), base_terms

    def both_sides(mm: int, tt: int):
        d1 = d_of(gamma, mm, tt)
        lhs_terms = max(tt, _terms_for(d1))
        d2 = d_of(d1, mm, lhs_terms)
        lhs = _restrict_to_denominator(d2, bound)
        rhs = _restrict_to_denominator(d1, bound) | {Fraction(1)}
        return lhs, rhs

    lhs, rhs = both_sides(max_m, terms)
    while True:
        lhs2, rhs2 = both_sides(2 * max_m, terms + 2)
        if lhs2 == lhs and rhs2 == rhs:
            break
        lhs, rhs = lhs2, rhs2
        max_m, terms = 2 * max_m, terms + 2
    if lhs == rhs:
        return DDCheck(True, None, max_m, terms)
    diff = sorted(lhs.symmetric_difference(rhs))
    return DDCheck(False, diff[0], max_m, terms)


def _terms_for(cs: CoeffSet) -> int:
    mp = cs.min_positive()
    if mp is None:
        return 1
    return int(1 / mp.as_fraction()) + 1


@dataclass(frozen=True)
class Projection:
    """The bucketed projection g of a finite set onto a finite target."""

    mapping: tuple[tuple[FormalReal, FormalReal], ...]
    alpha: Fraction
    buckets: int

    def __call__(self, gamma_value: FormalLike) -> FormalReal:
        v = as_formal(gamma_value)
        for k, out in self.mapping:
            if k == v:
                return out
        raise KeyError(f"{gamma_value} not in the projected set")

    def image(self) -> CoeffSet:
        return CoeffSet(tuple(sorted({out for _, out in self.mapping})))


def projection_g(
    gamma: CoeffSet, gamma2: CoeffSet, alpha: Fraction
) -> Projection:
    """The DCC-to-finite projection.

    With N = ceil(M / alpha) buckets (k/N, (k+1)/N], f(c) is the least
    element of gamma2 above c and g(c) the largest element of c's bucket
    below f(c); above max gamma2 the bucket maximum is used.  The three
    defining properties (c <= g(c) <= c + alpha, monotone, compatible
    with gamma2) are re-verified before returning.
    """
    alpha = Fraction(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if len(gamma) == 0:
        raise EmptyGamma("gamma is empty")
    big_m = _upper_int(gamma)
    n_buckets = _ceil_div(big_m, alpha)

    # bucket k covers ((k/N) M, ((k+1)/N) M], with k = 0 closed at the left
    def bucket_index(v: FormalReal) -> int:
        lo, hi = 0, n_buckets - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if v <= Fraction(mid + 1, n_buckets) * big_m:
                hi = mid
            else:
                lo = mid + 1
        return lo

    max_g2 = max(gamma2.values) if len(gamma2) else None
    mapping = []
    for v in gamma:
        members = [
            u for u in gamma
            if bucket_index(u) == bucket_index(v)
        ]
        if max_g2 is None or v > max_g2:
            out = max(members)
        else:
            f = min(u for u in gamma2 if u >= v)
            out = max(u for u in members if u <= f)
        mapping.append((v, out))
    proj = Projection(tuple(mapping), alpha, n_buckets)
    _verify_projection(proj, gamma, gamma2, alpha)
    return proj


def _upper_int(gamma: CoeffSet) -> int:
    top = max(gamma.values)
    f = top.as_fraction() if top.is_rational() else None
    if f is not None:
        return max(1, -(-f.numerator // f.denominator))
    return 2


def _ceil_div(m: int, alpha: Fraction) -> int:
    q = Fraction(m) / alpha
    return -(-q.numerator // q.denominator)


def _verify_projection(proj: Projection, gamma: CoeffSet, gamma2: CoeffSet, alpha: Fraction):
    pairs = list(proj.mapping)
    for v, out in pairs:
        if not (v <= out <= v + alpha):
            raise AssertionError(f"projection bound fails at {v}")
        if proj(out) != out:
            raise AssertionError("projection is not idempotent on its image")
    for (v1, o1), (v2, o2) in itertools.product(pairs, pairs):
        if v1 <= v2 and not o1 <= o2:
            raise AssertionError("projection is not monotone")
    for beta in gamma2:
        for v, out in pairs:
            if beta >= v and not beta >= out:
                raise AssertionError("projection violates the target-compatibility bound")
