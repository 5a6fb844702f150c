"""Resolution dual graphs and their exact invariants.

A weighted graph encodes the exceptional curves E_i of a resolution:
vertex weight w_i = -E_i^2, simple edges for intersections, and marks for
the points where strict transforms of boundary branches hit the E_i.  Log
discrepancies are the unique solution of (sum a_i E_i) . E_k = -c_k with

    c_k = 2 - 2 p_a(E_k) - deg(k) - (B_Y . E_k),

solved exactly as affine forms in the branch coefficients.  The chain
arithmetic ((m, q) continued fractions, the alpha invariant, the two-term
closed form for long composed chains) follows the classical surface
classification.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .exact import (
    FormalLike,
    FormalReal,
    as_formal,
    fmin,
    lcm_denominators,
)
from .linalg import AffineForm, determinant, is_negative_definite, solve_affine


class GraphError(ValueError):
    pass


class NotNegativeDefinite(GraphError):
    pass


class NotAChain(GraphError):
    pass


class NotATree(GraphError):
    pass


class NotSNC(GraphError):
    pass


class WeightBelowTwo(GraphError):
    pass


class DegenerateMQ(GraphError):
    pass


class IrrationalCoefficient(GraphError):
    pass


class NotLC(GraphError):
    pass


@dataclass(frozen=True)
class Vertex:
    weight: int
    genus: int = 0

    def __post_init__(self):
        if self.weight < 1:
            raise GraphError(f"vertex weight must be >= 1, got {self.weight}")
        if self.genus < 0:
            raise GraphError(f"vertex genus must be >= 0, got {self.genus}")


@dataclass(frozen=True)
class MarkedPoint:
    """A boundary-branch point on E_host (or on the node E_host & E_host2).

    ``incidences`` lists (branch id, local intersection multiplicity).
    """

    host: int
    incidences: tuple[tuple[str, int], ...]
    host2: Optional[int] = None

    def __post_init__(self):
        if not self.incidences:
            raise GraphError("mark with no incident branch")
        for br, t in self.incidences:
            if t < 1:
                raise GraphError(f"incidence multiplicity must be >= 1, got {t}")

    @property
    def hosts(self) -> tuple[int, ...]:
        return (self.host,) if self.host2 is None else (self.host, self.host2)


@dataclass(frozen=True)
class Boundary:
    """Branch coefficients b_i; pair mode needs 0 <= b_i <= 1."""

    coeffs: tuple[tuple[str, FormalReal], ...]
    sub_pair: bool = False

    @staticmethod
    def of(mapping: Mapping[str, FormalLike] | None = None, sub_pair: bool = False, **kw) -> "Boundary":
        items = dict(mapping or {})
        items.update(kw)
        coeffs = tuple(sorted((k, as_formal(v)) for k, v in items.items()))
        b = Boundary(coeffs, sub_pair)
        b.validate()
        return b

    @staticmethod
    def zero() -> "Boundary":
        return Boundary((), False)

    def validate(self):
        for name, b in self.coeffs:
            if b > 1:
                raise GraphError(f"coefficient of {name} exceeds 1")
            if not self.sub_pair and b < 0:
                raise GraphError(f"coefficient of {name} is negative")

    def __getitem__(self, name: str) -> FormalReal:
        for k, v in self.coeffs:
            if k == name:
                return v
        return as_formal(0)

    def names(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.coeffs)

    def assignment(self, names: Iterable[str]) -> dict[str, FormalReal]:
        return {n: self[n] for n in names}


class DualGraph:
    """Weighted resolution graph with genus data and branch marks."""

    __slots__ = ("vertices", "edges", "marks")

    def __init__(
        self,
        vertices: Sequence[Vertex | int],
        edges: Iterable[tuple[int, int]] = (),
        marks: Iterable[MarkedPoint] = (),
    ):
        vs = tuple(v if isinstance(v, Vertex) else Vertex(int(v)) for v in vertices)
        n = len(vs)
        es = set()
        for a, b in edges:
            if a == b:
                raise GraphError(f"loop at vertex {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise GraphError(f"edge ({a},{b}) out of range")
            key = (min(a, b), max(a, b))
            if key in es:
                raise GraphError(f"duplicate edge {key}")
            es.add(key)
        ms = tuple(marks)
        for mk in ms:
            for h in mk.hosts:
                if not 0 <= h < n:
                    raise GraphError(f"mark host {h} out of range")
            if mk.host2 is not None and (min(mk.hosts), max(mk.hosts)) not in es:
                raise GraphError("mark at a node requires the corresponding edge")
        object.__setattr__(self, "vertices", vs)
        object.__setattr__(self, "edges", frozenset(es))
        object.__setattr__(self, "marks", ms)

    def __setattr__(self, *a):
        raise AttributeError("DualGraph is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, DualGraph)
            and self.vertices == other.vertices
            and self.edges == other.edges
            and self.marks == other.marks
        )

    def __hash__(self):
        return hash((self.vertices, self.edges, self.marks))

    def __repr__(self):
        return (
            f"DualGraph(weights={[v.weight for v in self.vertices]}, "
            f"edges={sorted(self.edges)}, marks={len(self.marks)})"
        )

    # -- structure -----------------------------------------------------
    @property
    def size(self) -> int:
        return len(self.vertices)

    def degree(self, k: int) -> int:
        return sum(1 for e in self.edges if k in e)

    def neighbors(self, k: int) -> list[int]:
        return sorted(a if b == k else b for a, b in self.edges if k in (a, b))

    def branch_names(self) -> tuple[str, ...]:
        names = {br for mk in self.marks for br, _ in mk.incidences}
        return tuple(sorted(names))

    def branch_weight(self, k: int) -> AffineForm:
        """(B_Y . E_k) as an affine form in the branch coefficients."""
        form = AffineForm()
        for mk in self.marks:
            for h in mk.hosts:
                if h == k:
                    for br, t in mk.incidences:
                        form = form + AffineForm.parameter(br, t)
        return form

    def intersection_matrix(self) -> list[list[Fraction]]:
        n = self.size
        m = [[Fraction(0)] * n for _ in range(n)]
        for i, v in enumerate(self.vertices):
            m[i][i] = Fraction(-v.weight)
        for a, b in self.edges:
            m[a][b] = m[b][a] = Fraction(1)
        return m

    def is_connected(self) -> bool:
        if self.size == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            k = stack.pop()
            for nb in self.neighbors(k):
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == self.size

    def is_tree(self) -> bool:
        return self.is_connected() and len(self.edges) == self.size - 1

    def is_chain_in_order(self) -> bool:
        """True iff the edge set is exactly {(i, i+1)}."""
        want = {(i, i + 1) for i in range(self.size - 1)}
        return self.edges == frozenset(want)

    def subgraph(self, keep: Sequence[int]) -> "DualGraph":
        keep = sorted(keep)
        index = {old: new for new, old in enumerate(keep)}
        edges = [
            (index[a], index[b]) for a, b in self.edges if a in index and b in index
        ]
        marks = []
        for mk in self.marks:
            if all(h in index for h in mk.hosts):
                marks.append(
                    MarkedPoint(
                        index[mk.host],
                        mk.incidences,
                        None if mk.host2 is None else index[mk.host2],
                    )
                )
        return DualGraph([self.vertices[k] for k in keep], edges, marks)

    # -- invariants ------------------------------------------------------
    def det_and_negdef(self) -> tuple[int, bool]:
        """(Delta, negative-definite?) of the intersection matrix."""
        if self.size == 0:
            return 1, True
        m = self.intersection_matrix()
        d = determinant(m)
        delta = abs(d)
        assert delta.denominator == 1
        return int(delta), is_negative_definite(m)

    def delta(self) -> int:
        return self.det_and_negdef()[0]

    def require_negdef(self):
        if not self.det_and_negdef()[1]:
            raise NotNegativeDefinite("intersection matrix is not negative definite")

    def c_forms(self) -> list[AffineForm]:
        return [
            AffineForm.constant(2 - 2 * v.genus - self.degree(k)) - self.branch_weight(k)
            for k, v in enumerate(self.vertices)
        ]

    def log_discrepancy_forms(self) -> list[AffineForm]:
        """a_k as affine forms in the branch coefficients (exact solve)."""
        self.require_negdef()
        if self.size == 0:
            return []
        rhs = [-c for c in self.c_forms()]
        return solve_affine(self.intersection_matrix(), rhs)

    def snc_certify(self):
        """Raise NotSNC unless marks encode transverse points on single curves."""
        for mk in self.marks:
            if mk.host2 is not None:
                raise NotSNC("boundary mark sits at a node")
            if len(mk.incidences) != 1:
                raise NotSNC("several branches through one point")
            (_, t), = mk.incidences
            if t != 1:
                raise NotSNC("non-transverse branch incidence")


# ---------------------------------------------------------------------------
# log discrepancies, pld, mld
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PldResult:
    value: Optional[FormalReal]  # None means +infinity (smooth point)
    argmin: Optional[int]
    lc: bool

    @property
    def infinite(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class Stratum:
    """A stratum of the snc model together with its affine value form."""

    kind: str  # "divisor" | "node" | "branch-point" | "free-point"
    where: tuple
    form: AffineForm

    def describe(self) -> str:
        if self.kind == "divisor":
            return f"E{self.where[0]}"
        if self.kind == "node":
            return f"E{self.where[0]} & E{self.where[1]}"
        if self.kind == "branch-point":
            return f"E{self.where[0]} & branch {self.where[1]}"
        return f"free point on E{self.where[0]}"


@dataclass(frozen=True)
class MldResult:
    value: FormalReal
    witness: Stratum
    lc: bool
    forms: tuple[Stratum, ...]


def log_discrepancies(g: DualGraph, b: Boundary) -> list[FormalReal]:
    """The vector (a_k), by exact linear solve."""
    forms = g.log_discrepancy_forms()
    assignment = b.assignment(g.branch_names())
    return [f(assignment) for f in forms]


def cofactor_log_discrepancies(g: DualGraph, b: Boundary) -> list[FormalReal]:
    """Tree cross-check: a_j = sum_k Delta(DG - path(j,k)) c_k / Delta(DG)."""
    if not g.is_tree():
        raise NotATree("cofactor formula needs a tree")
    g.require_negdef()
    delta = g.delta()
    assignment = b.assignment(g.branch_names())
    cs = [f(assignment) for f in g.c_forms()]
    out = []
    for j in range(g.size):
        parents = _bfs_parents(g, j)
        total = as_formal(0)
        for k in range(g.size):
            path = _path_from_parents(parents, j, k)
            rest = [v for v in range(g.size) if v not in path]
            total = total + Fraction(g.subgraph(rest).delta()) * cs[k]
        out.append(total / Fraction(delta))
    return out


def _bfs_parents(g: DualGraph, root: int) -> dict[int, int]:
    parents = {root: root}
    queue = [root]
    while queue:
        k = queue.pop(0)
        for nb in g.neighbors(k):
            if nb not in parents:
                parents[nb] = k
                queue.append(nb)
    return parents


def _path_from_parents(parents: dict[int, int], root: int, k: int) -> set[int]:
    path = {k}
    while k != root:
        k = parents[k]
        path.add(k)
    return path


def pld(g: DualGraph, b: Boundary) -> PldResult:
    """min_k a_k; +infinity on the empty graph (smooth point)."""
    if g.size == 0:
        return PldResult(None, None, True)
    values = log_discrepancies(g, b)
    best, arg = values[0], 0
    for k, v in enumerate(values[1:], start=1):
        if v < best:
            best, arg = v, k
    lc = all(v >= 0 for v in values) and all(v <= 1 for _, v in b.coeffs)
    return PldResult(best, arg, lc)


def mld_strata(g: DualGraph, include_free: bool = True) -> list[Stratum]:
    """All strata of the snc model with their affine forms."""
    g.snc_certify()
    forms = g.log_discrepancy_forms()
    strata = [Stratum("divisor", (k,), forms[k]) for k in range(g.size)]
    for a, bb in sorted(g.edges):
        strata.append(Stratum("node", (a, bb), forms[a] + forms[bb]))
    for mk in g.marks:
        (br, _), = mk.incidences
        strata.append(
            Stratum(
                "branch-point",
                (mk.host, br),
                forms[mk.host] + 1 - AffineForm.parameter(br),
            )
        )
    if include_free:
        for k in range(g.size):
            strata.append(Stratum("free-point", (k,), forms[k] + 1))
    return strata


def mld_log_smooth(g: DualGraph, b: Boundary) -> MldResult:
    """Minimum over strata of the snc model, with the achieving stratum."""
    if g.size == 0:
        raise GraphError("mld needs a non-empty resolution graph")
    strata = mld_strata(g)
    assignment = b.assignment(g.branch_names())
    best = None
    witness = None
    for s in strata:
        v = s.form(assignment)
        if best is None or v < best:
            best, witness = v, s
    values = log_discrepancies(g, b)
    lc = all(v >= 0 for v in values) and all(v <= 1 for _, v in b.coeffs)
    return MldResult(best, witness, lc, tuple(strata))


# ---------------------------------------------------------------------------
# (m, q) chains, alpha, composed families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainMQ:
    m: int
    q: int

    def __post_init__(self):
        if self.m < 1:
            raise DegenerateMQ(f"m must be positive, got {self.m}")
        if self.m == 1:
            if self.q != 0:
                raise DegenerateMQ("q = 0 is forced for the empty chain (m = 1)")
        elif not 1 <= self.q < self.m:
            raise DegenerateMQ(f"need 1 <= q < m, got (m, q) = ({self.m}, {self.q})")
        elif _gcd(self.m, self.q) != 1:
            raise DegenerateMQ(f"gcd({self.m}, {self.q}) != 1")


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def chain_to_mq(weights: Sequence[int]) -> ChainMQ:
    """Continued fraction m/q = w_n - 1/(w_{n-1} - 1/( ... w_1))."""
    for w in weights:
        if w < 2:
            raise WeightBelowTwo(f"chain weight {w} < 2")
    if not weights:
        return ChainMQ(1, 0)
    x = Fraction(weights[0])
    for w in weights[1:]:
        x = w - 1 / x
    if len(weights) == 1:
        return ChainMQ(int(x), 1)
    return ChainMQ(x.numerator, x.denominator)


def mq_to_chain(mq: ChainMQ) -> list[int]:
    """Inverse of chain_to_mq; weights listed w_1, ..., w_n."""
    m, q = mq.m, mq.q
    if m == 1:
        return []
    if q == 0:
        raise DegenerateMQ("q = 0 only encodes the empty chain")
    weights = []
    while q > 0:
        w = -(-m // q)  # ceil(m / q)
        weights.append(w)
        m, q = q, w * q - m
    weights.reverse()
    return weights


def alpha_invariant(g: DualGraph, b: Boundary) -> FormalReal:
    """1 - sum_k (B_Y . E_k) Delta(DG - {v_k, ..., v_n}) on an ordered chain."""
    return alpha_form(g)(b.assignment(g.branch_names()))


def alpha_form(g: DualGraph) -> AffineForm:
    if g.size > 0 and not g.is_chain_in_order():
        raise NotAChain("alpha needs a chain indexed along its edges")
    total = AffineForm.constant(1)
    for k in range(g.size):
        head = g.subgraph(range(k))  # vertices v_1 .. v_{k-1}
        total = total - g.branch_weight(k) * Fraction(head.delta())
    return total


def compose_family(left: DualGraph, a_count: int, right: DualGraph) -> DualGraph:
    """Concatenate left chain, A vertices of weight 2, right chain."""
    if a_count < 0:
        raise GraphError("A must be non-negative")
    for part in (left, right):
        if part.size > 0 and not part.is_chain_in_order():
            raise NotAChain("compose_family needs ordered chains")
    vertices = list(left.vertices) + [Vertex(2)] * a_count + list(right.vertices)
    edges = [(i, i + 1) for i in range(len(vertices) - 1)]
    shift = left.size + a_count
    marks = list(left.marks) + [
        MarkedPoint(mk.host + shift, mk.incidences,
                    None if mk.host2 is None else mk.host2 + shift)
        for mk in right.marks
    ]
    g = DualGraph(vertices, edges, marks)
    if g.size > 0:
        g.require_negdef()
    return g


def pld_closed_form(
    m1: int,
    q1: int,
    alpha1: FormalLike,
    m2: int,
    q2: int,
    alpha2: FormalLike,
    a_count: int,
) -> FormalReal:
    """min of the two junction log discrepancies of the composed chain."""
    for m, q in ((m1, q1), (m2, q2)):
        if m == q:
            raise DegenerateMQ(f"m = q = {m}")
        ChainMQ(m, q)
    alpha1, alpha2 = as_formal(alpha1), as_formal(alpha2)
    beta1 = alpha1 / Fraction(m1 - q1)
    beta2 = alpha2 / Fraction(m2 - q2)
    p1 = Fraction(q1, m1 - q1)
    p2 = Fraction(q2, m2 - q2)
    s1 = Fraction(m1, m1 - q1)
    s2 = Fraction(m2, m2 - q2)
    f1 = ((a_count + s2) * beta1 + p1 * beta2) / (a_count + p1 + s2)
    f2 = ((a_count + s1) * beta2 + p2 * beta1) / (a_count + p2 + s1)
    return fmin([f1, f2])


def pld_closed_form_limit(m1, q1, alpha1, m2, q2, alpha2) -> FormalReal:
    """A -> infinity limit min(alpha_1/(m_1-q_1), alpha_2/(m_2-q_2))."""
    return fmin([as_formal(alpha1) / Fraction(m1 - q1), as_formal(alpha2) / Fraction(m2 - q2)])


# ---------------------------------------------------------------------------
# Cartier index
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CartierResult:
    index: int
    descent_verified: bool  # False in the lc, non-klt boundary case pld = 0


def cartier_index(g: DualGraph, b: Boundary) -> CartierResult:
    """lcm of the denominators of the pullback coefficients 1 - a_k and b_i."""
    for name, coeff in b.coeffs:
        if not coeff.is_rational():
            raise IrrationalCoefficient(f"coefficient of {name} is irrational")
    result = pld(g, b)
    if not result.lc:
        raise NotLC("pair is not lc; Cartier index undefined here")
    values = [v.as_fraction() for v in log_discrepancies(g, b)]
    values += [coeff.as_fraction() for _, coeff in b.coeffs]
    index = lcm_denominators(values) if values else 1
    klt = result.infinite or result.value > 0
    return CartierResult(index, descent_verified=klt)


# ---------------------------------------------------------------------------
# stock graphs
# ---------------------------------------------------------------------------


def chain_graph(weights: Sequence[int], marks: Iterable[MarkedPoint] = ()) -> DualGraph:
    edges = [(i, i + 1) for i in range(len(weights) - 1)]
    return DualGraph([Vertex(w) for w in weights], edges, marks)


def ade_graph(name: str) -> DualGraph:
    """Du Val dual graphs: all weights 2, ADE shapes."""
    kind, n = name[0].upper(), int(name[1:])
    if kind == "A":
        return chain_graph([2] * n)
    if kind == "D":
        if n < 4:
            raise GraphError("D_n needs n >= 4")
        edges = [(i, i + 1) for i in range(n - 3)] + [(0, n - 2), (0, n - 1)]
        return DualGraph([Vertex(2)] * n, edges)
    if kind == "E":
        if n not in (6, 7, 8):
            raise GraphError("E_n needs n in {6, 7, 8}")
        edges = [(i, i + 1) for i in range(n - 2)] + [(2, n - 1)]
        return DualGraph([Vertex(2)] * n, edges)
    raise GraphError(f"unknown ADE name {name!r}")
