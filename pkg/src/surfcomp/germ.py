"""Clusters of infinitely-near points over a smooth surface germ.

A cluster records the combinatorics of a sequence of point blow-ups
starting at the origin of a smooth germ: every point sits on the
exceptional curve of an earlier point (its host), satellites sit on a
node of two curves.  Branches of the boundary are recorded by the points
they pass through and their multiplicities there; beyond its listed
points a branch continues generically (smooth, transverse, at fresh free
points).

Log discrepancies follow the blow-up recursion for e_i := 1 - a_i,

    e_new = -1 + mult_x(B) + e_host + e_host2,

with mult_x(B) the sum of branch coefficient times multiplicity at the
blown-up point.  The cluster's final model has a dual graph whose exact
linear solve must reproduce the recursion; both routes are exposed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .exact import FormalLike, FormalReal, as_formal
from .linalg import AffineForm
from . import dualgraph
from .dualgraph import (
    Boundary,
    DualGraph,
    MarkedPoint,
    MldResult,
    NotLC,
    Stratum,
    Vertex,
    log_discrepancies,
    mld_log_smooth,
)


class InvalidProximity(ValueError):
    pass


@dataclass(frozen=True)
class ClusterPoint:
    host: Optional[int]  # None exactly for point 0, the origin
    host2: Optional[int] = None

    @property
    def prox(self) -> tuple[int, ...]:
        out = tuple(h for h in (self.host, self.host2) if h is not None)
        return out


@dataclass(frozen=True)
class BranchPath:
    """Points a branch passes through, with multiplicities (default 1)."""

    points: tuple[int, ...]
    mults: tuple[int, ...]

    @staticmethod
    def through(points: Sequence[int], mults: Sequence[int] | None = None) -> "BranchPath":
        pts = tuple(points)
        ms = tuple(mults) if mults is not None else (1,) * len(pts)
        return BranchPath(pts, ms)

    def mult_at(self, p: int) -> int:
        for q, m in zip(self.points, self.mults):
            if q == p:
                return m
        return 0


class Cluster:
    """Ordered infinitely-near points with branch incidence."""

    __slots__ = ("points", "branches")

    def __init__(
        self,
        points: Sequence[ClusterPoint],
        branches: Mapping[str, BranchPath] | None = None,
    ):
        pts = tuple(points)
        brs = tuple(sorted((branches or {}).items()))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "branches", brs)
        self._validate()

    def __setattr__(self, *a):
        raise AttributeError("Cluster is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Cluster)
            and self.points == other.points
            and self.branches == other.branches
        )

    def __hash__(self):
        return hash((self.points, self.branches))

    def __repr__(self):
        return f"Cluster({len(self.points)} points, {len(self.branches)} branches)"

    @property
    def size(self) -> int:
        return len(self.points)

    def branch_map(self) -> dict[str, BranchPath]:
        return dict(self.branches)

    def proximate_to(self, p: int) -> list[int]:
        return [i for i, pt in enumerate(self.points) if p in pt.prox]

    # -- validation ------------------------------------------------------
    def _validate(self):
        pts = self.points
        if not pts:
            raise InvalidProximity("a cluster needs at least the origin point")
        if pts[0].host is not None or pts[0].host2 is not None:
            raise InvalidProximity("point 0 is the origin and has no host")
        for i, pt in enumerate(pts[1:], start=1):
            if pt.host is None or not 0 <= pt.host < i:
                raise InvalidProximity(f"host of point {i} must precede it")
            if pt.host2 is not None:
                if not 0 <= pt.host2 < i or pt.host2 == pt.host:
                    raise InvalidProximity(f"bad second host at point {i}")
                self._check_node_alive(i, pt.host, pt.host2)
        for name, br in self.branches:
            self._validate_branch(name, br)

    def _check_node_alive(self, i: int, h1: int, h2: int):
        a, b = min(h1, h2), max(h1, h2)
        if a not in self.points[b].prox:
            raise InvalidProximity(
                f"point {i}: curves {a} and {b} never meet (no node to sit on)"
            )
        for j in range(b + 1, i):
            if {a, b} <= set(self.points[j].prox):
                raise InvalidProximity(
                    f"point {i}: node of {a} and {b} already blown up at {j}"
                )

    def _validate_branch(self, name: str, br: BranchPath):
        if len(br.points) != len(br.mults) or not br.points:
            raise InvalidProximity(f"branch {name}: malformed path")
        if br.points[0] != 0:
            raise InvalidProximity(f"branch {name}: must pass through the origin")
        if list(br.points) != sorted(set(br.points)):
            raise InvalidProximity(f"branch {name}: points must strictly increase")
        if any(m < 1 for m in br.mults):
            raise InvalidProximity(f"branch {name}: multiplicities must be >= 1")
        on = set(br.points)
        for prev, cur in zip(br.points, br.points[1:]):
            if prev not in self.points[cur].prox:
                raise InvalidProximity(
                    f"branch {name}: point {cur} does not sit on the curve of {prev}"
                )
            if not set(self.points[cur].prox) <= on:
                raise InvalidProximity(
                    f"branch {name}: point {cur} sits on a curve missing from the branch"
                )
        for p in br.points:
            if self.residual(br, p) < 0:
                raise InvalidProximity(
                    f"branch {name}: proximity inequality fails at point {p}"
                )

    def residual(self, br: BranchPath, p: int) -> int:
        """(strict transform . E_p) on the final model."""
        taken = sum(
            br.mult_at(q)
            for q in br.points
            if q > p and p in self.points[q].prox
        )
        return br.mult_at(p) - taken

    # -- log discrepancies -------------------------------------------------
    def e_forms(self) -> list[AffineForm]:
        """e_i = 1 - a_i as affine forms in the branch coefficients."""
        forms: list[AffineForm] = []
        for i, pt in enumerate(self.points):
            f = AffineForm.constant(-1)
            for name, br in self.branches:
                m = br.mult_at(i)
                if m:
                    f = f + AffineForm.parameter(name, m)
            for h in pt.prox:
                f = f + forms[h]
            forms.append(f)
        return forms

    def log_discrepancy_forms(self) -> list[AffineForm]:
        return [1 - f for f in self.e_forms()]

    # -- final model -----------------------------------------------------
    def edges(self) -> list[tuple[int, int]]:
        out = []
        for j, pt in enumerate(self.points):
            for i in pt.prox:
                if not any(
                    {i, j} <= set(self.points[k].prox)
                    for k in range(j + 1, self.size)
                ):
                    out.append((i, j))
        return out

    def weights(self) -> list[int]:
        return [1 + len(self.proximate_to(i)) for i in range(self.size)]

    def dual_graph(self) -> DualGraph:
        """Dual graph of the final model.

        Branch marks carry the intersection numbers (B_Y,i . E_k); for a
        cluster that is not snc-resolved the mark positions are not
        faithful (a branch may actually sit at a node), so only resolved
        clusters should feed mld computations.
        """
        marks = []
        for name, br in self.branches:
            for p in br.points:
                t = self.residual(br, p)
                if t > 0:
                    marks.append(MarkedPoint(p, ((name, t),)))
        return DualGraph([Vertex(w) for w in self.weights()], self.edges(), marks)


@dataclass(frozen=True)
class GermBoundary:
    """branch id -> coefficient in [0, 1]."""

    coeffs: tuple[tuple[str, FormalReal], ...]

    @staticmethod
    def of(mapping: Mapping[str, FormalLike] | None = None, **kw) -> "GermBoundary":
        items = dict(mapping or {})
        items.update(kw)
        coeffs = tuple(sorted((k, as_formal(v)) for k, v in items.items()))
        for name, b in coeffs:
            if b < 0 or b > 1:
                raise ValueError(f"coefficient of {name} outside [0, 1]")
        return GermBoundary(coeffs)

    def __getitem__(self, name: str) -> FormalReal:
        for k, v in self.coeffs:
            if k == name:
                return v
        return as_formal(0)

    def as_boundary(self) -> Boundary:
        return Boundary(self.coeffs, sub_pair=False)

    def assignment(self, names: Iterable[str]) -> dict[str, FormalReal]:
        return {n: self[n] for n in names}


def cluster_log_discrepancies(cl: Cluster, b: GermBoundary) -> list[FormalReal]:
    """a_i per cluster point, by the blow-up recursion."""
    assignment = b.assignment(name for name, _ in cl.branches)
    return [f(assignment) for f in cl.log_discrepancy_forms()]


# ---------------------------------------------------------------------------
# snc resolution
# ---------------------------------------------------------------------------


def _branch_exit_state(cl: Cluster, br: BranchPath) -> list[tuple[int, int]]:
    """Points with positive residual, deepest last."""
    return [(p, cl.residual(br, p)) for p in br.points if cl.residual(br, p) > 0]


def resolve_to_snc(cl: Cluster, max_steps: int = 10_000) -> Cluster:
    """Minimal deterministic extension on which the configuration is snc.

    Every branch must leave the exceptional locus at a single transverse
    free point.  Two violations are repairable from the data: a branch
    whose deepest multiplicity exceeds 1 (continued generically: one free
    point then satellites), and a branch sitting at a node (the node is
    blown up).  Anything else is inconsistent incidence data.
    """
    current = cl
    for _ in range(max_steps):
        violation = _first_violation(current)
        if violation is None:
            return current
        current = _extend(current, violation)
    raise InvalidProximity("snc resolution did not terminate")


def _first_violation(cl: Cluster):
    node_pairs = {frozenset(e) for e in cl.edges()}
    for name, br in cl.branches:
        exits = _branch_exit_state(cl, br)
        if len(exits) == 1 and exits[0][1] == 1:
            continue
        if not exits:
            raise InvalidProximity(f"branch {name}: strict transform vanished")
        if len(exits) == 1:
            # deepest multiplicity >= 2: continue the branch generically
            return ("deepen", name, exits[0][0])
        if len(exits) == 2 and frozenset((exits[0][0], exits[1][0])) in node_pairs:
            return ("node", name, exits[0][0], exits[1][0])
        raise InvalidProximity(
            f"branch {name}: inconsistent exits at {[p for p, _ in exits]}"
        )
    return None


def _extend(cl: Cluster, violation) -> Cluster:
    branches = cl.branch_map()
    new_index = cl.size
    if violation[0] == "deepen":
        _, name, p = violation
        point = ClusterPoint(host=p)
        updates = {name: _append_point(branches[name], new_index)}
    else:
        _, name, p, q = violation
        point = ClusterPoint(host=max(p, q), host2=min(p, q))
        # every branch sitting at this node passes through the new point
        updates = {}
        for nm, br in cl.branches:
            exits = _branch_exit_state(cl, br)
            if {e[0] for e in exits} >= {p, q}:
                updates[nm] = _append_point(br, new_index)
    branches.update(updates)
    return Cluster(list(cl.points) + [point], branches)


def _append_point(br: BranchPath, idx: int) -> BranchPath:
    return BranchPath(br.points + (idx,), br.mults + (1,))


def is_snc(cl: Cluster) -> bool:
    try:
        return _first_violation(cl) is None
    except InvalidProximity:
        return False


# ---------------------------------------------------------------------------
# mld with witness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearForm:
    """mld = l0 - sum l_i b_i with non-negative integer coefficients."""

    l0: int
    terms: tuple[tuple[str, int], ...]

    def evaluate(self, b: GermBoundary) -> FormalReal:
        out = as_formal(self.l0)
        for name, li in self.terms:
            out = out - li * b[name]
        return out


@dataclass(frozen=True)
class GermMldResult:
    value: FormalReal
    witness: Stratum
    witness_depth: int  # a(E, X, 0) of the achieving divisor
    linear_form: LinearForm
    resolution: Cluster
    graph: DualGraph


def _linear_form_of(stratum: Stratum) -> LinearForm:
    form = stratum.form
    if form.const.denominator != 1:
        raise AssertionError("cluster strata must have integer constant part")
    terms = []
    for name, q in form.coeffs:
        if q.denominator != 1 or q > 0:
            raise AssertionError("cluster strata coefficients must be negative integers")
        terms.append((name, int(-q)))
    return LinearForm(int(form.const), tuple(terms))


def germ_is_lc(cl: Cluster, b: GermBoundary) -> bool:
    """lc test on the snc resolution: all a_i >= 0 (coefficients are <= 1)."""
    resolution = resolve_to_snc(cl)
    return all(v >= 0 for v in cluster_log_discrepancies(resolution, b))


def mld_smooth_germ(cl: Cluster, b: GermBoundary) -> GermMldResult:
    """mld at the origin: resolve to snc, then minimize over strata."""
    resolution = resolve_to_snc(cl)
    graph = resolution.dual_graph()
    result = mld_log_smooth(graph, b.as_boundary())
    if not result.lc:
        raise NotLC("germ is not lc at the origin")
    lf = _linear_form_of(result.witness)
    return GermMldResult(
        value=result.value,
        witness=result.witness,
        witness_depth=lf.l0,
        linear_form=lf,
        resolution=resolution,
        graph=graph,
    )


def minimal_witness_depth(cl: Cluster, b: GermBoundary) -> int:
    """Smallest a(E, X, 0) among strata achieving the mld."""
    resolution = resolve_to_snc(cl)
    graph = resolution.dual_graph()
    result = mld_log_smooth(graph, b.as_boundary())
    if not result.lc:
        raise NotLC("germ is not lc at the origin")
    assignment = b.assignment(graph.branch_names())
    depths = []
    for s in result.forms:
        if s.form(assignment) == result.value:
            if s.form.const.denominator != 1:
                raise AssertionError("cluster strata have integer constants")
            depths.append(int(s.form.const))
    return min(depths)


# ---------------------------------------------------------------------------
# independent brute-force oracle
# ---------------------------------------------------------------------------


def exhaustive_mld(
    cl: Cluster,
    b: GermBoundary,
    depth: int = 8,
    certified_pruning: bool = True,
) -> FormalReal:
    """min a(E) over all divisors reached by further blow-ups of the snc model.

    Explores every closed point of the resolution (nodes, branch points,
    one free point per curve) and recurses on the newly created curve.
    With ``certified_pruning`` a subtree is skipped only when every curve
    and branch sum incident to it is <= 1, which forces all descendant
    e-values below the subtree root's (so the recorded value already
    bounds the subtree).  Pruning is lossless; disabling it gives the
    plain exponential enumeration.
    """
    resolution = resolve_to_snc(cl)
    graph = resolution.dual_graph()
    assignment = b.assignment(graph.branch_names())
    forms = graph.log_discrepancy_forms()
    a_values = [f(assignment) for f in forms]
    if any(v < 0 for v in a_values):
        raise NotLC("germ is not lc; mld is -infinity")
    e_values = [1 - v for v in a_values]

    best = [min(a_values)]

    def consider(a_new: FormalReal):
        if a_new < best[0]:
            best[0] = a_new

    one = as_formal(1)

    def explore(e_new: FormalReal, partners: list, remaining: int):
        # partners: list of ("curve", e) and ("branch", coeff) through the new curve
        consider(1 - e_new)
        if remaining == 0:
            return
        if certified_pruning and e_new <= 1 and all(p <= 1 for _, p in partners):
            return
        for kind, val in partners:
            child = e_new + val - 1
            if kind == "curve":
                explore(child, [("curve", e_new), ("curve", val)], remaining - 1)
            else:
                explore(child, [("curve", e_new), ("branch", val)], remaining - 1)
        explore(e_new - 1, [("curve", e_new)], remaining - 1)

    # nodes of the resolution
    for i, j in sorted(graph.edges):
        explore(e_values[i] + e_values[j] - 1,
                [("curve", e_values[i]), ("curve", e_values[j])], depth - 1)
    # branch points (one closed point per mark; both hosts folded in)
    for mk in graph.marks:
        total = as_formal(0)
        for br, t in mk.incidences:
            total = total + t * b[br]
        partners = [("curve", e_values[h]) for h in mk.hosts] + [
            ("branch", b[br]) for br, _ in mk.incidences
        ]
        e_new = total - 1 + sum((e_values[h] for h in mk.hosts), as_formal(0))
        explore(e_new, partners, depth - 1)
    # free points
    for k in range(graph.size):
        explore(e_values[k] - 1, [("curve", e_values[k])], depth - 1)
    return best[0]


# ---------------------------------------------------------------------------
# enumeration and the Nakamura bound
# ---------------------------------------------------------------------------


def enumerate_shapes(max_points: int) -> list[Cluster]:
    """All cluster shapes (no branches) with up to max_points points."""
    shapes: list[Cluster] = []
    seen: set = set()

    def key(points: tuple[ClusterPoint, ...]):
        return points

    def rec(points: list[ClusterPoint]):
        cl = Cluster(points)
        k = key(tuple(points))
        if k not in seen:
            seen.add(k)
            shapes.append(cl)
        if len(points) == max_points:
            return
        i = len(points)
        for host in range(i):
            rec(points + [ClusterPoint(host)])
            for h2 in range(i):
                if h2 == host:
                    continue
                cand = ClusterPoint(host, h2)
                try:
                    rec(points + [cand])
                except InvalidProximity:
                    continue

    rec([ClusterPoint(None)])
    # canonical dedupe: keep one representative per isomorphism class
    out, reps = [], set()
    for cl in shapes:
        k = _shape_canonical_key(cl)
        if k not in reps:
            reps.add(k)
            out.append(cl)
    return out


def _shape_canonical_key(cl: Cluster):
    n = cl.size
    best = None
    for perm in _shape_permutations(cl):
        relabeled = []
        inv = {old: new for new, old in enumerate(perm)}
        ok = True
        for new_idx, old in enumerate(perm):
            pt = cl.points[old]
            host = None if pt.host is None else inv[pt.host]
            host2 = None if pt.host2 is None else inv[pt.host2]
            if host is not None and host >= new_idx:
                ok = False
                break
            if host2 is not None and host2 >= new_idx:
                ok = False
                break
            if host2 is not None and host2 > host:
                host, host2 = host2, host
            relabeled.append((-1 if host is None else host, -1 if host2 is None else host2))
        if ok:
            k = tuple(relabeled)
            if best is None or k < best:
                best = k
    return best


def _shape_permutations(cl: Cluster):
    # only creation orders compatible with the host relation are isomorphic
    n = cl.size
    if n > 7:
        yield tuple(range(n))
        return
    for perm in itertools.permutations(range(n)):
        if perm[0] != 0:
            continue
        pos = {old: i for i, old in enumerate(perm)}
        if all(
            all(pos[h] < pos[i] for h in cl.points[i].prox)
            for i in range(n)
        ):
            yield perm


def enumerate_branch_chains(cl: Cluster) -> list[tuple[int, ...]]:
    """Descending chains of points usable as a smooth (all mult 1) branch."""
    chains: list[tuple[int, ...]] = []

    def rec(chain: list[int], taken: set[int]):
        chains.append(tuple(chain))
        last = chain[-1]
        on = set(chain)
        for i in range(last + 1, cl.size):
            pt = cl.points[i]
            # unit multiplicities allow at most one on-branch successor per point
            if last in pt.prox and set(pt.prox) <= on and not (set(pt.prox) & taken):
                rec(chain + [i], taken | set(pt.prox))

    rec([0], set())
    return chains


@dataclass(frozen=True)
class NakamuraReport:
    empirical_n: int
    worst: Optional[tuple[Cluster, GermBoundary, int]]
    instances: int
    lc_instances: int


def _shape_instances(shape: Cluster, gamma: Sequence[Fraction], max_branches: int):
    chains = enumerate_branch_chains(shape)
    instances = []
    seen = set()
    for count in range(1, max_branches + 1):
        for combo in itertools.combinations_with_replacement(chains, count):
            for coeffs in itertools.product(gamma, repeat=count):
                labelled = sorted(zip(combo, coeffs))
                key = tuple(labelled)
                if key in seen:
                    continue
                seen.add(key)
                branches = {
                    f"b{i}": BranchPath.through(pts)
                    for i, (pts, _) in enumerate(labelled)
                }
                boundary = GermBoundary.of(
                    {f"b{i}": c for i, (_, c) in enumerate(labelled)}
                )
                instances.append((Cluster(shape.points, branches), boundary))
    return instances


def nakamura_scan(
    gamma: Sequence[Fraction],
    max_points: int,
    max_branches: int,
    jobs: int = 1,
) -> NakamuraReport:
    """Empirical Nakamura bound: max over lc instances of the minimal
    witness depth a(E, X, 0)."""
    gamma = sorted(set(Fraction(g) for g in gamma))
    shapes = enumerate_shapes(max_points)
    instances: list[tuple[Cluster, GermBoundary]] = []
    if not gamma:
        instances.append((Cluster([ClusterPoint(None)]), GermBoundary.of({})))
    else:
        for shape in shapes:
            instances.extend(_shape_instances(shape, gamma, max_branches))

    results = _map_instances(instances, jobs)

    empirical, worst, lc_count = 0, None, 0
    for (cl, bd), depth in zip(instances, results):
        if depth is None:
            continue
        lc_count += 1
        if depth > empirical:
            empirical = depth
            worst = (cl, bd, depth)
    return NakamuraReport(empirical, worst, len(instances), lc_count)


def _depth_or_none(item):
    cl, bd = item
    try:
        return minimal_witness_depth(cl, bd)
    except NotLC:
        return None


def _map_instances(instances, jobs: int):
    if jobs <= 1 or len(instances) < 64:
        return [_depth_or_none(it) for it in instances]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_depth_or_none, instances, chunksize=32))


# ---------------------------------------------------------------------------
# stock germs
# ---------------------------------------------------------------------------


def ordinary_point(num_branches: int) -> Cluster:
    """num_branches smooth branches meeting transversally at the origin."""
    branches = {
        f"b{i}": BranchPath.through([0]) for i in range(num_branches)
    }
    return Cluster([ClusterPoint(None)], branches)


def tangent_pair() -> Cluster:
    """Two smooth branches with order-2 contact."""
    return Cluster(
        [ClusterPoint(None), ClusterPoint(0)],
        {"b0": BranchPath.through([0, 1]), "b1": BranchPath.through([0, 1])},
    )


def cuspidal_branch() -> Cluster:
    """One branch with an ordinary cusp (multiplicity sequence 2, 1, 1)."""
    return Cluster(
        [ClusterPoint(None), ClusterPoint(0), ClusterPoint(1, 0)],
        {"b0": BranchPath.through([0, 1, 2], [2, 1, 1])},
    )
