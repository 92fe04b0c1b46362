"""Exact finite metric nets: circles, torus products, ultrametric chains,
explicit matrices, and quotients by finite isometry groups.

All coordinates and distances are arbitrary-precision rationals.  Nets are
immutable after construction; the only mutable state is an idempotent
read-through cache of computed pair distances.
"""

from __future__ import annotations

import csv
import itertools
import random
from fractions import Fraction

from .arith import ONE, ZERO, arc, as_fraction, circle_point, frac_str, mod1
from .errors import (
    CapacityError,
    InfeasibilityError,
    StructuralError,
    ValidationError,
)

CIRCLE = "circle"
TORUS = "torus"
ULTRAMETRIC = "ultrametric"
MATRIX = "matrix"
QUOTIENT = "quotient"

L1 = "l1"
LINF = "linf"

POINT_CAP = 10**6
EXHAUSTIVE_TRIPLE_LIMIT = 200
SAMPLED_TRIPLES = 10**4


class FiniteNet:
    """Base class: an explicit point list with an exact distance function."""

    kind: str

    def __init__(self, points: tuple):
        if not points:
            raise ValidationError("a net needs at least one point")
        if len(points) > POINT_CAP:
            raise CapacityError("net exceeds the point cap", POINT_CAP)
        self.points = points
        self._pair_cache: dict = {}

    def dist(self, x, y) -> Fraction:
        raise NotImplementedError

    def scaled(self, t: Fraction) -> "FiniteNet":
        raise NotImplementedError

    def __len__(self):
        return len(self.points)

    def __contains__(self, x):
        return x in self._point_set()

    def _point_set(self):
        cached = getattr(self, "_points_as_set", None)
        if cached is None:
            cached = frozenset(self.points)
            self._points_as_set = cached
        return cached

    def index(self, x) -> int:
        lookup = getattr(self, "_index", None)
        if lookup is None:
            lookup = {p: i for i, p in enumerate(self.points)}
            self._index = lookup
        return lookup[x]

    def diameter(self) -> Fraction:
        best = ZERO
        for i, x in enumerate(self.points):
            for y in self.points[i + 1 :]:
                d = self.dist(x, y)
                if d > best:
                    best = d
        return best

    def min_positive_distance(self) -> Fraction:
        best = None
        for i, x in enumerate(self.points):
            for y in self.points[i + 1 :]:
                d = self.dist(x, y)
                if d > 0 and (best is None or d < best):
                    best = d
        if best is None:
            raise ValidationError("net has no pair at positive distance")
        return best

    def _defining(self) -> tuple:
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self._defining() == other._defining()

    def __hash__(self):
        return hash((type(self).__name__, self._defining()))

    def __repr__(self):
        return f"{type(self).__name__}({len(self.points)} points)"


class CircleNet(FiniteNet):
    """Rational points on the circle with the scaled arc metric."""

    kind = CIRCLE

    def __init__(self, points, scale: Fraction = ONE):
        pts = tuple(sorted({circle_point(p) for p in points}))
        super().__init__(pts)
        scale = as_fraction(scale)
        if scale <= 0:
            raise ValidationError("circle scale must be positive")
        self.scale = scale

    def dist(self, x, y):
        return self.scale * arc(x, y)

    def scaled(self, t):
        return CircleNet(self.points, self.scale * t)

    def with_points(self, points):
        return CircleNet(points, self.scale)

    def _defining(self):
        return (self.points, self.scale)


class TorusNet(FiniteNet):
    """Product of circles; each factor carries its own scale.

    The default distance is the sum of scaled arc distances; the max
    variant is used by the separated-set experiments.
    """

    kind = TORUS

    def __init__(self, points, scales, metric: str = L1):
        scales = tuple(as_fraction(s) for s in scales)
        if any(s <= 0 for s in scales):
            raise ValidationError("torus scales must be positive")
        if metric not in (L1, LINF):
            raise ValidationError(f"unknown torus metric {metric!r}")
        pts = tuple(sorted({tuple(circle_point(c) for c in p) for p in points}))
        if any(len(p) != len(scales) for p in pts):
            raise ValidationError("torus point arity does not match the scale list")
        super().__init__(pts)
        self.scales = scales
        self.metric = metric

    def dist(self, x, y):
        parts = (s * arc(a, b) for s, a, b in zip(self.scales, x, y))
        return sum(parts, ZERO) if self.metric == L1 else max(parts)

    def scaled(self, t):
        return TorusNet(self.points, tuple(s * t for s in self.scales), self.metric)

    def with_points(self, points):
        return TorusNet(points, self.scales, self.metric)

    def _defining(self):
        return (self.points, self.scales, self.metric)


class UltrametricNet(FiniteNet):
    """Digit strings metrized by a strictly decreasing weight per level."""

    kind = ULTRAMETRIC

    def __init__(self, points, orders, weights):
        orders = tuple(int(o) for o in orders)
        weights = tuple(as_fraction(w) for w in weights)
        if len(orders) != len(weights):
            raise ValidationError("orders and weights must have equal length")
        if any(o < 1 for o in orders):
            raise ValidationError("digit orders must be positive")
        if any(w <= 0 for w in weights) or any(
            later >= earlier for earlier, later in zip(weights, weights[1:])
        ):
            raise ValidationError("weights must be strictly decreasing and positive")
        pts = []
        for p in points:
            p = tuple(int(d) for d in p)
            if len(p) != len(orders) or any(not 0 <= d < o for d, o in zip(p, orders)):
                raise StructuralError(f"digit string {p} invalid for orders {orders}")
            pts.append(p)
        super().__init__(tuple(sorted(set(pts))))
        self.orders = orders
        self.weights = weights

    def dist(self, x, y):
        for a, b, w in zip(x, y, self.weights):
            if a != b:
                return w
        return ZERO

    def scaled(self, t):
        return UltrametricNet(self.points, self.orders, tuple(w * t for w in self.weights))

    def _defining(self):
        return (self.points, self.orders, self.weights)


class MatrixNet(FiniteNet):
    """Explicit labelled distance matrix."""

    kind = MATRIX

    def __init__(self, labels, matrix):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ValidationError("matrix net labels must be distinct")
        rows = tuple(tuple(as_fraction(v) for v in row) for row in matrix)
        n = len(labels)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValidationError("distance matrix must be square over the labels")
        for i in range(n):
            if rows[i][i] != 0:
                raise ValidationError(f"nonzero self-distance at {labels[i]!r}")
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise ValidationError("distance matrix must be symmetric")
                if rows[i][j] <= 0:
                    raise ValidationError("off-diagonal distances must be positive")
        order = sorted(range(n), key=lambda k: str(labels[k]))
        self._matrix = tuple(tuple(rows[i][j] for j in order) for i in order)
        super().__init__(tuple(labels[k] for k in order))
        spot_check_triangle(self)

    def dist(self, x, y):
        return self._matrix[self.index(x)][self.index(y)]

    def scaled(self, t):
        return MatrixNet(self.points, [[v * t for v in row] for row in self._matrix])

    def _defining(self):
        return (self.points, self._matrix)


class QuotientNet(FiniteNet):
    """Quotient of a net by a partition into finite-group orbits.

    Points are the orbits themselves (sorted member tuples); the distance
    is the minimum base distance over orbit representatives, which is a
    metric exactly when the partition comes from an isometric action.
    """

    kind = QUOTIENT

    def __init__(self, base: FiniteNet, orbits):
        canon = []
        seen = set()
        for orbit in orbits:
            members = tuple(sorted(set(orbit)))
            if not members:
                raise ValidationError("empty orbit in partition")
            for p in members:
                if p not in base:
                    raise ValidationError(f"orbit member {p!r} is not a base point")
                if p in seen:
                    raise ValidationError(f"point {p!r} appears in two orbits")
                seen.add(p)
            canon.append(members)
        if len(seen) != len(base.points):
            raise ValidationError("partition does not cover the base net")
        super().__init__(tuple(sorted(canon)))
        self.base = base

    def dist(self, x, y):
        if x == y:
            return ZERO
        key = (x, y) if x <= y else (y, x)
        d = self._pair_cache.get(key)
        if d is None:
            d = min(self.base.dist(a, b) for a in x for b in y)
            self._pair_cache[key] = d
        return d

    def scaled(self, t):
        return QuotientNet(self.base.scaled(t), self.points)

    def class_of(self, p):
        lookup = getattr(self, "_class_lookup", None)
        if lookup is None:
            lookup = {m: orbit for orbit in self.points for m in orbit}
            self._class_lookup = lookup
        return lookup[p]

    def _defining(self):
        return (self.base, self.points)


# -- verification ---------------------------------------------------------


def verify_metric(net: FiniteNet, seed: int = 0) -> None:
    """Check the metric axioms; exhaustive on small nets, sampled otherwise."""
    pts = net.points
    n = len(pts)
    for i, x in enumerate(pts):
        if net.dist(x, x) != 0:
            raise ValidationError(f"dist({x!r}, {x!r}) != 0")
    if n <= EXHAUSTIVE_TRIPLE_LIMIT:
        pair_iter = itertools.combinations(range(n), 2)
        triple_iter = itertools.combinations(range(n), 3)
    else:
        rng = random.Random(seed)
        pair_iter = (
            tuple(sorted(rng.sample(range(n), 2))) for _ in range(SAMPLED_TRIPLES)
        )
        triple_iter = (
            tuple(sorted(rng.sample(range(n), 3))) for _ in range(SAMPLED_TRIPLES)
        )
    for i, j in pair_iter:
        d = net.dist(pts[i], pts[j])
        if d <= 0:
            raise ValidationError(f"non-positive distance between {pts[i]!r}, {pts[j]!r}")
        if net.dist(pts[j], pts[i]) != d:
            raise ValidationError("distance is not symmetric")
    for i, j, k in triple_iter:
        a, b, c = pts[i], pts[j], pts[k]
        ab, bc, ac = net.dist(a, b), net.dist(b, c), net.dist(a, c)
        if ac > ab + bc or ab > ac + bc or bc > ab + ac:
            raise ValidationError(f"triangle inequality fails on {(a, b, c)}")


def spot_check_triangle(net: FiniteNet, samples: int = 500, seed: int = 1) -> None:
    n = len(net.points)
    if n < 3:
        return
    rng = random.Random(seed)
    for _ in range(min(samples, n * n)):
        a, b, c = (net.points[rng.randrange(n)] for _ in range(3))
        if net.dist(a, c) > net.dist(a, b) + net.dist(b, c):
            raise ValidationError(f"triangle inequality fails on {(a, b, c)}")


# -- constructors (operation surface) --------------------------------------


def circle_net(denominator: int, extra_points=()) -> CircleNet:
    """Uniform rational grid on the circle plus optional extra points."""
    if denominator < 1:
        raise ValidationError("denominator must be >= 1")
    pts = [Fraction(k, denominator) for k in range(denominator)]
    pts.extend(circle_point(p) for p in extra_points)
    return CircleNet(pts)


def scale(net: FiniteNet, t) -> FiniteNet:
    t = as_fraction(t)
    if t <= 0:
        raise ValidationError("scale factor must be positive")
    return net.scaled(t)


def torus_product(factors, metric: str = L1) -> TorusNet:
    """Product of circle nets with per-factor scales and the chosen metric."""
    factors = list(factors)
    if not factors:
        raise ValidationError("torus product needs at least one factor")
    scales = []
    coords = []
    total = 1
    for net, s in factors:
        if not isinstance(net, CircleNet):
            raise ValidationError("torus factors must be circle nets")
        s = as_fraction(s)
        if s <= 0:
            raise ValidationError("factor scales must be positive")
        scales.append(s * net.scale)
        coords.append(net.points)
        total *= len(net.points)
        if total > POINT_CAP:
            raise CapacityError("torus product exceeds the point cap", POINT_CAP)
    return TorusNet(itertools.product(*coords), scales, metric)


def ultrametric_chain(orders, weights) -> UltrametricNet:
    """All digit strings over the given orders, first-difference metric."""
    orders = tuple(int(o) for o in orders)
    total = 1
    for o in orders:
        total *= max(o, 1)
        if total > POINT_CAP:
            raise CapacityError("ultrametric chain exceeds the point cap", POINT_CAP)
    points = itertools.product(*(range(o) for o in orders))
    return UltrametricNet(points, orders, weights)


def quotient_by_finite_group(net: FiniteNet, orbits) -> QuotientNet:
    """Quotient metric d([x],[y]) = min over representatives.

    Raises if the result is not a metric, which signals that the orbit
    partition did not come from an isometric action.
    """
    q = QuotientNet(net, orbits)
    try:
        verify_metric(q)
    except ValidationError as e:
        raise ValidationError(f"quotient is not a metric (non-isometric orbits?): {e}") from e
    return q


def interleaved_embedding(chain_a, chain_b) -> list[dict]:
    """Level injections e_i between two quotient towers, compatible with
    the truncation maps q (q(e_i(x)) = e_{i-1}(q(x)) on every point).

    ``chain_a`` and ``chain_b`` list cumulative level sizes; each must
    divide the next.  Feasibility needs every index g_i/g_{i-1} to be at
    most h_i/h_{i-1}; the injections are built greedily level by level.
    """
    ga = [1] + [int(g) for g in chain_a]
    hb = [1] + [int(h) for h in chain_b]
    if len(ga) != len(hb):
        raise ValidationError("chains must have equal depth")
    for i in range(1, len(ga)):
        if ga[i] % ga[i - 1] or hb[i] % hb[i - 1]:
            raise ValidationError(f"cumulative sizes must divide at level {i}")
        if ga[i] // ga[i - 1] > hb[i] // hb[i - 1]:
            raise InfeasibilityError(
                f"index {ga[i] // ga[i - 1]} exceeds {hb[i] // hb[i - 1]} at level {i}",
                level=i,
            )
    digits_a = [ga[i] // ga[i - 1] for i in range(1, len(ga))]
    digits_b = [hb[i] // hb[i - 1] for i in range(1, len(hb))]
    maps: list[dict] = []
    prev: dict = {(): ()}
    for level in range(len(digits_a)):
        cur = {}
        for a_pt, b_pt in prev.items():
            for d in range(digits_a[level]):
                cur[a_pt + (d,)] = b_pt + (d,)
        maps.append(cur)
        prev = cur
    # compatibility with truncation is checked outright
    for i in range(1, len(maps)):
        for a_pt, b_pt in maps[i].items():
            if maps[i - 1][a_pt[:-1]] != b_pt[:-1]:
                raise InfeasibilityError(f"compatibility fails at level {i + 1}", level=i + 1)
    for level_map in maps:
        if len(set(level_map.values())) != len(level_map):
            raise InfeasibilityError("level map is not injective")
    return maps


# -- explicit-matrix CSV interface -----------------------------------------


def save_matrix_csv(net: FiniteNet, path) -> None:
    """Write any net as an explicit labelled matrix of rationals."""
    labels = [str(p) for p in net.points]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(labels)
        for x in net.points:
            writer.writerow([frac_str(net.dist(x, y)) for y in net.points])


def load_matrix_csv(path) -> MatrixNet:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise StructuralError("empty matrix CSV")
    labels = rows[0]
    if len(rows) != len(labels) + 1:
        raise StructuralError("matrix CSV must have one row per label")
    matrix = [[as_fraction(v) for v in row] for row in rows[1:]]
    return MatrixNet(labels, matrix)


# -- JSON interface ---------------------------------------------------------


def net_to_json(net: FiniteNet) -> dict:
    if isinstance(net, CircleNet):
        return {
            "kind": CIRCLE,
            "scale": frac_str(net.scale),
            "points": [frac_str(p) for p in net.points],
        }
    if isinstance(net, TorusNet):
        return {
            "kind": TORUS,
            "scales": [frac_str(s) for s in net.scales],
            "metric": net.metric,
            "points": [[frac_str(c) for c in p] for p in net.points],
        }
    if isinstance(net, UltrametricNet):
        return {
            "kind": ULTRAMETRIC,
            "orders": list(net.orders),
            "weights": [frac_str(w) for w in net.weights],
            "points": [list(p) for p in net.points],
        }
    if isinstance(net, MatrixNet):
        return {
            "kind": MATRIX,
            "labels": list(net.points),
            "matrix": [[frac_str(v) for v in row] for row in net._matrix],
        }
    raise StructuralError(f"cannot serialize net kind {net.kind!r}")


def net_from_json(data: dict) -> FiniteNet:
    kind = data.get("kind")
    if kind == CIRCLE:
        return CircleNet([as_fraction(p) for p in data["points"]], as_fraction(data.get("scale", 1)))
    if kind == TORUS:
        return TorusNet(
            [tuple(as_fraction(c) for c in p) for p in data["points"]],
            [as_fraction(s) for s in data["scales"]],
            data.get("metric", L1),
        )
    if kind == ULTRAMETRIC:
        return UltrametricNet(
            [tuple(p) for p in data["points"]],
            data["orders"],
            [as_fraction(w) for w in data["weights"]],
        )
    if kind == MATRIX:
        return MatrixNet(data["labels"], [[as_fraction(v) for v in row] for row in data["matrix"]])
    raise StructuralError(f"unknown net kind in JSON: {kind!r}")
