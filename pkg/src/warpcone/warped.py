"""Warped metric computation, the group-by-space covering, and
faithfulness-radius measurement.

Two routes compute warped distances.  The closed form minimizes
|g| + t*d(g.x, y) over group elements, enumerating word-length shells in
increasing order and stopping as soon as the shell length reaches the
best value found (sound because the identity already achieves t*d(x,y)).
The graph route runs single-source shortest paths over the domain with
implicit dense base edges t*d(x,y) and unit generator edges.  For
isometric actions the two agree exactly on closed domains, which the
test suite exercises as a zero-tolerance oracle.
"""

from __future__ import annotations

import hashlib
import json
import math
import pickle
from dataclasses import dataclass
from fractions import Fraction

from .actions import ActionSystem, RotationMap, action_to_json, apply
from .arith import ONE, ZERO, arc, frac_str, mod1
from .errors import (
    CapacityError,
    ClosureError,
    DomainMismatchError,
    UnsupportedConfigurationError,
    ValidationError,
)
from .groups import (
    FINITE_ABELIAN_PRODUCT,
    FINITE_CYCLIC,
    FREE_ABELIAN,
    Word,
    ball,
    inverse,
    multiply,
    shells_up_to,
    word_length,
)
from .spaces import CircleNet, FiniteNet, net_to_json

CLOSED_FORM = "closed_form"
GRAPH = "graph"
DEFAULT_ENUM_CAP = 10**6


def _rotation_angle_vector(sys: ActionSystem):
    """Positive-generator angles when every marked generator rotates the
    circle; lets the shell scan skip the generic apply dispatch."""
    if not isinstance(sys.space, CircleNet):
        return None
    maps = dict(sys.generator_maps)
    if not all(isinstance(m, RotationMap) for m in maps.values()):
        return None
    kind = sys.group.kind
    if kind == FREE_ABELIAN:
        return [maps[f"e{i + 1}"].angle for i in range(sys.group.params[0])]
    if kind == FINITE_CYCLIC:
        return [maps["g"].angle] if sys.group.params[0] > 1 else []
    if kind == FINITE_ABELIAN_PRODUCT:
        return [
            maps[f"g{i + 1}"].angle if q > 1 else ZERO
            for i, q in enumerate(sys.group.params)
        ]
    return None


def displacement_infimum(sys: ActionSystem, t, x, y, cap: int = DEFAULT_ENUM_CAP) -> Fraction:
    """min over group elements g of |g| + t*d(g.x, y), computed exactly.

    The minimum is over the whole group: any g with |g| at least the
    current best cannot improve, and the identity seeds the best with
    t*d(x,y), so shells are enumerated only up to that moving cutoff.
    Equals the warped distance when the action is isometric; for
    non-isometric Lipschitz actions it is the two-sided comparison value
    of the sandwich inequality.
    """
    t = Fraction(t)
    base = sys.space
    best = t * base.dist(x, y)
    if best == 0:
        return ZERO
    radius = math.ceil(best)
    angles = _rotation_angle_vector(sys)
    if angles is not None:
        ell = t * base.scale
        for length, words in shells_up_to(sys.group, radius, cap):
            if length >= best:
                break
            for w in words:
                moved = x + sum(n * a for n, a in zip(w.nf, angles) if n)
                cand = length + ell * arc(moved, y)
                if cand < best:
                    best = cand
        return best
    for length, words in shells_up_to(sys.group, radius, cap):
        if length >= best:
            break
        for w in words:
            cand = length + t * base.dist(apply(sys, w, x), y)
            if cand < best:
                best = cand
    return best


class WarpedLevel:
    """One level of the warped cone: a scale t, a domain net, and the
    warped distances over it (computed lazily, cached idempotently)."""

    def __init__(self, t, domain: FiniteNet, method: str, lookup, sys: ActionSystem | None = None):
        self.t = Fraction(t)
        self.domain = domain
        self.method = method
        self._lookup = lookup
        self.system = sys

    def dist(self, x, y) -> Fraction:
        if x not in self.domain or y not in self.domain:
            raise DomainMismatchError(f"point outside the warped domain: {x!r} or {y!r}")
        if x == y:
            return ZERO
        return self._lookup(x, y)

    def pairs(self):
        pts = self.domain.points
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                yield pts[i], pts[j], self.dist(pts[i], pts[j])

    def __repr__(self):
        return f"WarpedLevel(t={self.t}, {len(self.domain)} points, {self.method})"


def _rotation_profile(sys: ActionSystem, domain: FiniteNet):
    """Translation-invariant fast path: for abelian groups of circle
    rotations the warped distance depends only on the coordinate
    difference, so one evaluation per difference class serves all pairs."""
    if not isinstance(domain, CircleNet) or not isinstance(sys.space, CircleNet):
        return None
    if sys.group.kind not in (FREE_ABELIAN, FINITE_CYCLIC, FINITE_ABELIAN_PRODUCT):
        return None
    if not all(isinstance(m, RotationMap) for _, m in sys.generator_maps):
        return None
    return True


def warped_distance_closed_form(sys: ActionSystem, t, x, y, cap: int = DEFAULT_ENUM_CAP) -> Fraction:
    """Exact warped distance for an isometric system."""
    if not sys.isometric:
        raise UnsupportedConfigurationError(
            "closed-form warped distance needs a verified isometric action"
        )
    return displacement_infimum(sys, t, x, y, cap)


def warped_level_closed_form(
    sys: ActionSystem, t, domain: FiniteNet | None = None, cap: int = DEFAULT_ENUM_CAP
) -> WarpedLevel:
    if not sys.isometric:
        raise UnsupportedConfigurationError(
            "closed-form warped levels need a verified isometric action"
        )
    domain = domain if domain is not None else sys.space
    t = Fraction(t)
    cache: dict = {}
    if _rotation_profile(sys, domain):

        def lookup(x, y, _cache=cache):
            # d(x, y) depends only on the difference, and negating it
            # corresponds to inverting the group element, so one
            # representative per unordered difference class suffices;
            # integer keys sidestep Fraction hashing
            delta = mod1(y - x)
            if 2 * delta > 1:
                delta = mod1(-delta)
            key = (delta.numerator, delta.denominator)
            d = _cache.get(key)
            if d is None:
                d = displacement_infimum(sys, t, ZERO, delta, cap)
                _cache[key] = d
            return d

    else:

        def lookup(x, y, _cache=cache):
            # isometric warped distances are symmetric; one canonical
            # orientation per pair (points within a net are comparable)
            try:
                key = (x, y) if x <= y else (y, x)
            except TypeError:
                key = (x, y) if repr(x) <= repr(y) else (y, x)
            d = _cache.get(key)
            if d is None:
                d = displacement_infimum(sys, t, key[0], key[1], cap)
                _cache[key] = d
            return d

    return WarpedLevel(t, domain, CLOSED_FORM, lookup, sys)


def warped_distance_graph(
    sys: ActionSystem,
    t,
    domain: FiniteNet | None = None,
    r_path: int | None = None,
) -> WarpedLevel:
    """Shortest-path warped distances over the domain graph.

    Nodes are the domain points; every pair carries an implicit base edge
    of weight t*d(x, y) and every generator a unit edge (x, s.x).  Runs a
    dense single-source sweep per node (array minimum selection; a heap
    only slows dense graphs down), keeping O(n) state per source.  Tracks
    the generator-jump count of the chosen paths and raises when it
    exceeds ``r_path``, which signals that the domain's closure radius
    cannot certify the result.
    """
    domain = domain if domain is not None else sys.space
    t = Fraction(t)
    pts = domain.points
    n = len(pts)
    index = {p: i for i, p in enumerate(pts)}
    base = [[None] * n for _ in range(n)]
    for i in range(n):
        base[i][i] = ZERO
        for j in range(i + 1, n):
            d = t * domain.dist(pts[i], pts[j])
            base[i][j] = d
            base[j][i] = d
    unit_edges: list[list[int]] = [[] for _ in range(n)]
    for _, gmap in sys.generator_maps:
        for i, p in enumerate(pts):
            img = gmap.apply(p)
            j = index.get(img)
            if j is not None and j != i:
                unit_edges[i].append(j)
    if r_path is None:
        r_path = math.ceil(t * domain.diameter())

    table: dict = {}
    for src in range(n):
        dist = base[src][:]
        jumps = [0] * n
        done = [False] * n
        for _ in range(n):
            u = -1
            du = None
            for v in range(n):
                if not done[v] and (du is None or dist[v] < du):
                    u, du = v, dist[v]
            done[u] = True
            for v in range(n):
                if done[v]:
                    continue
                cand = du + base[u][v]
                if cand < dist[v] or (cand == dist[v] and jumps[u] < jumps[v]):
                    dist[v] = cand
                    jumps[v] = jumps[u]
            for v in unit_edges[u]:
                if done[v]:
                    continue
                cand = du + 1
                if cand < dist[v] or (cand == dist[v] and jumps[u] + 1 < jumps[v]):
                    dist[v] = cand
                    jumps[v] = jumps[u] + 1
        worst = max(jumps)
        if worst > r_path:
            raise ClosureError(
                f"a shortest path uses {worst} generator jumps, beyond the closure radius",
                required_radius=worst,
            )
        for j in range(src + 1, n):
            table[(src, j)] = dist[j]

    def lookup(x, y, _table=table, _index=index):
        i, j = _index[x], _index[y]
        return _table[(i, j) if i < j else (j, i)]

    return WarpedLevel(t, domain, GRAPH, lookup, sys)


def stabilized_distance(sys: ActionSystem, x, y, max_radius: int = 64, cap: int = DEFAULT_ENUM_CAP):
    """Minimal word length carrying x to y, or None when the points are in
    different orbits as far as the enumeration reaches (diverging limit)."""
    if x == y:
        return 0
    for length, words in shells_up_to(sys.group, max_radius, cap):
        for w in words:
            if apply(sys, w, x) == y:
                return length
    return None


# -- covering levels -----------------------------------------------------------


@dataclass(frozen=True)
class CoveringLevel:
    """The product Gamma x tY over a finite group window, with the metric
    |gamma' gamma^-1| + t d(y, y') and projection (gamma, ty) -> gamma(ty)."""

    sys: ActionSystem
    t: Fraction
    r_max: int
    domain: FiniteNet
    homogeneous: bool

    def d1(self, a, b) -> Fraction:
        ga, ya = a
        gb, yb = b
        return word_length(multiply(gb, inverse(ga, self.sys.group), self.sys.group), self.sys.group) + self.t * self.domain.dist(ya, yb)

    def pi(self, a):
        g, y = a
        return apply(self.sys, g, y)

    def group_window(self):
        return ball(self.sys.group, self.r_max)

    def points(self):
        for g in self.group_window():
            for y in self.domain.points:
                yield (g, y)


def _uniform_circle_grid(domain: FiniteNet) -> bool:
    if not isinstance(domain, CircleNet) or len(domain) < 2:
        return False
    pts = domain.points
    gaps = {mod1(b - a) for a, b in zip(pts, pts[1:])}
    gaps.add(mod1(pts[0] - pts[-1]))
    return len(gaps) == 1


def covering_level(sys: ActionSystem, t, r_max: int, domain: FiniteNet | None = None) -> CoveringLevel:
    """Build the covering over the group ball of radius r_max.

    Needs an isometric action (the product form of the covering metric is
    exact only then) and a domain closed under words of length r_max.
    """
    if not sys.isometric:
        raise UnsupportedConfigurationError("covering levels need an isometric action")
    domain = domain if domain is not None else sys.space
    for w in ball(sys.group, 1):
        for y in domain.points:
            if apply(sys, w, y) not in domain:
                raise ClosureError(
                    f"domain is not closed under generator {w!r}; build an orbit closure first"
                )
    homogeneous = bool(_rotation_profile(sys, domain)) and _uniform_circle_grid(domain)
    return CoveringLevel(sys, Fraction(t), r_max, domain, homogeneous)


@dataclass(frozen=True)
class FaithfulnessResult:
    radius: int
    probe: int
    r_max: int
    witness: tuple | None  # ("pair", a, b) or ("missing", center, point)
    domain_size: int

    @property
    def is_local_isometry_up_to_probe(self) -> bool:
        return self.radius >= self.probe


def faithfulness_radius(cov: CoveringLevel, warped: WarpedLevel, r_probe: int) -> FaithfulnessResult:
    """Largest R <= r_probe at which the projection restricts to an
    isometry from every R-ball of the covering onto the matching R-ball
    of the warped level, relative to the computed window.

    Centers stay r_max - R deep inside the group window so their balls
    are complete; for homogeneous rotation systems on uniform grids, one
    canonical center represents all of them (violations transport under
    the translation symmetry).
    """
    if cov.domain.points != warped.domain.points or cov.t != warped.t:
        raise DomainMismatchError("covering and warped level must share domain and t")
    if r_probe < 1:
        raise ValidationError("probe radius must be >= 1")
    if r_probe > cov.r_max:
        raise ValidationError("probe radius exceeds the covering window r_max")
    group = cov.sys.group
    identity = group.identity()

    for radius in range(1, r_probe + 1):
        if cov.homogeneous:
            centers = [(identity, cov.domain.points[0])]
        else:
            centers = [
                (g, y)
                for g in ball(group, cov.r_max - radius)
                for y in cov.domain.points
            ]
        window = ball(group, radius)
        for center in centers:
            members = []
            for w in window:
                g = multiply(w, center[0], group)
                wl = word_length(w, group)
                for y in cov.domain.points:
                    if wl + cov.t * cov.domain.dist(center[1], y) <= radius:
                        members.append((g, y))
            members.sort(key=lambda m: (m[0], m[1]))
            images = [cov.pi(m) for m in members]
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    upstairs = cov.d1(members[i], members[j])
                    downstairs = warped.dist(images[i], images[j]) if images[i] != images[j] else ZERO
                    if upstairs != downstairs:
                        return FaithfulnessResult(
                            radius - 1,
                            r_probe,
                            cov.r_max,
                            ("pair", members[i], members[j]),
                            len(cov.domain),
                        )
            center_image = cov.pi(center)
            covered = set(images)
            for z in warped.domain.points:
                if warped.dist(center_image, z) <= radius and z not in covered:
                    return FaithfulnessResult(
                        radius - 1,
                        r_probe,
                        cov.r_max,
                        ("missing", center, z),
                        len(cov.domain),
                    )
    return FaithfulnessResult(r_probe, r_probe, cov.r_max, None, len(cov.domain))


# -- export and cache ------------------------------------------------------------


def warped_to_csv(level: WarpedLevel, path) -> None:
    import csv

    pts = level.domain.points
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([str(p) for p in pts])
        for x in pts:
            writer.writerow([frac_str(level.dist(x, y)) if x != y else "0" for y in pts])


def warped_cache_key(sys: ActionSystem, t, domain: FiniteNet) -> str:
    payload = {
        "system": action_to_json(sys),
        "t": frac_str(Fraction(t)),
        "domain": net_to_json(domain),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def save_warped_cache(level: WarpedLevel, directory) -> str:
    """Materialize the full table and store it keyed by content hash."""
    from pathlib import Path

    if level.system is None:
        raise ValidationError("cannot cache a level without its source system")
    key = warped_cache_key(level.system, level.t, level.domain)
    table = {}
    for x, y, d in level.pairs():
        table[(level.domain.index(x), level.domain.index(y))] = d
    path = Path(directory) / f"{key}.bin"
    with open(path, "wb") as fh:
        pickle.dump({"t": level.t, "method": level.method, "table": table}, fh)
    return str(path)


def load_warped_cache(sys: ActionSystem, t, domain: FiniteNet, directory) -> WarpedLevel | None:
    from pathlib import Path

    key = warped_cache_key(sys, Fraction(t), domain)
    path = Path(directory) / f"{key}.bin"
    if not path.exists():
        return None
    with open(path, "rb") as fh:
        blob = pickle.load(fh)
    table = blob["table"]

    def lookup(x, y, _table=table, _domain=domain):
        i, j = _domain.index(x), _domain.index(y)
        return _table[(i, j) if i < j else (j, i)]

    return WarpedLevel(blob["t"], domain, blob["method"], lookup, sys)
