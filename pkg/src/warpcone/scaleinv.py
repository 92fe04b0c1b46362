"""Scale-dependent invariants: R-components, cover certificates for
dimension at a scale, separated-set sizes, and the ball-average witness
for the propagation property.

Certificates are one-sided by design: a returned coloring proves an
upper behavior at the probed scale, while a failed search proves
nothing.  Every certificate can be re-verified from scratch,
independently of how the search produced it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .arith import ONE, ZERO
from .errors import ValidationError
from .spaces import CircleNet, FiniteNet, TorusNet
from .warped import WarpedLevel

EXACT_SEPARATED_CAP = 64
DEFAULT_SWAP_BUDGET = 200


# -- R-components -------------------------------------------------------------


@dataclass(frozen=True)
class ComponentDecomposition:
    R: Fraction
    parts: tuple  # tuple of point tuples
    diameters: tuple  # per part, same order

    def max_diameter(self) -> Fraction:
        return max(self.diameters)


def r_components(net_or_level, subset=None, R=None) -> ComponentDecomposition:
    """Partition a point set by chaining pairs at distance < R."""
    if R is None:
        raise ValidationError("r_components needs the scale R")
    R = Fraction(R)
    if R <= 0:
        raise ValidationError("R must be positive")
    points = list(subset) if subset is not None else list(_points_of(net_or_level))
    if not points:
        raise ValidationError("subset must be nonempty")
    dist = _dist_of(net_or_level)

    parent = list(range(len(points)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if dist(points[i], points[j]) < R:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups: dict = {}
    for i in range(len(points)):
        groups.setdefault(find(i), []).append(points[i])
    parts = sorted(tuple(sorted(g, key=repr)) for g in groups.values())
    diameters = []
    for part in parts:
        diam = ZERO
        for a, b in itertools.combinations(part, 2):
            d = dist(a, b)
            if d > diam:
                diam = d
        diameters.append(diam)
    return ComponentDecomposition(R, tuple(parts), tuple(diameters))


def _points_of(space):
    return space.domain.points if isinstance(space, WarpedLevel) else space.points


def _dist_of(space):
    return space.dist


# -- separated sets -------------------------------------------------------------


def _cell_structure(net: FiniteNet, N: Fraction):
    """Coordinate bucketing with cell width at least N in the scaled
    metric, so points at distance < N sit in same or adjacent cells."""
    if isinstance(net, CircleNet):
        scales = (net.scale,)
        coords = lambda p: (p,)  # noqa: E731
    elif isinstance(net, TorusNet):
        scales = net.scales
        coords = lambda p: p  # noqa: E731
    else:
        return None
    cells = []
    for s in scales:
        k = int(s / N)  # floor; cell width s/k >= N
        if k < 3:
            return None
        cells.append(k)
    return scales, coords, tuple(cells)


def greedy_separated_set(net: FiniteNet, N) -> tuple:
    """Deterministic maximal N-separated subset.

    Equivalent to farthest-point selection with the selection distance
    capped at N and ties broken lexicographically: the scan starts at the
    lexicographically smallest point and keeps any point at distance at
    least N from everything selected so far.  Spatial cells of width N
    prune the distance checks exactly.
    """
    N = Fraction(N)
    if N <= 0:
        raise ValidationError("separation N must be positive")
    structure = _cell_structure(net, N)
    selected = []
    if structure is None:
        for p in net.points:
            if all(net.dist(p, q) >= N for q in selected):
                selected.append(p)
        return tuple(selected)
    _, coords, cells = structure
    buckets: dict = {}

    def cell_of(p):
        return tuple(int(c * k) % k for c, k in zip(coords(p), cells))

    def neighbor_cells(cell):
        ranges = [((c - 1) % k, c, (c + 1) % k) for c, k in zip(cell, cells)]
        return itertools.product(*ranges)

    for p in net.points:
        cell = cell_of(p)
        ok = True
        for nb in neighbor_cells(cell):
            for q in buckets.get(nb, ()):
                if net.dist(p, q) < N:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            selected.append(p)
            buckets.setdefault(cell, []).append(p)
    return tuple(selected)


def exact_separated_maximum(net: FiniteNet, N, cap: int = EXACT_SEPARATED_CAP) -> int | None:
    """Branch-and-bound maximum N-separated subset for small nets."""
    N = Fraction(N)
    pts = net.points
    n = len(pts)
    if n > cap:
        return None
    conflict = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if net.dist(pts[i], pts[j]) < N:
                conflict[i] |= 1 << j
                conflict[j] |= 1 << i
    order = sorted(range(n), key=lambda i: -bin(conflict[i]).count("1"))
    remap = [0] * n
    for new, old in enumerate(order):
        remap[old] = new
    adj = [0] * n
    for old in range(n):
        mask = 0
        c = conflict[old]
        while c:
            low = c & -c
            mask |= 1 << remap[low.bit_length() - 1]
            c ^= low
        adj[remap[old]] = mask

    best = len(greedy_separated_set(net, N))
    full = (1 << n) - 1

    def rec(candidates: int, count: int):
        nonlocal best
        if count + bin(candidates).count("1") <= best:
            return
        if candidates == 0:
            if count > best:
                best = count
            return
        low = candidates & -candidates
        v = low.bit_length() - 1
        rec(candidates & ~low & ~adj[v], count + 1)
        rec(candidates & ~low, count)

    rec(full, 0)
    return best


@dataclass(frozen=True)
class SeparatedSetResult:
    N: Fraction
    greedy: int
    exact: int | None
    selected: tuple


def vn_invariant(net: FiniteNet, N, exact_cap: int = EXACT_SEPARATED_CAP) -> SeparatedSetResult:
    """Greedy lower bound for the maximal N-separated cardinality, plus
    the exact value when the net is small enough to afford it."""
    N = Fraction(N)
    selected = greedy_separated_set(net, N)
    exact = exact_separated_maximum(net, N, cap=exact_cap)
    return SeparatedSetResult(N, len(selected), exact, selected)


# -- cover certificates ------------------------------------------------------------


@dataclass(frozen=True)
class CoverCertificate:
    R: Fraction
    colors: int
    assignment: tuple  # (point, color) pairs in net order
    S: Fraction

    def color_classes(self) -> list[list]:
        classes: list[list] = [[] for _ in range(self.colors)]
        for p, c in self.assignment:
            classes[c].append(p)
        return classes

    def to_json(self) -> dict:
        from .arith import frac_str

        return {
            "R": frac_str(self.R),
            "colors": self.colors,
            "assignment": [c for _, c in self.assignment],
            "S": frac_str(self.S),
        }


def verify_cover_certificate(net_or_level, cert: CoverCertificate) -> Fraction:
    """Recompute every R-component diameter from scratch; returns the true
    S and raises if the certificate misstates it."""
    worst = ZERO
    for cls in cert.color_classes():
        if not cls:
            continue
        decomposition = r_components(net_or_level, cls, cert.R)
        worst = max(worst, decomposition.max_diameter())
    if worst != cert.S:
        raise ValidationError(f"certificate S = {cert.S} but recomputation gives {worst}")
    return worst


def _ordering(net_or_level) -> list:
    pts = list(_points_of(net_or_level))
    space = net_or_level.domain if isinstance(net_or_level, WarpedLevel) else net_or_level
    if isinstance(space, CircleNet):
        return sorted(pts)
    dist = _dist_of(net_or_level)
    if len(pts) > 2000:
        return pts
    order = [pts[0]]
    remaining = pts[1:]
    gaps = {p: dist(p, pts[0]) for p in remaining}
    while remaining:
        far = max(remaining, key=lambda p: (gaps[p], repr(p)))
        order.append(far)
        remaining.remove(far)
        for p in remaining:
            d = dist(p, far)
            if d < gaps[p]:
                gaps[p] = d
    return order


def asdim_cover_search(
    net_or_level,
    R,
    d: int,
    budget: int = DEFAULT_SWAP_BUDGET,
) -> CoverCertificate:
    """Deterministic (d+1)-coloring heuristic with exact S.

    Blocks of diameter below 3R along a sweep (circles) or farthest-point
    ordering (everything else) are colored round-robin; local single-point
    recolorings then run until the budget is spent or no move lowers S.
    The result only certifies the achieved S; it never bounds the
    dimension from below.
    """
    R = Fraction(R)
    if R <= 0:
        raise ValidationError("R must be positive")
    if d < 0:
        raise ValidationError("d must be >= 0")
    colors = d + 1
    dist = _dist_of(net_or_level)
    order = _ordering(net_or_level)

    if colors == 1:
        assignment = [(p, 0) for p in _points_of(net_or_level)]
    else:
        space = net_or_level.domain if isinstance(net_or_level, WarpedLevel) else net_or_level
        if isinstance(space, CircleNet):
            circumference = space.scale
            if circumference <= 3 * R:
                assignment = [(p, 0) for p in _points_of(net_or_level)]
            else:
                arcs = 2 * max(1, math_ceil(circumference / (6 * R)))
                assignment = [
                    (p, int(p * arcs) % colors) for p in _points_of(net_or_level)
                ]
        else:
            assignment_map = {}
            color = 0
            block_start = 0
            for idx, p in enumerate(order):
                block = order[block_start:idx + 1]
                diam_ok = all(dist(p, q) < 3 * R for q in block[:-1])
                if not diam_ok:
                    color = (color + 1) % colors
                    block_start = idx
                assignment_map[p] = color
            assignment = [(p, assignment_map[p]) for p in _points_of(net_or_level)]

    def exact_s(pairs):
        worst = ZERO
        for c in range(colors):
            cls = [p for p, col in pairs if col == c]
            if cls:
                worst = max(worst, r_components(net_or_level, cls, R).max_diameter())
        return worst

    best_pairs = list(assignment)
    best_s = exact_s(best_pairs)
    moves = 0
    improved = True
    while improved and moves < budget and colors > 1:
        improved = False
        for idx, (p, col) in enumerate(best_pairs):
            for alt in range(colors):
                if alt == col:
                    continue
                trial = list(best_pairs)
                trial[idx] = (p, alt)
                s = exact_s(trial)
                moves += 1
                if s < best_s:
                    best_pairs, best_s = trial, s
                    improved = True
                    break
                if moves >= budget:
                    break
            if moves >= budget:
                break
    cert = CoverCertificate(R, colors, tuple(best_pairs), best_s)
    verify_cover_certificate(net_or_level, cert)
    return cert


def math_ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


# -- property-A ball average -------------------------------------------------------


def prop_a_ball_average(warped: WarpedLevel, R, S) -> Fraction:
    """Worst l1 gap between uniform measures on S-balls at centers within
    warped distance R.  The ball-average witness works at scale R exactly
    when this maximum stays at or below 1/R."""
    R, S = Fraction(R), Fraction(S)
    if S < R:
        raise ValidationError("the support radius S must be at least R")
    pts = _points_of(warped)
    balls = {}
    for x in pts:
        balls[x] = frozenset(z for z in pts if warped.dist(x, z) <= S)
    worst = ZERO
    for i, x in enumerate(pts):
        for y in pts[i:]:
            if warped.dist(x, y) > R:
                continue
            bx, by = balls[x], balls[y]
            ax, ay = Fraction(1, len(bx)), Fraction(1, len(by))
            gap = (
                abs(ax - ay) * len(bx & by)
                + ax * len(bx - by)
                + ay * len(by - bx)
            )
            if gap > worst:
                worst = gap
    return worst
