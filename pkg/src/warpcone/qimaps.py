"""Explicit metric maps and empirical distortion measurement.

A MetricMap is a total assignment from the points of a source space to a
target space (either plain nets or warped levels).  measure_distortion
searches the half-integer additive grid for the smallest A admitting a
finite multiplicative constant, then solves C exactly from the binding
pairs; together with the exact co-density and a bucketed distance
profile this gives the full embedding report.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .actions import ActionSystem, PermutationMap, RotationMap, action_system, apply
from .arith import ONE, ZERO, frac_str, mod1, modinv
from .errors import (
    ClosureError,
    DistortionBudgetError,
    DomainMismatchError,
    NonFreeTargetError,
    OrbitPreservationError,
    UnsupportedConfigurationError,
    ValidationError,
)
from .groups import (
    FINITE_ABELIAN_PRODUCT,
    FINITE_CYCLIC,
    GroupSpec,
    Word,
    ball,
    inverse,
    multiply,
    word_length,
)
from .spaces import FiniteNet, QuotientNet, quotient_by_finite_group
from .warped import WarpedLevel, warped_level_closed_form

DEFAULT_A_MAX = Fraction(8)
PROFILE_BUCKETS = 8


def _space_points(space):
    return space.domain.points if isinstance(space, WarpedLevel) else space.points


def _space_dist(space, x, y):
    return space.dist(x, y)


def _fast_dist_fn(space):
    """Distance callable without per-call domain membership checks; safe
    when the caller only feeds points taken from the space itself."""
    if isinstance(space, WarpedLevel):
        lookup = space._lookup

        def dist(x, y):
            return ZERO if x == y else lookup(x, y)

        return dist
    return space.dist


@dataclass(frozen=True)
class MetricMap:
    source: object
    target: object
    assignment: tuple  # ordered (source point, image) pairs

    def __post_init__(self):
        pts = _space_points(self.source)
        given = dict(self.assignment)
        missing = [p for p in pts if p not in given]
        if missing:
            raise ValidationError(f"assignment misses {len(missing)} source points")

    def image_of(self, x):
        table = getattr(self, "_table", None)
        if table is None:
            table = dict(self.assignment)
            object.__setattr__(self, "_table", table)
        return table[x]

    @staticmethod
    def from_function(source, target, fn) -> "MetricMap":
        pts = _space_points(source)
        return MetricMap(source, target, tuple((p, fn(p)) for p in pts))


@dataclass(frozen=True)
class DistortionReport:
    C: Fraction
    A: Fraction
    codensity: Fraction
    buckets: tuple  # (lo, hi, min_image, max_image) per nonempty bucket

    def to_json(self) -> dict:
        return {
            "C": frac_str(self.C),
            "A": frac_str(self.A),
            "codensity": frac_str(self.codensity),
            "buckets": [
                {
                    "lo": frac_str(lo),
                    "hi": frac_str(hi),
                    "min": frac_str(mn),
                    "max": frac_str(mx),
                }
                for lo, hi, mn, mx in self.buckets
            ],
        }


def _constants_for(pair_data, additive: Fraction):
    """One pass over source pair distances: the minimal C for this A, or
    None when a pair has no finite constant.

    Divisions run only when a pair improves the running constant;
    everything else is a multiply-and-compare.
    """
    c_best = ONE
    for d_src, d_img in pair_data:
        slack = d_img + additive
        if slack == 0:
            return None
        if d_img - additive > c_best * d_src:
            c_best = (d_img - additive) / d_src
        if d_src > c_best * slack:
            c_best = d_src / slack
    return c_best


def measure_distortion(
    metric_map: MetricMap,
    a_max: Fraction = DEFAULT_A_MAX,
    c_max: Fraction | None = None,
    bucket_count: int = PROFILE_BUCKETS,
    fixed_c: Fraction | None = None,
) -> DistortionReport:
    """Measure (C, A), co-density, and the distance profile of a map.

    By default A runs over the half-integer grid {0, 1/2, ..., a_max} and
    the smallest value admitting a finite C wins (when ``c_max`` is set,
    the smallest whose exact C stays within it); C is then the exact
    maximum of the binding ratios over every source pair, clamped below
    by 1.  With ``fixed_c`` the multiplicative constant is pinned instead
    and the exact minimal additive constant for it is returned, which is
    how projections expected to be 1-Lipschitz are scored.
    """
    source, target = metric_map.source, metric_map.target
    pts = _space_points(source)
    if len(pts) < 2:
        raise ValidationError("distortion needs at least two source points")
    a_max = Fraction(a_max)

    pair_data = _invariant_pair_classes(metric_map)
    if pair_data is None:
        src_dist = _fast_dist_fn(source)
        tgt_dist = _fast_dist_fn(target)
        pair_data = []
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                x, y = pts[i], pts[j]
                d_src = src_dist(x, y)
                d_img = tgt_dist(metric_map.image_of(x), metric_map.image_of(y))
                pair_data.append((d_src, d_img))

    if fixed_c is not None:
        c_value = Fraction(fixed_c)
        if c_value < 1:
            raise ValidationError("the multiplicative constant must be >= 1")
        additive = ZERO
        for d_src, d_img in pair_data:
            need = max(d_img - c_value * d_src, d_src / c_value - d_img)
            if need > additive:
                additive = need
    else:
        grid = []
        step = Fraction(1, 2)
        a = Fraction(0)
        while a <= a_max:
            grid.append(a)
            a += step
        chosen = None
        for additive in grid:
            c_value = _constants_for(pair_data, additive)
            if c_value is None:
                continue
            if c_max is not None and c_value > c_max:
                continue
            chosen = (additive, c_value)
            break
        if chosen is None:
            violation = None
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    x, y = pts[i], pts[j]
                    if _space_dist(target, metric_map.image_of(x), metric_map.image_of(y)) == 0:
                        violation = (x, y)
                        break
                if violation:
                    break
            raise DistortionBudgetError(
                f"not a quasi-isometric embedding at additive budget {a_max}"
                + (f" and C cap {c_max}" if c_max is not None else ""),
                pair=violation,
            )
        additive, c_value = chosen

    image = sorted({metric_map.image_of(p) for p in pts}, key=repr)
    codensity = _codensity(target, image)

    diam = max(d for d, _ in pair_data)
    buckets = []
    width = diam / bucket_count if diam > 0 else ONE
    for k in range(bucket_count):
        lo, hi = k * width, (k + 1) * width
        members = [
            d_img
            for d_src, d_img in pair_data
            if lo <= d_src < hi or (k == bucket_count - 1 and d_src == hi)
        ]
        if members:
            buckets.append((lo, hi, min(members), max(members)))
    return DistortionReport(c_value, additive, codensity, tuple(buckets))


def _invariant_pair_classes(metric_map: MetricMap):
    """Exact reduction of the pair scan to difference classes.

    Applies only when every precondition is verified outright: the source
    is a rotation-backed warped level over a uniform circle grid (its
    distance depends only on the coordinate difference), the target
    metric is translation invariant (a torus, or another rotation-backed
    warped level), and the assignment advances by a constant step along
    the grid (checked on all n consecutive pairs, which forces
    phi(y) - phi(x) to depend on y - x only).  Then the distinct
    (d_src, d_img) values over all pairs are exactly those of the
    difference classes k = 1 .. n//2, and the measured constants,
    buckets, and report are identical to the full scan.
    """
    from .spaces import CircleNet, TorusNet
    from .warped import CLOSED_FORM

    source, target = metric_map.source, metric_map.target

    def invariant_level(space):
        return (
            isinstance(space, WarpedLevel)
            and space.method == CLOSED_FORM
            and isinstance(space.domain, CircleNet)
            and space.system is not None
            and all(isinstance(m, RotationMap) for _, m in space.system.generator_maps)
        )

    if not invariant_level(source):
        return None
    if not (isinstance(target, TorusNet) or invariant_level(target)):
        return None
    pts = _space_points(source)
    n = len(pts)
    if n < 3:
        return None
    spacing = pts[1] - pts[0]
    for a, b in zip(pts, pts[1:]):
        if b - a != spacing:
            return None
    if mod1(pts[0] + 1 - pts[-1]) != spacing:
        return None

    def image_step(x, y):
        ix, iy = metric_map.image_of(x), metric_map.image_of(y)
        if isinstance(ix, tuple):
            return tuple(mod1(b - a) for a, b in zip(ix, iy))
        return mod1(iy - ix)

    step = image_step(pts[0], pts[1])
    for a, b in zip(pts[1:], pts[2:]):
        if image_step(a, b) != step:
            return None
    if image_step(pts[-1], pts[0]) != step:
        return None

    src_dist = _fast_dist_fn(source)
    tgt_dist = _fast_dist_fn(target)
    base = pts[0]
    base_img = metric_map.image_of(base)
    classes = []
    for k in range(1, n // 2 + 1):
        other = pts[k]
        classes.append((src_dist(base, other), tgt_dist(base_img, metric_map.image_of(other))))
    return classes


def _codensity(target, image) -> Fraction:
    """Exact sup over target points of the distance to the image set.

    Image members are excluded in O(1); for torus targets the image is
    sorted by its first coordinate and each scan expands outward from the
    insertion point, stopping once the first-coordinate term alone rules
    out every remaining candidate.
    """
    from .spaces import TorusNet

    image_set = set(image)
    points = [z for z in _space_points(target) if z not in image_set]
    if not points:
        return ZERO
    codensity = ZERO
    if isinstance(target, TorusNet) and len(image) > 8:
        import bisect

        ordered = sorted(image)
        firsts = [w[0] for w in ordered]
        s0 = target.scales[0]
        n = len(ordered)
        for z in points:
            # two-pointer sweep in nondecreasing first-coordinate arc:
            # the closest unvisited candidate is always at one end of the
            # unvisited cyclic interval, so the sweep can stop as soon as
            # the first-coordinate term alone reaches the running minimum
            right = bisect.bisect_left(firsts, z[0]) % n
            left = (right - 1) % n
            best = None
            for _ in range(n):
                arc_r = _arc_gap(z[0], firsts[right])
                arc_l = _arc_gap(z[0], firsts[left])
                if arc_r <= arc_l:
                    idx, gap = right, arc_r
                    right = (right + 1) % n
                else:
                    idx, gap = left, arc_l
                    left = (left - 1) % n
                if best is not None and s0 * gap >= best:
                    break
                d = target.dist(z, ordered[idx])
                if best is None or d < best:
                    best = d
            if best > codensity:
                codensity = best
        return codensity
    for z in points:
        best = None
        for w in image:
            d = _space_dist(target, z, w)
            if best is None or d < best:
                best = d
                if best <= codensity:
                    break  # cannot raise the running maximum
        if best > codensity:
            codensity = best
    return codensity


def _arc_gap(value, other) -> Fraction:
    d = abs(value - other)
    return d if 2 * d <= 1 else 1 - d


# -- the torus embedding -------------------------------------------------------


@dataclass(frozen=True)
class IotaMap:
    metric_map: MetricMap
    q: int
    ls: tuple[int, ...]
    p_primes: tuple[int, ...]
    r_primes: tuple[int, ...]
    rs: tuple[int, ...]


def build_iota(
    q: int,
    ps,
    factorization,
    l,
    source: WarpedLevel,
    target,
    certificate,
    sample_seed: int = 0,
) -> IotaMap:
    """The circle-to-torus comparison map z -> (q z, r_1 z, ..., r_m z).

    Each r_i is r_i' * prod_{j != i} l_j, chosen so that the whole product
    inverts p_i' modulo l_i; the map then shifts the i-th auxiliary
    coordinate by exactly n_i / l_i when the i-th group generator acts,
    which is spot-verified on a deterministic sample.  ``certificate``
    must be the passing result of verify_technical_conditions.
    """
    ok = certificate[0] if isinstance(certificate, tuple) else bool(certificate)
    if not ok:
        raise ValidationError("technical-condition certificate absent or failed")
    ps = [int(p) for p in ps]
    ls = [int(x) for x in factorization]
    p_primes = []
    r_primes = []
    rs = []
    for i, (p, li) in enumerate(zip(ps, ls)):
        others = 1
        for j, lj in enumerate(ls):
            if j != i:
                others *= lj
        if p % others:
            raise ValidationError(f"p_{i + 1} is not a multiple of the complementary factors")
        p_prime = p // others
        in_range = (1 <= p_prime <= li - 1) if li > 1 else (p_prime == 1)
        if not in_range:
            raise ValidationError(f"reduced numerator p'_{i + 1} = {p_prime} out of range")
        r_prime = modinv(p_prime * others, li) if li > 1 else 1
        p_primes.append(p_prime)
        r_primes.append(r_prime)
        rs.append(r_prime * others)

    def iota(z):
        return (mod1(q * z),) + tuple(mod1(r * z) for r in rs)

    metric_map = MetricMap.from_function(source, target, iota)

    rng = random.Random(sample_seed)
    pts = _space_points(source)
    betas = [Fraction(p, q) for p in ps]
    for _ in range(min(64, 8 * len(pts))):
        z = pts[rng.randrange(len(pts))]
        n = [rng.randrange(-3, 4) for _ in range(len(ps))]
        moved = mod1(z + sum(ni * bi for ni, bi in zip(n, betas)))
        expected = (mod1(q * z),) + tuple(
            mod1(r * z + Fraction(ni, li)) for r, ni, li in zip(rs, n, ls)
        )
        if iota(moved) != expected:
            raise ValidationError("equivariance identity failed; certificate is stale")
    return IotaMap(metric_map, q, tuple(ls), tuple(p_primes), tuple(r_primes), tuple(rs))


# -- angle substitution ---------------------------------------------------------


@dataclass(frozen=True)
class SubstitutionReport:
    metric_map: MetricMap
    distortion: DistortionReport
    k_bound: Fraction | None
    within_bound: bool | None


def certified_substitution_gap(t, alpha_bounds, beta) -> Fraction:
    """Exact upper bound for t*|alpha - beta| from a value bracket."""
    t = Fraction(t)
    lo, hi = (
        alpha_bounds if isinstance(alpha_bounds, tuple) else (alpha_bounds, alpha_bounds)
    )
    beta = Fraction(beta)
    return t * max(abs(lo - beta), abs(hi - beta))


def substitute_angle(
    source: WarpedLevel, target: WarpedLevel, k_bound=None, a_max=DEFAULT_A_MAX
) -> SubstitutionReport:
    """Identity-on-points comparison of two warped levels at the same t.

    When ``k_bound`` certifies t*|alpha - beta| <= K, the bi-Lipschitz
    constant of the identity is at most K + 1; the measured C is compared
    against that bound and flagged.
    """
    if _space_points(source) != _space_points(target):
        raise DomainMismatchError("substitution needs identical point sets")
    if source.t != target.t:
        raise DomainMismatchError("substitution needs matching level parameters")
    metric_map = MetricMap.from_function(source, target, lambda z: z)
    report = measure_distortion(metric_map, a_max=a_max)
    if k_bound is None:
        return SubstitutionReport(metric_map, report, None, None)
    k_bound = Fraction(k_bound)
    return SubstitutionReport(metric_map, report, k_bound, report.C <= k_bound + 1)


# -- quotients by finite subgroups ------------------------------------------------


@dataclass(frozen=True)
class QuotientMapResult:
    metric_map: MetricMap
    distortion: DistortionReport
    source_level: WarpedLevel
    quotient_level: WarpedLevel
    quotient_system: ActionSystem
    orbit_diameter: Fraction  # warped diameter of the largest subgroup orbit


def _subgroup_closed(group: GroupSpec, words) -> bool:
    words = set(words)
    if group.identity() not in words:
        return False
    for a in words:
        if inverse(a, group) not in words:
            return False
        for b in words:
            if multiply(a, b, group) not in words:
                return False
    return True


def _quotient_group(group: GroupSpec, subgroup) -> tuple[GroupSpec, Word | None]:
    """Quotient group spec plus the word of its canonical generator's
    preimage (None for the trivial quotient)."""
    order = len(subgroup)
    if group.kind == FINITE_CYCLIC:
        n = group.params[0]
        if n % order:
            raise ValidationError("subgroup size does not divide the group order")
        q = n // order
        if q == 1:
            return GroupSpec.finite_cyclic(1), None
        return GroupSpec.finite_cyclic(q), Word((1,))
    if group.kind == FINITE_ABELIAN_PRODUCT:
        total = 1
        for o in group.params:
            total *= o
        if order == total:
            return GroupSpec.finite_cyclic(1), None
        if order == 1:
            raise ValidationError("trivial subgroup quotient is the system itself")
    raise UnsupportedConfigurationError(
        "quotient groups are supported for finite cyclic groups and full finite groups"
    )


def quotient_map(sys: ActionSystem, t, subgroup_words, a_max=DEFAULT_A_MAX) -> QuotientMapResult:
    """Project a warped level to the quotient by a finite isometric
    normal subgroup and measure the distortion of the projection.

    The projection is 1-Lipschitz and decreases distances by at most the
    warped diameter of a subgroup orbit, so the expected report is C = 1
    with A below that diameter.
    """
    if not sys.isometric:
        raise UnsupportedConfigurationError("quotient maps need an isometric action")
    group = sys.group
    subgroup = sorted(set(subgroup_words))
    if not _subgroup_closed(group, subgroup):
        raise ValidationError("the given words do not form a subgroup")
    gens = [w for _, w in group.generators()]
    for g in gens:
        gi = inverse(g, group)
        for f in subgroup:
            if multiply(multiply(g, f, group), gi, group) not in set(subgroup):
                raise ValidationError("subgroup is not normal")

    pts = sys.space.points
    orbit_of = {}
    orbits = []
    for p in pts:
        if p in orbit_of:
            continue
        members = sorted({apply(sys, f, p) for f in subgroup})
        orbit = tuple(members)
        orbits.append(orbit)
        for mpt in members:
            orbit_of[mpt] = orbit
    quotient_net = quotient_by_finite_group(sys.space, orbits)

    quotient_spec, gen_preimage = _quotient_group(group, subgroup)
    maps = {}
    if gen_preimage is not None:
        table = {}
        for orbit in quotient_net.points:
            image_point = apply(sys, gen_preimage, orbit[0])
            images = {quotient_net.class_of(apply(sys, gen_preimage, m)) for m in orbit}
            if len(images) != 1:
                raise ValidationError("induced quotient action is not well defined")
            table[orbit] = quotient_net.class_of(image_point)
        fwd = PermutationMap(table)
        maps["g"] = fwd
        if quotient_spec.params[0] > 2:
            maps["-g"] = fwd.inverse()
    quotient_sys = action_system(quotient_spec, quotient_net, maps)
    if not quotient_sys.isometric:
        raise UnsupportedConfigurationError("induced quotient action is not isometric")

    source_level = warped_level_closed_form(sys, t)
    quotient_level = warped_level_closed_form(quotient_sys, t)
    metric_map = MetricMap.from_function(
        source_level, quotient_level, lambda x: quotient_net.class_of(x)
    )
    # the projection is 1-Lipschitz by construction; score the exact
    # additive constant at C = 1 rather than walking the additive grid
    report = measure_distortion(metric_map, a_max=a_max, fixed_c=ONE)
    orbit_diam = ZERO
    for orbit in quotient_net.points:
        for i in range(len(orbit)):
            for j in range(i + 1, len(orbit)):
                d = source_level.dist(orbit[i], orbit[j])
                if d > orbit_diam:
                    orbit_diam = d
    return QuotientMapResult(
        metric_map, report, source_level, quotient_level, quotient_sys, orbit_diam
    )


# -- cocycles --------------------------------------------------------------------


@dataclass(frozen=True)
class Cocycle:
    table: tuple  # ((gamma, y, delta), ...) sorted
    source_group: GroupSpec
    target_group: GroupSpec
    radius: int

    def delta(self, gamma: Word, y) -> Word:
        lookup = getattr(self, "_lookup", None)
        if lookup is None:
            lookup = {(g, y0): d for g, y0, d in self.table}
            object.__setattr__(self, "_lookup", lookup)
        return lookup[(gamma, y)]

    def constant_in_y(self) -> bool:
        per_gamma: dict = {}
        for g, _, d in self.table:
            per_gamma.setdefault(g, set()).add(d)
        return all(len(vals) == 1 for vals in per_gamma.values())

    def homomorphism(self) -> dict | None:
        """gamma -> delta when the cocycle is observed constant in y on
        this domain; no connectedness claim is implied."""
        if not self.constant_in_y():
            return None
        out = {}
        for g, _, d in self.table:
            out[g] = d
        return out

    def kernel(self) -> list[Word]:
        hom = self.homomorphism()
        if hom is None:
            return []
        identity = self.target_group.identity()
        return sorted(g for g, d in hom.items() if d == identity)


def extract_cocycle(
    metric_map: MetricMap,
    source_sys: ActionSystem,
    target_sys: ActionSystem,
    radius: int,
    delta_bound: int = 8,
) -> Cocycle:
    """Solve f(g.y) = delta(g, y).f(y) exactly for every g in the radius
    ball and every domain point.

    The solution is found by scanning the target ball of radius
    ``delta_bound``; zero matches mean the map does not preserve orbits,
    two or more mean the target action is not free at the probed scale.
    """
    src_pts = _space_points(metric_map.source)
    src_set = set(src_pts)
    candidates = ball(target_sys.group, delta_bound)
    rows = []
    for gamma in ball(source_sys.group, radius):
        for y in src_pts:
            moved = apply(source_sys, gamma, y)
            if moved not in src_set:
                raise ClosureError(
                    f"domain is not closed under the ball: {gamma!r} moves {y!r} outside"
                )
            lhs = metric_map.image_of(moved)
            base = metric_map.image_of(y)
            matches = [d for d in candidates if apply(target_sys, d, base) == lhs]
            if not matches:
                raise OrbitPreservationError(
                    f"no target element carries f({y!r}) to f({gamma!r}.{y!r})",
                    gamma=gamma,
                    point=y,
                )
            if len(matches) > 1:
                raise NonFreeTargetError(
                    f"{len(matches)} target elements solve the transport equation at ({gamma!r}, {y!r})"
                )
            rows.append((gamma, y, matches[0]))
    cocycle = Cocycle(tuple(rows), source_sys.group, target_sys.group, radius)
    _verify_cocycle_identity(cocycle, source_sys)
    return cocycle


def _verify_cocycle_identity(cocycle: Cocycle, source_sys: ActionSystem) -> None:
    group = cocycle.source_group
    tgt = cocycle.target_group
    by_key = {(g, y): d for g, y, d in cocycle.table}
    points = sorted({y for _, y, _ in cocycle.table}, key=repr)
    half = cocycle.radius // 2
    for g1 in ball(group, half):
        for g2 in ball(group, cocycle.radius - half):
            g21 = multiply(g2, g1, group)
            for y in points:
                y1 = apply(source_sys, g1, y)
                lhs = multiply(by_key[(g2, y1)], by_key[(g1, y)], tgt)
                if lhs != by_key[(g21, y)]:
                    raise ValidationError(
                        f"cocycle identity fails at ({g2!r}, {g1!r}, {y!r})"
                    )


def cocycle_to_csv(cocycle: Cocycle, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "y", "delta"])
        for g, y, d in cocycle.table:
            writer.writerow([repr(g.nf), repr(y), repr(d.nf)])
