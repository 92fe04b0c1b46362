"""Group actions on nets as exact generator bijections.

A generator map is a total exact bijection on its coordinate space
(rational rotations and reflections on the circle, odometer translations
on digit strings, explicit permutations, piecewise-linear circle
homeomorphisms).  An ActionSystem binds one map to every marked generator
of a group and carries verified isometry and Lipschitz flags.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .arith import ONE, ZERO, as_fraction, frac_str, mod1
from .errors import (
    CapacityError,
    ClosureError,
    DegenerateActionError,
    StructuralError,
    ValidationError,
)
from .groups import (
    DIHEDRAL_ROTATION,
    FINITE_ABELIAN_PRODUCT,
    FINITE_CYCLIC,
    FREE_ABELIAN,
    INFINITE_DIHEDRAL,
    GroupSpec,
    Word,
    ball,
    validate_word,
)
from .spaces import CircleNet, FiniteNet, MatrixNet, TorusNet, UltrametricNet

PAIR_EXHAUSTIVE_LIMIT = 400
PAIR_SAMPLES = 10**4
DEFAULT_CLOSURE_RADIUS = 32


class GeneratorMap:
    def apply(self, x):
        raise NotImplementedError

    def inverse(self) -> "GeneratorMap":
        raise NotImplementedError

    def iterate(self, n: int, x):
        """Apply the map n times (n may be negative); subclasses shortcut."""
        step = self if n >= 0 else self.inverse()
        for _ in range(abs(n)):
            x = step.apply(x)
        return x

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class RotationMap(GeneratorMap):
    angle: Fraction

    def apply(self, x):
        return mod1(x + self.angle)

    def inverse(self):
        return RotationMap(mod1(-self.angle))

    def iterate(self, n, x):
        return mod1(x + n * self.angle)

    def to_json(self):
        return {"type": "rotation", "angle": frac_str(self.angle)}


@dataclass(frozen=True)
class ReflectionMap(GeneratorMap):
    center: Fraction

    def apply(self, x):
        return mod1(self.center - x)

    def inverse(self):
        return self

    def iterate(self, n, x):
        return self.apply(x) if n % 2 else x

    def to_json(self):
        return {"type": "reflection", "center": frac_str(self.center)}


@dataclass(frozen=True)
class TorusRotationMap(GeneratorMap):
    angles: tuple

    def apply(self, x):
        return tuple(mod1(c + a) for c, a in zip(x, self.angles))

    def inverse(self):
        return TorusRotationMap(tuple(mod1(-a) for a in self.angles))

    def iterate(self, n, x):
        return tuple(mod1(c + n * a) for c, a in zip(x, self.angles))

    def to_json(self):
        return {"type": "rotation", "angles": [frac_str(a) for a in self.angles]}


@dataclass(frozen=True)
class TorusReflectionMap(GeneratorMap):
    centers: tuple

    def apply(self, x):
        return tuple(mod1(c - v) for c, v in zip(self.centers, x))

    def inverse(self):
        return self

    def iterate(self, n, x):
        return self.apply(x) if n % 2 else x

    def to_json(self):
        return {"type": "reflection", "centers": [frac_str(c) for c in self.centers]}


@dataclass(frozen=True)
class TranslationMap(GeneratorMap):
    """Odometer step on digit strings: add ``step`` with carries.

    Digit j is the coordinate refining level j, so the encoded value is
    d_1 + o_1 d_2 + o_1 o_2 d_3 + ...; translation is an isometry of the
    first-difference metric.
    """

    step: int
    orders: tuple

    def _encode(self, x) -> int:
        value, base = 0, 1
        for d, o in zip(x, self.orders):
            value += d * base
            base *= o
        return value

    def _decode(self, value: int) -> tuple:
        digits = []
        for o in self.orders:
            value, d = divmod(value, o)
            digits.append(d)
        return tuple(digits)

    def apply(self, x):
        total = 1
        for o in self.orders:
            total *= o
        return self._decode((self._encode(x) + self.step) % total)

    def inverse(self):
        return TranslationMap(-self.step, self.orders)

    def iterate(self, n, x):
        total = 1
        for o in self.orders:
            total *= o
        return self._decode((self._encode(x) + n * self.step) % total)

    def to_json(self):
        return {"type": "translation", "step": self.step, "orders": list(self.orders)}


class PermutationMap(GeneratorMap):
    """Explicit bijection on a finite point set."""

    def __init__(self, mapping: dict):
        if len(set(mapping.values())) != len(mapping):
            raise DegenerateActionError("permutation table is not injective")
        if set(mapping.values()) != set(mapping):
            raise ValidationError("permutation must map its domain onto itself")
        self.mapping = dict(mapping)

    def apply(self, x):
        try:
            return self.mapping[x]
        except KeyError:
            raise ClosureError(f"point {x!r} outside the permutation domain") from None

    def inverse(self):
        return PermutationMap({v: k for k, v in self.mapping.items()})

    def __eq__(self, other):
        return isinstance(other, PermutationMap) and self.mapping == other.mapping

    def __hash__(self):
        return hash(frozenset(self.mapping.items()))

    def to_json(self):
        items = sorted(self.mapping.items(), key=lambda kv: str(kv[0]))
        return {"type": "permutation", "mapping": [[_point_json(k), _point_json(v)] for k, v in items]}


class PiecewiseLinearMap(GeneratorMap):
    """Piecewise-linear circle homeomorphism given by lift breakpoints.

    ``breakpoints`` lists (x_i, y_i) with x_0 = 0, the x_i strictly
    increasing inside [0, 1), the y_i strictly increasing, and a final
    implicit vertex (1, y_0 + 1).  The circle map is z -> lift(z) mod 1.
    """

    def __init__(self, breakpoints):
        pts = [(as_fraction(x), as_fraction(y)) for x, y in breakpoints]
        if not pts or pts[0][0] != 0:
            raise ValidationError("lift breakpoints must start at x = 0")
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])) or xs[-1] >= 1:
            raise ValidationError("breakpoint x-coordinates must increase inside [0, 1)")
        if not 0 <= ys[0] < 1:
            raise ValidationError("lift value at 0 must lie in [0, 1)")
        if any(b <= a for a, b in zip(ys, ys[1:])) or ys[-1] >= ys[0] + 1:
            raise ValidationError("lift must be strictly increasing with total rise 1")
        self.breakpoints = tuple(pts)

    def _segments(self):
        pts = list(self.breakpoints) + [(ONE, self.breakpoints[0][1] + 1)]
        return list(zip(pts, pts[1:]))

    def _lift(self, z: Fraction) -> Fraction:
        import bisect

        if not 0 <= z <= 1:
            raise StructuralError(f"lift argument {z} outside [0, 1]")
        xs = getattr(self, "_xs", None)
        if xs is None:
            xs = [x for x, _ in self.breakpoints]
            self._xs = xs
            self._verts = list(self.breakpoints) + [(ONE, self.breakpoints[0][1] + 1)]
        idx = bisect.bisect_right(xs, z) - 1
        (x0, y0), (x1, y1) = self._verts[idx], self._verts[idx + 1]
        return y0 + (y1 - y0) * (z - x0) / (x1 - x0)

    def apply(self, x):
        return mod1(self._lift(x))

    def lipschitz_bound(self) -> Fraction:
        return max((y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in self._segments())

    def inverse(self):
        cached = getattr(self, "_inverse", None)
        if cached is not None:
            return cached
        y0 = self.breakpoints[0][1]
        inv_segments = [((y0g, x0g), (y1g, x1g)) for (x0g, y0g), (x1g, y1g) in self._segments()]

        def inv_lift(w: Fraction) -> Fraction:
            for (w0, v0), (w1, v1) in inv_segments:
                if w0 <= w < w1 or (w == w1 and w1 == inv_segments[-1][1][0]):
                    return v0 + (v1 - v0) * (w - w0) / (w1 - w0)
            raise StructuralError(f"inverse lift argument {w} out of range")

        events = sorted({mod1(y) for _, y in self.breakpoints} | {ZERO})
        vals = []
        for w in events:
            # shift w into the inverse lift's domain [y0, y0 + 1)
            shifted = w if w >= y0 else w + 1
            vals.append(mod1(inv_lift(shifted)))
        lifted = [vals[0]]
        for v in vals[1:]:
            lifted.append(v if v > lifted[-1] else v + 1)
        result = PiecewiseLinearMap(list(zip(events, lifted)))
        self._inverse = result
        result._inverse = self
        return result

    def __eq__(self, other):
        return isinstance(other, PiecewiseLinearMap) and self.breakpoints == other.breakpoints

    def __hash__(self):
        return hash(self.breakpoints)

    def to_json(self):
        return {
            "type": "piecewise_linear",
            "breakpoints": [[frac_str(x), frac_str(y)] for x, y in self.breakpoints],
        }


def _point_json(p):
    if isinstance(p, Fraction):
        return frac_str(p)
    if isinstance(p, tuple):
        return [_point_json(c) for c in p]
    return p


def compose_reflections(inner: ReflectionMap, outer: ReflectionMap) -> RotationMap:
    """outer(inner(z)) = z + (outer.center - inner.center)."""
    return RotationMap(mod1(outer.center - inner.center))


# -- action systems -----------------------------------------------------------


@dataclass(frozen=True)
class ActionSystem:
    group: GroupSpec
    space: FiniteNet
    generator_maps: tuple
    isometric: bool
    lipschitz: Fraction
    verified_exhaustively: bool

    def map_for(self, label: str) -> GeneratorMap:
        for lab, gmap in self.generator_maps:
            if lab == label:
                return gmap
        raise StructuralError(f"no generator map for label {label!r}")

    def with_space(self, net: FiniteNet) -> "ActionSystem":
        return action_system(self.group, net, dict(self.generator_maps))


def _check_relations(group: GroupSpec, space: FiniteNet, maps: dict, labels) -> None:
    pts = space.points

    def assert_identity(fn, relation: str):
        for p in pts:
            if fn(p) != p:
                raise ValidationError(f"generator maps violate the relation {relation}")

    if group.kind in (FREE_ABELIAN, FINITE_ABELIAN_PRODUCT, FINITE_CYCLIC):
        positive = [lab for lab in labels if not lab.startswith("-")]
        for i, a in enumerate(positive):
            for b in positive[i + 1 :]:
                fa, fb = maps[a], maps[b]
                for p in pts:
                    if fa.apply(fb.apply(p)) != fb.apply(fa.apply(p)):
                        raise ValidationError(
                            f"maps for {a!r} and {b!r} do not commute"
                        )
        orders = []
        if group.kind == FINITE_CYCLIC:
            orders = [(positive[0], group.params[0])] if positive else []
        elif group.kind == FINITE_ABELIAN_PRODUCT:
            orders = [
                (f"g{i + 1}", q) for i, q in enumerate(group.params) if q > 1
            ]
        for lab, order in orders:
            assert_identity(lambda p, m=maps[lab], o=order: m.iterate(o, p), f"{lab}^{order} = e")
    elif group.kind == INFINITE_DIHEDRAL and group.marking == DIHEDRAL_ROTATION:
        r_map, eps, eps_inv = maps["r"], maps["eps"], maps["-eps"]
        assert_identity(
            lambda p: eps.apply(r_map.apply(eps.apply(r_map.apply(p)))),
            "(eps r)^2 = e",
        )
        for p in pts:
            if r_map.apply(eps.apply(p)) != eps_inv.apply(r_map.apply(p)):
                raise ValidationError("maps violate r eps = eps^-1 r")


def _pair_iter(n: int, seed: int = 0):
    if n <= PAIR_EXHAUSTIVE_LIMIT:
        for i in range(n):
            for j in range(i + 1, n):
                yield i, j
        return
    rng = random.Random(seed)
    for _ in range(PAIR_SAMPLES):
        i = rng.randrange(n)
        j = rng.randrange(n - 1)
        if j >= i:
            j += 1
        yield i, j


def action_system(group: GroupSpec, space: FiniteNet, maps: dict) -> ActionSystem:
    """Validate generator maps against the group marking and the net.

    Checks that inverse labels carry inverse maps and that the maps
    satisfy the group's defining relations pointwise on the net (orders
    of finite generators, commutativity for abelian groups, conjugation
    for the dihedral rotation marking), then measures the isometry defect
    and Lipschitz constant over net pairs (exhaustively up to 400 points,
    on 10^4 seeded pairs beyond).
    """
    labels = [lab for lab, _ in group.generators()]
    missing = [lab for lab in labels if lab not in maps]
    if missing:
        raise ValidationError(f"missing generator maps for {missing}")
    for lab in labels:
        inv_lab = group.inverse_label(lab)
        fwd, bwd = maps[lab], maps[inv_lab]
        for p in space.points:
            image = fwd.apply(p)
            if bwd.apply(image) != p:
                raise ValidationError(
                    f"map for {inv_lab!r} is not inverse to {lab!r} at point {p!r}"
                )
    _check_relations(group, space, maps, labels)
    pts = space.points
    n = len(pts)
    isometric = True
    lipschitz = ONE
    exhaustive = n <= PAIR_EXHAUSTIVE_LIMIT
    if n >= 2:
        for lab in labels:
            gmap = maps[lab]
            for i, j in _pair_iter(n):
                base = space.dist(pts[i], pts[j])
                moved = space.dist(gmap.apply(pts[i]), gmap.apply(pts[j]))
                if moved != base:
                    isometric = False
                if moved == 0 and base > 0:
                    raise DegenerateActionError(
                        f"generator {lab!r} collapses {pts[i]!r} and {pts[j]!r}"
                    )
                if base > 0:
                    ratio = moved / base
                    if ratio > lipschitz:
                        lipschitz = ratio
    ordered = tuple((lab, maps[lab]) for lab in labels)
    return ActionSystem(group, space, ordered, isometric, lipschitz, exhaustive)


def apply(sys: ActionSystem, word: Word, x, _prefix=()):
    """Exact image of x under the group element; apply(gh, x) = apply(g, apply(h, x))."""
    validate_word(word, sys.group)
    group = sys.group
    try:
        if group.kind == FREE_ABELIAN:
            for i, count in enumerate(word.nf):
                if count:
                    # negative exponents go through the stored inverse map
                    # rather than reconstructing an inverse on the fly
                    label = f"e{i + 1}" if count > 0 else f"-e{i + 1}"
                    x = sys.map_for(label).iterate(abs(count), x)
            return x
        if group.kind == INFINITE_DIHEDRAL:
            k, parity = word.nf
            r_map = sys.map_for("r")
            if parity:
                x = r_map.apply(x)
            if k:
                x = _dihedral_rotation(sys).iterate(k, x)
            return x
        if group.kind == FINITE_CYCLIC:
            c = word.nf[0]
            q = group.params[0]
            if c:
                steps = c if c <= q - c else q - c
                label = "g" if (c <= q - c or q == 2) else "-g"
                x = sys.map_for(label).iterate(steps, x)
            return x
        for i, (c, q) in enumerate(zip(word.nf, group.params)):
            if c:
                steps = c if c <= q - c else q - c
                label = f"g{i + 1}" if (c <= q - c or q == 2) else f"-g{i + 1}"
                x = sys.map_for(label).iterate(steps, x)
        return x
    except ClosureError as e:
        raise ClosureError(str(e), prefix=word) from None


def _dihedral_rotation(sys: ActionSystem) -> GeneratorMap:
    """The derived rotation eps = r'r (or the marked eps generator)."""
    labels = dict(sys.generator_maps)
    if "eps" in labels:
        return labels["eps"]
    r_map, rp_map = labels["r"], labels["r'"]
    if isinstance(r_map, ReflectionMap) and isinstance(rp_map, ReflectionMap):
        return compose_reflections(r_map, rp_map)
    if isinstance(r_map, TorusReflectionMap) and isinstance(rp_map, TorusReflectionMap):
        return TorusRotationMap(
            tuple(mod1(b - a) for a, b in zip(r_map.centers, rp_map.centers))
        )

    class _Composite(GeneratorMap):
        def apply(self, x):
            return rp_map.apply(r_map.apply(x))

        def inverse(self):
            inner, outer = rp_map.inverse(), r_map.inverse()

            class _Rev(GeneratorMap):
                def apply(self, x):
                    return outer.apply(inner.apply(x))

                def inverse(self):
                    return _Composite()

            return _Rev()

    return _Composite()


def orbit_closure(sys: ActionSystem, seeds, radius: int, cap: int = 10**6) -> FiniteNet:
    """Smallest point set containing the seeds and closed under words of
    length <= radius, returned as a net with the ambient distance."""
    seen = set(seeds)
    frontier = list(seeds)
    gens = [gmap for _, gmap in sys.generator_maps]
    for _ in range(radius):
        nxt = []
        for x in frontier:
            for gmap in gens:
                y = gmap.apply(x)
                if y not in seen:
                    seen.add(y)
                    if len(seen) > cap:
                        raise CapacityError("orbit closure exceeded the point cap", cap)
                    nxt.append(y)
        if not nxt:
            break
        frontier = nxt
    return net_with_points(sys.space, seen)


def net_with_points(ambient: FiniteNet, points) -> FiniteNet:
    if isinstance(ambient, (CircleNet, TorusNet)):
        return ambient.with_points(points)
    if isinstance(ambient, UltrametricNet):
        return UltrametricNet(points, ambient.orders, ambient.weights)
    if isinstance(ambient, MatrixNet):
        labels = sorted(points, key=str)
        rows = [[ambient.dist(a, b) if a != b else ZERO for b in labels] for a in labels]
        return MatrixNet(labels, rows)
    raise ValidationError(f"cannot restrict net kind {ambient.kind!r}")


def check_free_at_scale(sys: ActionSystem, radius: int, domain: FiniteNet | None = None):
    """All (word, fixed point) pairs with nontrivial words of length <= radius.

    An empty list certifies freeness at that scale on the domain.
    """
    domain = domain if domain is not None else sys.space
    violations = []
    identity = sys.group.identity()
    for w in ball(sys.group, radius):
        if w == identity:
            continue
        for x in domain.points:
            if apply(sys, w, x) == x:
                violations.append((w, x))
    return violations


# -- change of metric ---------------------------------------------------------


@dataclass(frozen=True)
class MetricChange:
    """Result of the compression c: breakpoints of c, the transformed net,
    and the exact maximal generator ratio in the new metric."""

    net: MatrixNet
    breakpoints: tuple  # (argument, value) pairs, ascending, from (0, 0)
    sequence: tuple  # the recursion values c_0 > c_1 > ...
    max_generator_ratio: Fraction

    def compression(self, d: Fraction) -> Fraction:
        return _piecewise_value(self.breakpoints, d)


def _piecewise_value(breakpoints, d: Fraction) -> Fraction:
    if d <= 0:
        return ZERO
    last_arg, last_val = breakpoints[-1]
    if d >= last_arg:
        return last_val
    for (a0, v0), (a1, v1) in zip(breakpoints, breakpoints[1:]):
        if a0 <= d <= a1:
            return v0 + (v1 - v0) * (d - a0) / (a1 - a0)
    raise StructuralError("argument outside the breakpoint range")


def change_of_metric(sys: ActionSystem) -> MetricChange:
    """Compress the net metric so every generator becomes 4-Lipschitz.

    The compression c is built from the recursion
    c_{n+1} = min(c_n / 3, min{ d0(sy, sy') : s marked, d0(y, y') >= c_n })
    run on net pairs until c_n drops below the smallest positive net
    distance, with c(c_n) = 2^-n, c(0) = 0, and affine interpolation in
    between.  The inner minimum ranges over net pairs only, so the net is
    the space of record; no claim is made about any ambient continuum.
    """
    net = sys.space
    pts = net.points
    if len(pts) < 2:
        raise ValidationError("change of metric needs at least two points")
    gens = [gmap for _, gmap in sys.generator_maps]
    for gmap in gens:
        images = [gmap.apply(p) for p in pts]
        if len(set(images)) != len(pts):
            raise DegenerateActionError("a generator identifies two net points")
        if any(img not in net for img in images):
            raise ClosureError("a generator map leaves the net; close the domain first")

    pairs = [
        (pts[i], pts[j], net.dist(pts[i], pts[j]))
        for i in range(len(pts))
        for j in range(i + 1, len(pts))
    ]
    c0 = max(d for _, _, d in pairs)
    min_pos = min(d for _, _, d in pairs if d > 0)
    seq = [c0]
    while seq[-1] >= min_pos:
        cn = seq[-1]
        moved = [
            net.dist(gmap.apply(x), gmap.apply(y))
            for x, y, d in pairs
            if d >= cn
            for gmap in gens
        ]
        inner = min(moved)
        if inner == 0:
            raise DegenerateActionError("generator collapsed a pair during the recursion")
        seq.append(min(cn / 3, inner))

    breakpoints = [(ZERO, ZERO)]
    for n in range(len(seq) - 1, -1, -1):
        breakpoints.append((seq[n], Fraction(1, 2**n)))
    breakpoints = tuple(breakpoints)

    args = [a for a, _ in breakpoints]
    vals = [v for _, v in breakpoints]
    if any(b <= a for a, b in zip(args, args[1:])) or any(
        b <= a for a, b in zip(vals, vals[1:])
    ):
        raise StructuralError("compression breakpoints are not strictly increasing")
    slopes = [
        (v1 - v0) / (a1 - a0)
        for (a0, v0), (a1, v1) in zip(breakpoints, breakpoints[1:])
    ]
    if any(s1 > s0 for s0, s1 in zip(slopes, slopes[1:])):
        raise StructuralError("compression is not concave")

    labels = sorted(pts, key=str)
    rows = [
        [
            _piecewise_value(breakpoints, net.dist(a, b)) if a != b else ZERO
            for b in labels
        ]
        for a in labels
    ]
    new_net = MatrixNet(labels, rows)

    ratio = ZERO
    for x, y, d in pairs:
        if d == 0:
            continue
        base = _piecewise_value(breakpoints, d)
        for gmap in gens:
            moved = _piecewise_value(breakpoints, net.dist(gmap.apply(x), gmap.apply(y)))
            if moved > ratio * base:
                ratio = moved / base
    return MetricChange(new_net, breakpoints, tuple(seq), ratio)


# -- serialization -------------------------------------------------------------


def map_from_json(data: dict) -> GeneratorMap:
    kind = data.get("type")
    if kind == "rotation":
        if "angles" in data:
            return TorusRotationMap(tuple(as_fraction(a) for a in data["angles"]))
        return RotationMap(as_fraction(data["angle"]))
    if kind == "reflection":
        if "centers" in data:
            return TorusReflectionMap(tuple(as_fraction(c) for c in data["centers"]))
        return ReflectionMap(as_fraction(data["center"]))
    if kind == "translation":
        return TranslationMap(int(data["step"]), tuple(int(o) for o in data["orders"]))
    if kind == "permutation":
        return PermutationMap(
            {_point_from_json(k): _point_from_json(v) for k, v in data["mapping"]}
        )
    if kind == "piecewise_linear":
        return PiecewiseLinearMap([(as_fraction(x), as_fraction(y)) for x, y in data["breakpoints"]])
    raise StructuralError(f"unknown generator map type {kind!r}")


def _point_from_json(p):
    if isinstance(p, list):
        return tuple(_point_from_json(c) for c in p)
    if isinstance(p, str):
        return as_fraction(p)
    return p


def action_to_json(sys: ActionSystem) -> dict:
    from .groups import group_to_json
    from .spaces import net_to_json

    return {
        "group": group_to_json(sys.group),
        "space": net_to_json(sys.space),
        "generators": [
            {"label": lab, "map": gmap.to_json()} for lab, gmap in sys.generator_maps
        ],
    }


def action_from_json(data: dict) -> ActionSystem:
    from .groups import group_from_json
    from .spaces import net_from_json

    group = group_from_json(data["group"])
    space = net_from_json(data["space"])
    maps = {entry["label"]: map_from_json(entry["map"]) for entry in data["generators"]}
    return action_system(group, space, maps)
