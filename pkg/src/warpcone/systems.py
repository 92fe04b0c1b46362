"""Ready-made action systems used by the experiment presets and tests."""

from __future__ import annotations

from fractions import Fraction

from .actions import (
    ActionSystem,
    PiecewiseLinearMap,
    ReflectionMap,
    RotationMap,
    TorusReflectionMap,
    TorusRotationMap,
    TranslationMap,
    action_system,
    compose_reflections,
)
from .arith import as_fraction, mod1
from .errors import ValidationError
from .groups import GroupSpec
from .spaces import CircleNet, circle_net, torus_product, ultrametric_chain

F = Fraction


def rotation_circle_system(angles, net: CircleNet) -> ActionSystem:
    """Z^m acting on a circle net by rational rotations, one angle per rank."""
    angles = [as_fraction(a) for a in angles]
    group = GroupSpec.free_abelian(len(angles))
    maps = {}
    for i, a in enumerate(angles):
        maps[f"e{i + 1}"] = RotationMap(mod1(a))
        maps[f"-e{i + 1}"] = RotationMap(mod1(-a))
    return action_system(group, net, maps)


def cyclic_rotation_system(order: int, net: CircleNet, angle=None) -> ActionSystem:
    """Z/order acting by the rotation ``angle`` (default 1/order)."""
    angle = as_fraction(angle) if angle is not None else F(1, order)
    if mod1(order * angle) != 0:
        raise ValidationError("angle must have order dividing the group order")
    group = GroupSpec.finite_cyclic(order)
    maps = {"g": RotationMap(mod1(angle))}
    if order > 2:
        maps["-g"] = RotationMap(mod1(-angle))
    return action_system(group, net, maps)


def dihedral_circle_system(alpha, net: CircleNet, marking: str = "rr'") -> ActionSystem:
    """Infinite dihedral group acting by the reflections z -> -z and
    z -> alpha - z; the derived rotation eps = r'r shifts by alpha."""
    alpha = as_fraction(alpha)
    group = GroupSpec.infinite_dihedral(marking)
    r = ReflectionMap(F(0))
    rp = ReflectionMap(mod1(alpha))
    if marking == "rr'":
        maps = {"r": r, "r'": rp}
    else:
        eps = compose_reflections(r, rp)
        maps = {"r": r, "eps": eps, "-eps": eps.inverse()}
    return action_system(group, net, maps)


def torus_involution_system(net) -> ActionSystem:
    """Z/2 acting on a torus product by simultaneous negation."""
    group = GroupSpec.finite_cyclic(2)
    arity = len(net.points[0])
    conj = TorusReflectionMap((F(0),) * arity)
    return action_system(group, net, {"g": conj})


def odometer_system(orders, weights) -> ActionSystem:
    """Z acting on a full ultrametric chain by the +1 odometer."""
    net = ultrametric_chain(orders, weights)
    step = TranslationMap(1, tuple(net.orders))
    group = GroupSpec.free_abelian(1)
    return action_system(group, net, {"e1": step, "-e1": step.inverse()})


def staircase_pl_system(fine: int = 44, coarse: int = 22) -> ActionSystem:
    """Non-isometric Lipschitz example: Z acting on a two-speed circle grid.

    The grid has ``fine`` points at one spacing on the first half circle
    and ``coarse`` points at double spacing on the second; the generator
    shifts every point to its successor.  Linear interpolation through
    those vertices is an exact piecewise-linear homeomorphism permuting
    the grid, with Lipschitz constant exactly 2 on both the map and its
    inverse whenever fine = 2 * coarse.
    """
    if fine != 2 * coarse or coarse < 2:
        raise ValidationError("need fine = 2 * coarse >= 4 for the slope-2 staircase")
    pts = [F(k, 2 * fine) for k in range(fine)]
    pts += [F(1, 2) + F(k, coarse * 2) for k in range(coarse)]
    succ = {pts[i]: pts[(i + 1) % len(pts)] for i in range(len(pts))}
    lift = []
    for i, p in enumerate(pts):
        image = succ[p]
        lift.append((p, image if i < len(pts) - 1 else image + 1))
    fwd = PiecewiseLinearMap(lift)
    net = circle_net(1, pts)
    group = GroupSpec.free_abelian(1)
    return action_system(group, net, {"e1": fwd, "-e1": fwd.inverse()})


def square_torus_net(side_scale, denominator: int, metric: str = "l1"):
    c = circle_net(denominator)
    return torus_product([(c, side_scale), (c, side_scale)], metric=metric)
