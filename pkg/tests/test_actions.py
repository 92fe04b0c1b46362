import itertools
import random
from fractions import Fraction

import pytest

from warpcone.actions import (
    PermutationMap,
    PiecewiseLinearMap,
    ReflectionMap,
    RotationMap,
    TorusReflectionMap,
    TranslationMap,
    action_from_json,
    action_system,
    action_to_json,
    apply,
    change_of_metric,
    check_free_at_scale,
    compose_reflections,
    orbit_closure,
)
from warpcone.errors import DegenerateActionError, ValidationError
from warpcone.groups import GroupSpec, Word, ball, multiply
from warpcone.spaces import MatrixNet, circle_net, scale, ultrametric_chain, verify_metric

F = Fraction


def rotation_system(angle, denominator=None, extra=()):
    """Z acting on a circle grid by a rational rotation."""
    angle = F(angle)
    den = denominator if denominator is not None else angle.denominator
    net = circle_net(den, extra)
    group = GroupSpec.free_abelian(1)
    return action_system(
        group, net, {"e1": RotationMap(angle), "-e1": RotationMap(-angle % 1)}
    )


def dihedral_system(alpha, denominator, marking="rr'"):
    """Infinite dihedral group acting by z -> -z and z -> alpha - z."""
    alpha = F(alpha)
    net = circle_net(denominator)
    group = GroupSpec.infinite_dihedral(marking)
    r = ReflectionMap(F(0))
    rp = ReflectionMap(alpha)
    maps = {"r": r, "r'": rp}
    if marking == "er":
        eps = compose_reflections(r, rp)
        maps = {"r": r, "eps": eps, "-eps": eps.inverse()}
    return action_system(group, net, maps)


# -- apply ---------------------------------------------------------------


def test_apply_rotation_twice():
    sys = rotation_system(F(1, 4))
    assert apply(sys, Word((2,)), F(0)) == F(1, 2)


def test_apply_identity():
    sys = rotation_system(F(1, 3))
    for x in sys.space.points:
        assert apply(sys, sys.group.identity(), x) == x


def test_apply_dihedral_epsilon_is_rotation():
    # r: z -> -z, r': z -> alpha - z, so eps = r'r : z -> z + alpha
    alpha = F(1, 5)
    sys = dihedral_system(alpha, 5)
    eps = Word((1, 0))
    for z in sys.space.points:
        assert apply(sys, eps, z) == (z + alpha) % 1


def test_apply_is_group_action_random():
    rng = random.Random(5)
    systems = [
        rotation_system(F(2, 7)),
        dihedral_system(F(1, 6), 6),
        dihedral_system(F(1, 6), 6, marking="er"),
    ]
    for sys in systems:
        words = ball(sys.group, 4)
        for _ in range(60):
            g, h = rng.choice(words), rng.choice(words)
            x = rng.choice(sys.space.points)
            assert apply(sys, multiply(g, h, sys.group), x) == apply(
                sys, g, apply(sys, h, x)
            )


def test_apply_translation_odometer():
    net = ultrametric_chain((2, 3), (F(1, 2), F(1, 8)))
    group = GroupSpec.free_abelian(1)
    step = TranslationMap(1, (2, 3))
    sys = action_system(group, net, {"e1": step, "-e1": step.inverse()})
    assert apply(sys, Word((1,)), (0, 0)) == (1, 0)
    assert apply(sys, Word((1,)), (1, 0)) == (0, 1)
    assert apply(sys, Word((6,)), (0, 0)) == (0, 0)
    assert sys.isometric


# -- orbit closure ----------------------------------------------------------


def test_orbit_closure_period_three():
    sys = rotation_system(F(1, 3), denominator=1)
    net = orbit_closure(sys, [F(0)], 5)
    assert net.points == (F(0), F(1, 3), F(2, 3))


def test_orbit_closure_prime_denominator():
    sys = rotation_system(F(1, 97), denominator=1)
    net = orbit_closure(sys, [F(0)], 5)
    assert len(net.points) == 11
    assert set(net.points) == {F(k, 97) % 1 for k in range(-5, 6)}


def test_orbit_closure_trivial_action():
    net = circle_net(4)
    group = GroupSpec.finite_cyclic(1)
    sys = action_system(group, net, {})
    closure = orbit_closure(sys, [F(0), F(1, 4)], 7)
    assert closure.points == (F(0), F(1, 4))


# -- freeness ----------------------------------------------------------------


def test_free_at_scale_periodic_rotation():
    sys = rotation_system(F(1, 3))
    violations = check_free_at_scale(sys, 3)
    offending_words = {w for w, _ in violations}
    assert Word((3,)) in offending_words and Word((-3,)) in offending_words
    fixed_by_three = {x for w, x in violations if w == Word((3,))}
    assert fixed_by_three == set(sys.space.points)


def test_free_at_scale_large_denominator_empty():
    sys = rotation_system(F(1, 97))
    assert check_free_at_scale(sys, 10) == []


def test_free_at_scale_empty_implies_distinct_orbit_points():
    sys = rotation_system(F(1, 97))
    radius = 10
    assert check_free_at_scale(sys, radius) == []
    half = ball(sys.group, radius // 2)
    for seed in (F(0), F(1, 97)):
        images = [apply(sys, w, seed) for w in half]
        assert len(set(images)) == len(half)


def test_free_at_scale_reflection_fixed_points():
    sys = dihedral_system(F(1, 2), 8)
    violations = check_free_at_scale(sys, 1)
    r_fixed = {x for w, x in violations if w == Word((0, 1))}
    assert r_fixed == {F(0), F(1, 2)}


# -- flags ---------------------------------------------------------------------


def test_isometric_flag_survives_scaling():
    sys = rotation_system(F(1, 5))
    assert sys.isometric
    rescaled = sys.with_space(scale(sys.space, F(7, 2)))
    assert rescaled.isometric
    assert rescaled.lipschitz == 1


def pl_doubling_map():
    # slope 2 on [0, 1/4], slope 2/3 on [1/4, 1]; Lipschitz constant 2
    return PiecewiseLinearMap([(0, 0), (F(1, 4), F(1, 2))])


def pl_closed_net(fine=12, coarse=6):
    from warpcone.systems import staircase_pl_system

    return staircase_pl_system(fine, coarse)


def test_piecewise_linear_inverse_exact():
    fwd = pl_doubling_map()
    bwd = fwd.inverse()
    for k in range(24):
        z = F(k, 24)
        assert bwd.apply(fwd.apply(z)) == z
        assert fwd.apply(bwd.apply(z)) == z


def test_piecewise_linear_system_flags():
    sys = pl_closed_net()
    assert not sys.isometric
    assert sys.lipschitz == 2
    # the generator genuinely permutes the net
    gmap = sys.map_for("e1")
    images = {gmap.apply(p) for p in sys.space.points}
    assert images == set(sys.space.points)


def test_permutation_map_requires_bijection():
    with pytest.raises(DegenerateActionError):
        PermutationMap({"a": "c", "b": "c", "c": "a"})


# -- change of metric ------------------------------------------------------------


def test_change_of_metric_isometric_thirds():
    sys = rotation_system(F(1, 5), denominator=10)
    result = change_of_metric(sys)
    for prev, nxt in zip(result.sequence, result.sequence[1:]):
        assert nxt == prev / 3
    assert result.max_generator_ratio == 1


def test_change_of_metric_pl_at_most_four():
    sys = pl_closed_net(fine=40, coarse=20)
    assert len(sys.space.points) == 60
    result = change_of_metric(sys)
    assert result.max_generator_ratio <= 4
    verify_metric(result.net)


def test_change_of_metric_two_point_involution():
    net = MatrixNet(["a", "b"], [[0, F(5, 3)], [F(5, 3), 0]])
    group = GroupSpec.finite_cyclic(2)
    swap = PermutationMap({"a": "b", "b": "a"})
    sys = action_system(group, net, {"g": swap})
    result = change_of_metric(sys)
    assert result.net.dist("a", "b") == 1
    assert result.max_generator_ratio == 1


def test_change_of_metric_concave_increasing():
    sys = pl_closed_net(fine=16, coarse=8)
    result = change_of_metric(sys)
    args = [a for a, _ in result.breakpoints]
    vals = [v for _, v in result.breakpoints]
    assert args[0] == 0 and vals[0] == 0
    assert all(b > a for a, b in zip(args, args[1:]))
    assert all(b > a for a, b in zip(vals, vals[1:]))
    slopes = [
        (v1 - v0) / (a1 - a0)
        for (a0, v0), (a1, v1) in zip(result.breakpoints, result.breakpoints[1:])
    ]
    assert all(s1 <= s0 for s0, s1 in zip(slopes, slopes[1:]))


# -- serialization ------------------------------------------------------------------


def test_action_json_round_trip():
    sys = dihedral_system(F(1, 6), 6)
    data = action_to_json(sys)
    again = action_from_json(data)
    assert again.group == sys.group
    assert again.space == sys.space
    for w in ball(sys.group, 3):
        for x in sys.space.points:
            assert apply(again, w, x) == apply(sys, w, x)


def test_torus_reflection_round_trip():
    from warpcone.spaces import torus_product

    net = torus_product([(circle_net(4), 2), (circle_net(4), 2)])
    group = GroupSpec.finite_cyclic(2)
    conj = TorusReflectionMap((F(0), F(0)))
    sys = action_system(group, net, {"g": conj})
    assert sys.isometric
    again = action_from_json(action_to_json(sys))
    assert again.space == net
