import itertools
import random
from fractions import Fraction

import pytest

from warpcone.errors import (
    DomainMismatchError,
    UnsupportedConfigurationError,
    ValidationError,
)
from warpcone.groups import GroupSpec, Word, ball, word_length
from warpcone.spaces import circle_net, scale
from warpcone.systems import (
    dihedral_circle_system,
    rotation_circle_system,
    staircase_pl_system,
)
from warpcone.warped import (
    covering_level,
    displacement_infimum,
    faithfulness_radius,
    load_warped_cache,
    save_warped_cache,
    stabilized_distance,
    warped_distance_closed_form,
    warped_distance_graph,
    warped_level_closed_form,
    warped_to_csv,
)

F = Fraction


def quarter_system():
    return rotation_circle_system([F(1, 4)], circle_net(4))


# -- closed form -----------------------------------------------------------


def test_closed_form_group_jump_beats_base_path():
    sys = quarter_system()
    # base path costs 8 * 1/4 = 2; one generator jump lands exactly
    assert warped_distance_closed_form(sys, 8, F(0), F(1, 4)) == 1


def test_closed_form_zero_on_diagonal():
    sys = quarter_system()
    for x in sys.space.points:
        assert warped_distance_closed_form(sys, 8, x, x) == 0


def test_closed_form_tie_with_base_path():
    sys = rotation_circle_system([F(1, 4)], circle_net(8))
    # base path t*d = 8 * 1/8 = 1 ties the one-jump route; min is 1
    assert warped_distance_closed_form(sys, 8, F(0), F(1, 8)) == 1


def test_closed_form_requires_isometric():
    sys = staircase_pl_system(8, 4)
    with pytest.raises(UnsupportedConfigurationError):
        warped_distance_closed_form(sys, 4, F(0), F(1, 16))


def test_closed_form_level_matches_pointwise_calls():
    sys = rotation_circle_system([F(2, 7)], circle_net(7))
    level = warped_level_closed_form(sys, 5)
    for x, y in itertools.combinations(sys.space.points, 2):
        assert level.dist(x, y) == warped_distance_closed_form(sys, 5, x, y)


# -- oracle equivalence -------------------------------------------------------


@pytest.mark.parametrize("num,den", [(1, 3), (2, 5), (3, 7)])
def test_oracle_equivalence_rotations(num, den):
    net = circle_net(den, [F(1, 2 * den)])  # two interleaved orbits
    sys = rotation_circle_system([F(num, den)], net)
    for t in (1, 2, 7, 19):
        closed = warped_level_closed_form(sys, t)
        graph = warped_distance_graph(sys, t)
        for x, y in itertools.combinations(net.points, 2):
            assert closed.dist(x, y) == graph.dist(x, y)


@pytest.mark.parametrize("marking", ["rr'", "er"])
def test_oracle_equivalence_dihedral(marking):
    sys = dihedral_circle_system(F(1, 5), circle_net(5), marking=marking)
    for t in (1, 3, 11):
        closed = warped_level_closed_form(sys, t)
        graph = warped_distance_graph(sys, t)
        for x, y in itertools.combinations(sys.space.points, 2):
            assert closed.dist(x, y) == graph.dist(x, y)


def test_trivial_action_gives_scaled_base():
    from warpcone.actions import action_system

    net = circle_net(6)
    sys = action_system(GroupSpec.finite_cyclic(1), net, {})
    level = warped_level_closed_form(sys, 7)
    for x, y in itertools.combinations(net.points, 2):
        assert level.dist(x, y) == 7 * net.dist(x, y)


# -- warped-level invariants ------------------------------------------------------


def test_warped_bounded_by_base_and_generators():
    sys = rotation_circle_system([F(1, 5)], circle_net(10))
    t = 9
    level = warped_level_closed_form(sys, t)
    gmap = sys.map_for("e1")
    for x, y in itertools.combinations(sys.space.points, 2):
        assert level.dist(x, y) <= t * sys.space.dist(x, y)
    for x in sys.space.points:
        sx = gmap.apply(x)
        if sx != x:
            assert level.dist(x, sx) <= 1


def test_warped_monotone_in_t():
    sys = rotation_circle_system([F(1, 5)], circle_net(10))
    small = warped_level_closed_form(sys, 3)
    large = warped_level_closed_form(sys, 12)
    for x, y in itertools.combinations(sys.space.points, 2):
        assert small.dist(x, y) <= large.dist(x, y)


def test_warped_stabilizes_at_word_length():
    # for rational angles and enormous t the warped distance between orbit
    # points settles at the minimal word length carrying one to the other
    sys = rotation_circle_system([F(1, 3)], circle_net(3))
    lvl_3 = warped_level_closed_form(sys, 10**3)
    lvl_6 = warped_level_closed_form(sys, 10**6)
    for x, y in itertools.combinations(sys.space.points, 2):
        stab = stabilized_distance(sys, x, y)
        assert lvl_3.dist(x, y) == lvl_6.dist(x, y) == stab


def leq_times_power(value, L, exponent, multiplier):
    """Exact check of value <= L**exponent * multiplier for rational
    exponent a/b: equivalent to (value/multiplier)**b <= L**a."""
    if value <= multiplier:
        return True  # L >= 1 and exponent >= 0 make the right side >= multiplier
    ratio = value / multiplier
    return ratio**exponent.denominator <= L**exponent.numerator


def test_sandwich_for_lipschitz_system():
    sys = staircase_pl_system(12, 6)
    t = 8
    graph = warped_distance_graph(sys, t)
    L = sys.lipschitz
    assert L == 2
    for x, y in itertools.combinations(sys.space.points, 2):
        dg = graph.dist(x, y)
        for a, b in ((x, y), (y, x)):
            value = displacement_infimum(sys, t, a, b)
            assert dg <= value
            assert leq_times_power(value, L, dg, dg)


# -- stabilized distance ------------------------------------------------------------


def test_stabilized_distance_examples():
    sys = rotation_circle_system([F(1, 3)], circle_net(3, [F(1, 2)]))
    assert stabilized_distance(sys, F(0), F(2, 3)) == 1
    assert stabilized_distance(sys, F(0), F(0)) == 0
    assert stabilized_distance(sys, F(0), F(1, 2)) is None


# -- covering levels -----------------------------------------------------------------


def test_covering_d1_on_fibers():
    sys = quarter_system()
    cov = covering_level(sys, 8, 4)
    e = sys.group.identity()
    for x, y in itertools.combinations(sys.space.points, 2):
        assert cov.d1((e, x), (e, y)) == 8 * sys.space.dist(x, y)


def test_covering_d1_left_invariant():
    sys = quarter_system()
    cov = covering_level(sys, 8, 4)
    x, y = F(0), F(1, 4)
    values = {
        cov.d1((Word((k,)), x), (Word((k,)), y)) for k in range(-2, 3)
    }
    assert len(values) == 1


def test_covering_direct_formula():
    sys = rotation_circle_system([F(1, 97)], circle_net(97))
    cov = covering_level(sys, 97, 3)
    assert cov.d1((Word((1,)), F(0)), (Word((0,)), F(1, 97))) == 2


def test_covering_requires_isometric():
    sys = staircase_pl_system(8, 4)
    with pytest.raises(UnsupportedConfigurationError):
        covering_level(sys, 4, 3)


# -- faithfulness ---------------------------------------------------------------------


def test_faithfulness_rational_third_fails_before_two():
    sys = rotation_circle_system([F(1, 3)], circle_net(3))
    t = 10
    warped = warped_level_closed_form(sys, t)
    cov = covering_level(sys, t, 8)
    result = faithfulness_radius(cov, warped, 4)
    assert result.radius < 2
    # the canonical witness: (2, y) and (-1, y) share an image inside a 2-ball
    y = F(0)
    a, b = (Word((2,)), y), (Word((-1,)), y)
    assert cov.pi(a) == cov.pi(b)
    assert cov.d1(a, b) == 3
    center = (Word((0,)), y)
    assert cov.d1(center, a) <= 2 and cov.d1(center, b) <= 2


def test_faithfulness_trivial_group_full_probe():
    from warpcone.actions import action_system

    net = circle_net(6)
    sys = action_system(GroupSpec.finite_cyclic(1), net, {})
    warped = warped_level_closed_form(sys, 9)
    cov = covering_level(sys, 9, 5)
    result = faithfulness_radius(cov, warped, 5)
    assert result.radius == 5
    assert result.witness is None


def test_faithfulness_golden_convergent_small():
    # 13/21 at t = 21: generic and homogeneous paths agree
    sys = rotation_circle_system([F(13, 21)], circle_net(21))
    warped = warped_level_closed_form(sys, 21)
    cov = covering_level(sys, 21, 6)
    assert cov.homogeneous
    fast = faithfulness_radius(cov, warped, 3)
    slow_cov = covering_level(sys, 21, 6)
    object.__setattr__(slow_cov, "homogeneous", False)
    slow = faithfulness_radius(slow_cov, warped, 3)
    assert fast.radius == slow.radius


def test_faithfulness_nondecreasing_in_t_for_free_system():
    sys = rotation_circle_system([F(5, 17)], circle_net(17))
    radii = []
    for t in (17, 34, 68):
        warped = warped_level_closed_form(sys, t)
        cov = covering_level(sys, t, 5)
        radii.append(faithfulness_radius(cov, warped, 3).radius)
    assert radii == sorted(radii)


def test_faithfulness_domain_mismatch():
    sys = quarter_system()
    warped = warped_level_closed_form(sys, 8)
    other = rotation_circle_system([F(1, 4)], circle_net(8))
    cov = covering_level(other, 8, 3)
    with pytest.raises(DomainMismatchError):
        faithfulness_radius(cov, warped, 2)


# -- export / cache ---------------------------------------------------------------------


def test_warped_csv_export(tmp_path):
    sys = quarter_system()
    level = warped_level_closed_form(sys, 8)
    path = tmp_path / "warped.csv"
    warped_to_csv(level, path)
    rows = path.read_text().strip().splitlines()
    assert len(rows) == len(sys.space.points) + 1


def test_warped_binary_cache_round_trip(tmp_path):
    sys = rotation_circle_system([F(2, 7)], circle_net(7))
    level = warped_level_closed_form(sys, 5)
    save_warped_cache(level, tmp_path)
    loaded = load_warped_cache(sys, 5, sys.space, tmp_path)
    assert loaded is not None
    for x, y in itertools.combinations(sys.space.points, 2):
        assert loaded.dist(x, y) == level.dist(x, y)
    assert load_warped_cache(sys, 6, sys.space, tmp_path) is None
