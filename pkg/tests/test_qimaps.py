import itertools
from fractions import Fraction

import pytest

from warpcone.actions import RotationMap, action_system
from warpcone.contfrac import golden_cf, verify_technical_conditions
from warpcone.errors import (
    DistortionBudgetError,
    DomainMismatchError,
    NonFreeTargetError,
    ValidationError,
)
from warpcone.groups import GroupSpec, Word
from warpcone.qimaps import (
    MetricMap,
    build_iota,
    certified_substitution_gap,
    cocycle_to_csv,
    extract_cocycle,
    measure_distortion,
    quotient_map,
    substitute_angle,
)
from warpcone.spaces import MatrixNet, circle_net, scale, torus_product
from warpcone.systems import (
    cyclic_rotation_system,
    rotation_circle_system,
    torus_involution_system,
)
from warpcone.warped import warped_level_closed_form

F = Fraction


# -- measure_distortion ----------------------------------------------------


def test_distortion_identity():
    net = circle_net(8)
    m = MetricMap.from_function(net, net, lambda x: x)
    report = measure_distortion(m)
    assert (report.C, report.A, report.codensity) == (1, 0, 0)


def test_distortion_pure_scaling():
    net = circle_net(8)
    doubled = scale(circle_net(8), 2)
    m = MetricMap.from_function(net, doubled, lambda x: x)
    report = measure_distortion(m)
    assert (report.C, report.A) == (2, 0)


def test_distortion_constant_map_fails_at_zero_budget():
    net = MatrixNet(["a", "b"], [[0, 5], [5, 0]])
    m = MetricMap.from_function(net, net, lambda x: "a")
    with pytest.raises(DistortionBudgetError) as ei:
        measure_distortion(m, a_max=0)
    assert ei.value.pair == ("a", "b")


def test_distortion_constant_map_fails_under_c_cap():
    net = MatrixNet(["a", "b"], [[0, 5], [5, 0]])
    m = MetricMap.from_function(net, net, lambda x: "a")
    with pytest.raises(DistortionBudgetError):
        measure_distortion(m, a_max=2, c_max=2)
    report = measure_distortion(m, a_max=2, c_max=3)
    # first grid additive whose exact C fits the cap: A=2 gives C = 5/2
    assert (report.A, report.C) == (2, F(5, 2))


def test_distortion_unchanged_by_target_isometry():
    net = circle_net(10)
    m_plain = MetricMap.from_function(net, net, lambda x: x)
    rot = RotationMap(F(3, 10))
    m_rotated = MetricMap.from_function(net, net, lambda x: rot.apply(x))
    a = measure_distortion(m_plain)
    b = measure_distortion(m_rotated)
    assert (a.C, a.A, a.codensity) == (b.C, b.A, b.codensity)
    assert a.buckets == b.buckets


def test_distortion_invariant_fast_path_matches_full_scan():
    # oracle: the difference-class reduction must reproduce the full
    # pair-by-pair report exactly, including buckets
    from warpcone.contfrac import convergents as _convs
    from warpcone.qimaps import _invariant_pair_classes

    q, p, t = 13, 8, 169
    net = circle_net(t)
    sys_beta = rotation_circle_system([F(p, q)], net)
    level = warped_level_closed_form(sys_beta, t)
    target = torus_product([(circle_net(q), q), (circle_net(q), q)])
    cert = verify_technical_conditions(1, q, [p], q, 1)
    iota = build_iota(q, [p], [q], q, level, target, cert)
    m = iota.metric_map
    assert _invariant_pair_classes(m) is not None
    fast = measure_distortion(m)
    # independent full scan, bypassing the reduction
    pts = net.points
    pair_data = []
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d_src = level.dist(pts[i], pts[j])
            d_img = target.dist(m.image_of(pts[i]), m.image_of(pts[j]))
            pair_data.append((d_src, d_img))
    c_best = F(1)
    for d_src, d_img in pair_data:
        c_best = max(c_best, d_img / d_src, d_src / d_img)
    assert fast.A == 0
    assert fast.C == c_best
    by_bucket = {}
    diam = max(d for d, _ in pair_data)
    for d_src, d_img in pair_data:
        k = min(int(d_src * 8 / diam), 7)
        lo, hi = by_bucket.get(k, (None, None))
        lo = d_img if lo is None else min(lo, d_img)
        hi = d_img if hi is None else max(hi, d_img)
        by_bucket[k] = (lo, hi)
    fast_buckets = {int(lo * 8 / diam): (mn, mx) for lo, _, mn, mx in fast.buckets}
    assert fast_buckets == by_bucket


def test_distortion_buckets_are_consistent():
    net = circle_net(12)
    m = MetricMap.from_function(net, scale(circle_net(12), 3), lambda x: x)
    report = measure_distortion(m)
    for lo, hi, mn, mx in report.buckets:
        assert lo < hi and mn <= mx
    data = report.to_json()
    assert set(data) == {"C", "A", "codensity", "buckets"}


# -- build_iota ----------------------------------------------------------------


def iota_fixture(q=5, p=3, t=None):
    t = t if t is not None else q * q
    sys = rotation_circle_system([F(p, q)], circle_net(t))
    level = warped_level_closed_form(sys, t)
    target = torus_product([(circle_net(q), q), (circle_net(q), q)])
    cert = verify_technical_conditions(1, q, [p], q, 1)
    return build_iota(q, [p], [q], q, level, target, cert)


def test_iota_fixes_origin():
    iota = iota_fixture()
    assert iota.metric_map.image_of(F(0)) == (F(0), F(0))


def test_iota_m1_inverse_residue():
    iota = iota_fixture(q=5, p=3)
    assert iota.rs == (2,)
    assert iota.metric_map.image_of(F(1, 5)) == (F(0), F(2, 5))


def test_iota_m2_crt_based():
    # paper-correct inverses: r_i * p_i' = 1 mod l_i with r_i the full product
    q, ps, ls = 15, [5, 3], [3, 5]
    sys = rotation_circle_system([F(5, 15), F(3, 15)], circle_net(15))
    level = warped_level_closed_form(sys, 15)
    target = torus_product(
        [(circle_net(15), 15), (circle_net(3), 3), (circle_net(5), 5)]
    )
    cert = verify_technical_conditions(2, q, ps, 15, 2, factorization=ls)
    iota = build_iota(q, ps, ls, 15, level, target, cert)
    assert iota.rs == (10, 6)
    assert (iota.rs[0] * iota.p_primes[0]) % ls[0] == 1
    assert (iota.rs[1] * iota.p_primes[1]) % ls[1] == 1
    assert iota.metric_map.image_of(F(1, 15)) == (F(0), F(2, 3), F(2, 5))


def test_iota_rejects_missing_certificate():
    sys = rotation_circle_system([F(3, 5)], circle_net(5))
    level = warped_level_closed_form(sys, 5)
    target = torus_product([(circle_net(5), 5), (circle_net(5), 5)])
    with pytest.raises(ValidationError):
        build_iota(5, [3], [5], 5, level, target, (False, {}))


# -- substitute_angle -------------------------------------------------------------


def test_substitution_identity_when_equal():
    sys = rotation_circle_system([F(3, 5)], circle_net(25))
    level = warped_level_closed_form(sys, 25)
    report = substitute_angle(level, level, k_bound=1)
    assert report.distortion.C == 1 and report.distortion.A == 0
    assert report.within_bound


def test_substitution_golden_convergent_within_k_plus_one():
    # deep golden truncation against the convergent 3/5 at level t = 25
    cf = golden_cf(40)
    from warpcone.contfrac import convergents

    deep = convergents(cf)[-1]
    alpha = F(deep.p, deep.q)
    net = circle_net(25)
    sys_alpha = rotation_circle_system([alpha], net)
    sys_beta = rotation_circle_system([F(3, 5)], net)
    lvl_alpha = warped_level_closed_form(sys_alpha, 25)
    lvl_beta = warped_level_closed_form(sys_beta, 25)
    gap = certified_substitution_gap(25, cf.value_bounds(), F(3, 5))
    assert gap <= 1
    report = substitute_angle(lvl_alpha, lvl_beta, k_bound=1)
    assert report.distortion.C <= 2
    assert report.within_bound


def test_substitution_flags_bad_convergent():
    cf = golden_cf(40)
    from warpcone.contfrac import convergents

    deep = convergents(cf)[-1]
    alpha = F(deep.p, deep.q)
    net = circle_net(24)
    sys_alpha = rotation_circle_system([alpha], net)
    sys_bad = rotation_circle_system([F(1, 2)], net)
    lvl_alpha = warped_level_closed_form(sys_alpha, 24)
    lvl_bad = warped_level_closed_form(sys_bad, 24)
    report = substitute_angle(lvl_alpha, lvl_bad, k_bound=1)
    assert report.distortion.C > 2
    assert report.within_bound is False


def test_substitution_rejects_mismatched_points():
    sys_a = rotation_circle_system([F(1, 3)], circle_net(3))
    sys_b = rotation_circle_system([F(1, 4)], circle_net(4))
    with pytest.raises(DomainMismatchError):
        substitute_angle(
            warped_level_closed_form(sys_a, 3), warped_level_closed_form(sys_b, 3)
        )


# -- quotient_map ------------------------------------------------------------------


def test_quotient_by_antipodal_z2():
    sys = cyclic_rotation_system(2, circle_net(16), F(1, 2))
    result = quotient_map(sys, 8, [Word((0,)), Word((1,))])
    assert result.distortion.C == 1
    assert result.distortion.A <= result.orbit_diameter <= 1


def test_quotient_by_trivial_subgroup():
    sys = cyclic_rotation_system(3, circle_net(9), F(1, 3))
    result = quotient_map(sys, 5, [Word((0,))])
    assert result.distortion.C == 1 and result.distortion.A == 0


def test_quotient_z2_inside_z6():
    sys = cyclic_rotation_system(6, circle_net(24), F(1, 6))
    result = quotient_map(sys, 7, [Word((0,)), Word((3,))])
    assert result.distortion.C == 1
    assert result.distortion.A <= result.orbit_diameter
    assert result.quotient_system.group.params[0] == 3


def test_quotient_torus_involution():
    net = torus_product([(circle_net(15), 4), (circle_net(15), 4)])
    sys = torus_involution_system(net)
    result = quotient_map(sys, 8, [Word((0,)), Word((1,))])
    assert result.distortion.C == 1
    assert result.distortion.A <= 1


# -- cocycles -------------------------------------------------------------------------


def test_cocycle_identity_map():
    sys = cyclic_rotation_system(7, circle_net(7))
    level = sys.space
    m = MetricMap.from_function(level, level, lambda x: x)
    cocycle = extract_cocycle(m, sys, sys, radius=3, delta_bound=3)
    for g, y, d in cocycle.table:
        assert d == g
    hom = cocycle.homomorphism()
    assert hom is not None and cocycle.kernel() == [sys.group.identity()]


def test_cocycle_doubling_map():
    q = 9
    src = cyclic_rotation_system(q, circle_net(q), F(2, 9))
    tgt = cyclic_rotation_system(q, circle_net(q), F(4, 9))
    m = MetricMap.from_function(src.space, tgt.space, lambda z: (2 * z) % 1)
    cocycle = extract_cocycle(m, src, tgt, radius=4, delta_bound=4)
    assert cocycle.constant_in_y()
    for g, y, d in cocycle.table:
        assert d == g


def test_cocycle_quotient_kernel_size_two():
    m_points = 6
    src = cyclic_rotation_system(2 * m_points, circle_net(2 * m_points))
    tgt = cyclic_rotation_system(m_points, circle_net(m_points))
    mapping = MetricMap.from_function(src.space, tgt.space, lambda z: 2 * z % 1)
    cocycle = extract_cocycle(mapping, src, tgt, radius=6, delta_bound=5)
    hom = cocycle.homomorphism()
    assert hom is not None
    kernel = cocycle.kernel()
    assert len(kernel) == 2
    assert Word((m_points,)) in kernel


def test_cocycle_non_free_target():
    src = cyclic_rotation_system(4, circle_net(4))
    tgt = cyclic_rotation_system(4, circle_net(4), F(1, 2))  # order-2 rotation
    m = MetricMap.from_function(src.space, tgt.space, lambda z: 2 * z % 1)
    with pytest.raises(NonFreeTargetError):
        extract_cocycle(m, src, tgt, radius=2, delta_bound=4)


def test_cocycle_csv(tmp_path):
    sys = cyclic_rotation_system(5, circle_net(5))
    m = MetricMap.from_function(sys.space, sys.space, lambda x: x)
    cocycle = extract_cocycle(m, sys, sys, radius=2, delta_bound=2)
    path = tmp_path / "cocycle.csv"
    cocycle_to_csv(cocycle, path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "gamma,y,delta"
    assert len(rows) == len(cocycle.table) + 1
