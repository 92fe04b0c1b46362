"""Acceptance suite: one test per criterion, each printing a pass/fail
line with its measured runtime against the declared budget."""

import itertools
import math
import random
import time
from fractions import Fraction

import pytest

from warpcone.actions import action_system, change_of_metric
from warpcone.contfrac import (
    convergents,
    golden_cf,
    higher_tori_alpha,
    verify_approximation_bound,
    verify_technical_conditions,
)
from warpcone.groups import GroupSpec, Word, ball, multiply, word_length
from warpcone.presets import run_preset
from warpcone.qimaps import MetricMap, extract_cocycle, quotient_map
from warpcone.spaces import MatrixNet, circle_net, torus_product
from warpcone.systems import (
    cyclic_rotation_system,
    dihedral_circle_system,
    rotation_circle_system,
    staircase_pl_system,
    torus_involution_system,
)
from warpcone.warped import (
    covering_level,
    displacement_infimum,
    faithfulness_radius,
    warped_distance_graph,
    warped_level_closed_form,
)

F = Fraction


def record(number: int, label: str, passed: bool, started: float, budget: float):
    elapsed = time.monotonic() - started
    status = "PASS" if passed and elapsed < budget else "FAIL"
    print(
        f"[{status}] criterion {number}: {label} "
        f"({elapsed:.1f}s of {budget:.0f}s budget)"
    )
    assert passed, f"criterion {number} failed: {label}"
    assert elapsed < budget, f"criterion {number} exceeded its {budget}s budget"


def test_criterion_01_convergent_machinery():
    started = time.monotonic()
    cf = golden_cf(40, unit_interval=False)  # all partial quotients equal 1
    convs = convergents(cf)
    identity_ok = all(
        convs[i].p * convs[i - 1].q - convs[i - 1].p * convs[i].q == (-1) ** (i - 1)
        for i in range(1, 40)
    )
    bound_ok = all(verify_approximation_bound(cf, i)[0] for i in range(39))
    record(1, "determinant identity and convergent bound", identity_ok and bound_ok, started, 1.0)


def test_criterion_02_warped_oracle_equivalence():
    started = time.monotonic()
    systems = [
        rotation_circle_system([F(1, 3)], circle_net(6)),
        rotation_circle_system([F(2, 5)], circle_net(10)),
        rotation_circle_system([F(3, 7)], circle_net(7)),
        dihedral_circle_system(F(1, 3), circle_net(6), marking="rr'"),
        dihedral_circle_system(F(1, 3), circle_net(6), marking="er"),
    ]
    ok = True
    for sys in systems:
        pts = sys.space.points
        for t in range(1, 51):
            closed = warped_level_closed_form(sys, t)
            graph = warped_distance_graph(sys, t)
            for x, y in itertools.combinations(pts, 2):
                if closed.dist(x, y) != graph.dist(x, y):
                    ok = False
    record(2, "closed form equals shortest path on all pairs, t = 1..50", ok, started, 30.0)


def leq_times_power(value, base, exponent, multiplier):
    # value <= base**exponent * multiplier, exactly, for rational exponent
    if value <= multiplier:
        return True
    ratio = value / multiplier
    return ratio**exponent.denominator <= base**exponent.numerator


def test_criterion_03_lipschitz_sandwich():
    started = time.monotonic()
    sys = staircase_pl_system(88, 44)
    assert len(sys.space.points) == 132 <= 500
    assert sys.lipschitz == 2
    t = 8
    graph = warped_distance_graph(sys, t)
    ok = True
    pts = sys.space.points
    for x, y in itertools.combinations(pts, 2):
        dg = graph.dist(x, y)
        for a, b in ((x, y), (y, x)):
            value = displacement_infimum(sys, t, a, b)
            if not (dg <= value and leq_times_power(value, sys.lipschitz, dg, dg)):
                ok = False
    record(3, "d_graph <= D <= L^d_graph * d_graph for the slope-2 system", ok, started, 30.0)


def test_criterion_04_thm_main_ladder():
    started = time.monotonic()
    report = run_preset("thm-main")
    ok = report.passed and len(report.rows) == 6
    for row in report.rows:
        ok = ok and F(row["C"]) <= 6 and F(row["A"]) <= 1 and F(row["codensity"]) <= 1
    record(4, "composite distortion C<=6, A<=1, codensity<=1 for t=q_i^2, i=3..8", ok, started, 120.0)


def test_criterion_05_faithfulness_dichotomy():
    started = time.monotonic()
    report = run_preset("faithfulness")
    ok = report.passed
    for row in report.rows:
        if row["case"] == "periodic":
            ok = ok and row["radius"] < 2
        else:
            ok = ok and row["radius"] >= 5 and row["t"] >= 4181
    # the canonical witness pair (2, y), (-1, y) shares its image within a 2-ball
    sys = rotation_circle_system([F(1, 3)], circle_net(3))
    cov = covering_level(sys, 10, 8)
    y = F(0)
    a, b = (Word((2,)), y), (Word((-1,)), y)
    ok = ok and cov.pi(a) == cov.pi(b)
    ok = ok and cov.d1((Word((0,)), y), a) <= 2 and cov.d1((Word((0,)), y), b) <= 2
    record(5, "radius < 2 for 1/3 at t in {10,100,1000}; radius >= 5 for 2584/4181", ok, started, 60.0)


def test_criterion_06_ultrametric_levels():
    started = time.monotonic()
    report = run_preset("ultrametric-asdim")
    ok = report.passed
    per_level = {}
    for row in report.rows:
        per_level.setdefault(row["k"], 0)
        per_level[row["k"]] += 1
    ok = ok and set(per_level) == set(range(7)) and all(v == 12 for v in per_level.values())
    record(6, "component diameters < R and d=0 certificates with S < R", ok, started, 10.0)


def test_criterion_07_quotient_quasi_isometry():
    started = time.monotonic()
    configs = [
        ("Z/2 antipodal", cyclic_rotation_system(2, circle_net(100), F(1, 2)), 8, [Word((0,)), Word((1,))]),
        ("Z/3 rotation", cyclic_rotation_system(3, circle_net(99), F(1, 3)), 8, [Word((0,)), Word((1,)), Word((2,))]),
        ("Z/2 inside Z/6", cyclic_rotation_system(6, circle_net(96), F(1, 6)), 7, [Word((0,)), Word((3,))]),
        ("torus involution", torus_involution_system(
            torus_product([(circle_net(21), 4), (circle_net(21), 4)])
        ), 8, [Word((0,)), Word((1,))]),
    ]
    ok = True
    for label, sys, t, subgroup in configs:
        assert len(sys.space.points) <= 1000
        result = quotient_map(sys, t, subgroup)
        if result.distortion.C != 1 or result.distortion.A > result.orbit_diameter:
            ok = False
    record(7, "quotient projections report C = 1 and A <= warped orbit diameter", ok, started, 60.0)


def test_criterion_08_unbalanced_tori():
    started = time.monotonic()
    report = run_preset("unbalanced")
    grid_rows = [r for r in report.rows if r["kind"] == "grid"]
    ok = report.passed and len(grid_rows) == 9
    for row in grid_rows:
        ratio = F(row["ratio"])
        ok = ok and F(1, 8) <= ratio <= 8 and row["b"] == 10 * row["a"]
    record(8, "greedy v_N within [1/8, 8] of N^-2 * area for (q, 10q) tori", ok, started, 60.0)


def test_criterion_09_higher_tori():
    started = time.monotonic()
    # independent check of the largest-power rule for m=2, b=(3,5), k=2
    data = higher_tori_alpha(2, (3, 5), [[1, 1], [1, 1]], 2)
    expected = {}
    for i, base in enumerate((3, 5)):
        for n in (1, 2):
            cap = 2 ** (2 ** (2 * n))
            power = 1
            while power * base <= cap:
                power *= base
            expected[(i, n)] = power
    rule_ok = all(
        data.denominators[i][n - 1] == expected[(i, n)] for i in range(2) for n in (1, 2)
    )
    rule_ok = rule_ok and data.denominators[0] == (9, 59049) and data.denominators[1] == (5, 15625)
    deep = higher_tori_alpha(2, (3, 5), [[1, 1, 1], [1, 1, 1]], 3)
    alphas = [(deep.betas[i], deep.betas[i] + deep.tail_bounds[i]) for i in range(2)]
    cert = verify_technical_conditions(
        2, data.q, data.ps, 2**16, 50, alphas=alphas,
        factorization=[row[-1] for row in data.denominators],
    )
    report = run_preset("higher-tori")
    ok = rule_ok and cert[0] and report.passed
    m2 = next(r for r in report.rows if r["m"] == 2)
    ok = ok and F(m2["C"]) <= 3 * 51 and F(m2["A"]) <= 2 and m2["K"] == "50"
    record(9, "largest-power rule, K = 2 b_m^2 = 50 certificate, embedding windows", ok, started, 180.0)


def test_criterion_10_cocycle_identity():
    started = time.monotonic()
    rng = random.Random(2026)
    examples = []

    ident_sys = cyclic_rotation_system(12, circle_net(12))
    ident_map = MetricMap.from_function(ident_sys.space, ident_sys.space, lambda z: z)
    examples.append(("identity", ident_map, ident_sys, ident_sys))

    dbl_src = cyclic_rotation_system(9, circle_net(9), F(1, 9))
    dbl_tgt = cyclic_rotation_system(9, circle_net(9), F(2, 9))
    dbl_map = MetricMap.from_function(dbl_src.space, dbl_tgt.space, lambda z: 2 * z % 1)
    examples.append(("doubling", dbl_map, dbl_src, dbl_tgt))

    quo_src = cyclic_rotation_system(12, circle_net(12))
    quo_tgt = cyclic_rotation_system(6, circle_net(6))
    quo_map = MetricMap.from_function(quo_src.space, quo_tgt.space, lambda z: 2 * z % 1)
    examples.append(("quotient", quo_map, quo_src, quo_tgt))

    ok = True
    for label, metric_map, src, tgt in examples:
        cocycle = extract_cocycle(metric_map, src, tgt, radius=6, delta_bound=6)
        table = {(g, y): d for g, y, d in cocycle.table}
        half = ball(src.group, 3)
        pts = list(metric_map.source.points)
        for _ in range(200):
            g1, g2 = rng.choice(half), rng.choice(half)
            y = rng.choice(pts)
            from warpcone.actions import apply as act

            lhs = multiply(table[(g2, act(src, g1, y))], table[(g1, y)], tgt.group)
            if lhs != table[(multiply(g2, g1, src.group), y)]:
                ok = False
        if label == "identity":
            ok = ok and all(d == g for g, _, d in cocycle.table)
        if label == "quotient":
            ok = ok and len(cocycle.kernel()) == 2
    record(10, "cocycle identity on 200 random triples per example", ok, started, 10.0)


def test_criterion_11_change_of_metric():
    started = time.monotonic()
    from warpcone.actions import PermutationMap

    systems = [
        rotation_circle_system([F(1, 5)], circle_net(10)),
        staircase_pl_system(40, 20),
        action_system(
            GroupSpec.finite_cyclic(2),
            MatrixNet(["a", "b"], [[0, F(7, 2)], [F(7, 2), 0]]),
            {"g": PermutationMap({"a": "b", "b": "a"})},
        ),
    ]
    ok = True
    for sys in systems:
        result = change_of_metric(sys)
        if result.max_generator_ratio > 4:
            ok = False
        args = [a for a, _ in result.breakpoints]
        vals = [v for _, v in result.breakpoints]
        if not (args[0] == 0 and vals[0] == 0):
            ok = False
        if any(b <= a for a, b in zip(args, args[1:])):
            ok = False
        if any(b <= a for a, b in zip(vals, vals[1:])):
            ok = False
        slopes = [
            (v1 - v0) / (a1 - a0)
            for (a0, v0), (a1, v1) in zip(result.breakpoints, result.breakpoints[1:])
        ]
        if any(s1 > s0 for s0, s1 in zip(slopes, slopes[1:])):
            ok = False
    record(11, "generators 4-Lipschitz in the compressed metric; c concave increasing", ok, started, 10.0)
