from fractions import Fraction

import pytest

from bicausal_ot import (
    CostSpec,
    biadapted_feasibility,
    cell_agreement,
    classify_monge,
    convergence_report,
    diagonal_coupling,
    grid_partition,
    is_bicausal,
    make_space,
    marginals,
    mesh_bound_check,
    microatomize,
    monge_approximation,
    product_coupling,
    pushforward,
    solve_bicausal_dp,
    split_bijection,
    verify_adapted,
)
from bicausal_ot.approx import product_mesh_pow, wasserstein_pp_between
from bicausal_ot.errors import CellAgreementRequired, PlanNotRefining
from bicausal_ot.generators import (
    fixture_dyadic,
    paper_example_pair,
    random_instance,
)
from bicausal_ot.lifting import RefinementPlan, plan_for_measures

from conftest import binary_space, measure

F = Fraction


# -- partitions -------------------------------------------------------------

def test_grid_partition_one_cell_when_target_exceeds_diameter():
    sp = make_space([[("a", (0,)), ("b", (F(1, 4),)), ("c", (F(3, 4),))]])
    part = grid_partition(sp, F(2))
    assert part.cells[0] == (("a", "b", "c"),)
    assert part.step_mesh(0) == F(3, 4)


def test_grid_partition_zero_target_gives_singletons():
    sp = binary_space(2)
    part = grid_partition(sp, F(0))
    assert part.is_singleton()
    assert part.mesh() == F(0)


def test_grid_partition_half_open_boxes_with_boundary_rule():
    sp = make_space([[("p", (0,)), ("q", (F(2, 5),)), ("r", (F(3, 5),)), ("s", (1,))]])
    part = grid_partition(sp, F(1, 2))
    assert part.cells[0] == (("p", "q"), ("r", "s"))
    assert part.step_mesh(0) == F(2, 5)


def test_grid_partition_two_dimensional_boxes():
    sp = make_space(
        [[("a", (0, 0)), ("b", (F(3, 10), F(2, 5))), ("c", (1, 1))]]
    )
    part = grid_partition(sp, F(1))
    # side is at most 1/sqrt(2), so a and b share a box while c stands alone;
    # their diameter is sqrt(0.09 + 0.16) = 1/2, an exact rational
    assert part.cells[0] == (("a", "b"), ("c",))
    assert part.step_mesh(0) == F(1, 2)


def test_grid_partition_cells_disjoint_and_covering():
    sp = make_space([[(chr(97 + i), (F(i, 7),)) for i in range(7)]] * 2)
    for target in (F(1, 2), F(1, 3), F(1, 7), F(0)):
        part = grid_partition(sp, target)
        for t in range(2):
            seen = [lab for cell in part.cells[t] for lab in cell]
            assert sorted(seen) == sorted(sp.labels(t))


# -- split maps ---------------------------------------------------------------

def test_split_identity_when_plans_match():
    sp = make_space([[("a", (0,)), ("b", (1,))]])
    mu = measure(sp, {("a",): F(1, 2), ("b",): F(1, 2)})
    micro = microatomize(mu, RefinementPlan((2,)))
    smap = split_bijection(micro, grid_partition(sp, F(2)), RefinementPlan((2,)))
    for src, dst in smap.bijection.forward.items():
        assert src == dst


def test_split_requires_refining_plan():
    sp = make_space([[("a", (0,)), ("b", (1,))]])
    mu = measure(sp, {("a",): F(1, 2), ("b",): F(1, 2)})
    micro = microatomize(mu, RefinementPlan((2,)))
    with pytest.raises(PlanNotRefining):
        split_bijection(micro, grid_partition(sp, F(2)), RefinementPlan((3,)))


def test_split_one_cell_moves_mass_within_cell_only():
    sp = make_space([[("a", (0,)), ("b", (F(1, 4),))]])
    mu = measure(sp, {("a",): F(1, 2), ("b",): F(1, 2)})
    micro = microatomize(mu, RefinementPlan((2,)))
    smap = split_bijection(micro, grid_partition(sp, F(2)), RefinementPlan((4,)))
    # one cell at the last step pools both points: the coarse-to-fine
    # transpose sends the second fine slot of a to the first fine slot of b
    fwd = dict(smap.bijection.forward)
    assert fwd[(("a", 0),)] == (("a", 0),)
    assert fwd[(("a", 1),)] == (("b", 0),)
    assert fwd[(("b", 0),)] == (("a", 1),)
    assert fwd[(("b", 1),)] == (("b", 1),)
    assert smap.cell_preserving()
    # measure preservation: the image of the uniform fine measure is itself
    uniform = smap.micro.uniform_measure()
    image = pushforward(uniform, fwd, uniform.space)
    assert image.mass == uniform.mass


def test_split_two_singleton_cells_refine_within_their_own_points():
    sp = make_space([[("a", (0,)), ("b", (1,))]])
    mu = measure(sp, {("a",): F(1, 2), ("b",): F(1, 2)})
    micro = microatomize(mu, RefinementPlan((2,)))
    smap = split_bijection(micro, grid_partition(sp, F(1, 2)), RefinementPlan((4,)))
    for src, dst in smap.bijection.forward.items():
        assert src[0][0] == dst[0][0]  # each coarse slot splits inside its point
    assert smap.cell_preserving()


def test_split_biadapted_on_two_steps():
    mu, _ = fixture_dyadic()
    coarse = plan_for_measures(mu)
    fine = RefinementPlan(tuple(2 * d for d in coarse.denominators))
    micro = microatomize(mu, coarse)
    smap = split_bijection(micro, grid_partition(mu.space, F(1, 4)), fine)
    assert smap.adapted_forward.ok and smap.adapted_inverse.ok
    assert smap.cell_preserving()
    uniform = smap.micro.uniform_measure()
    image = pushforward(uniform, dict(smap.bijection.forward), uniform.space)
    assert image.mass == uniform.mass


# -- the approximation pipeline ----------------------------------------------

def _dyadic_pi():
    mu, nu = fixture_dyadic()
    return solve_bicausal_dp(mu, nu, CostSpec.metric(1)).optimizer


def test_monge_approximation_singleton_cells_reproduce_the_coupling():
    pi = _dyadic_pi()
    part_x = grid_partition(pi.left, F(0))
    part_y = grid_partition(pi.right, F(0))
    approx = monge_approximation(pi, part_x, part_y)
    assert approx.pi_n.mass == pi.mass


def test_monge_approximation_one_cell_keeps_marginals():
    pi = _dyadic_pi()
    mu, nu = marginals(pi)
    plan = plan_refinement_doubled(pi)
    approx = monge_approximation(
        pi, grid_partition(pi.left, F(4)), grid_partition(pi.right, F(4)), plan=plan
    )
    got_mu, got_nu = marginals(approx.pi_n)
    assert dict(got_mu.items()) == dict(mu.items())
    assert dict(got_nu.items()) == dict(nu.items())
    assert classify_monge(approx.micro_coupling).tag == "biadapted-monge"


def plan_refinement_doubled(pi):
    from bicausal_ot import plan_refinement

    mu, nu = marginals(pi)
    joint = plan_refinement(mu, nu, pi)
    return RefinementPlan(tuple(2 * d for d in joint.denominators))


def test_monge_approximation_dyadic_fixture_cell_agreement():
    pi = _dyadic_pi()
    plan = plan_refinement_doubled(pi)
    for target in (F(1, 2), F(1, 4)):
        part_x = grid_partition(pi.left, target)
        part_y = grid_partition(pi.right, target)
        approx = monge_approximation(pi, part_x, part_y, plan=plan)
        result = cell_agreement(approx.pi_n, pi, part_x, part_y)
        assert result.ok
        assert approx.bijection.is_bijection()
        assert verify_adapted(approx.bijection, "forward").ok
        assert verify_adapted(approx.bijection, "inverse").ok


def test_cell_agreement_trivial_and_singleton_equivalence():
    pi = _dyadic_pi()
    part_x = grid_partition(pi.left, F(1, 4))
    part_y = grid_partition(pi.right, F(1, 4))
    assert cell_agreement(pi, pi, part_x, part_y).ok
    # singleton cells: agreement is full equality of couplings
    sx = grid_partition(pi.left, F(0))
    sy = grid_partition(pi.right, F(0))
    assert cell_agreement(pi, pi, sx, sy).ok
    other = product_coupling(*marginals(pi))
    if other.mass != pi.mass:
        assert not cell_agreement(other, pi, sx, sy).ok


def test_mesh_bound_trivial_when_couplings_equal():
    pi = _dyadic_pi()
    part_x = grid_partition(pi.left, F(1, 4))
    part_y = grid_partition(pi.right, F(1, 4))
    res = mesh_bound_check(pi, pi, 1, part_x, part_y)
    assert res.wp_p == F(0)
    assert res.ok


def test_mesh_bound_one_cell_partition_accepts_any_equal_marginal_coupling():
    pi = _dyadic_pi()
    mu, nu = marginals(pi)
    other = product_coupling(mu, nu)
    part_x = grid_partition(pi.left, F(4))
    part_y = grid_partition(pi.right, F(4))
    res = mesh_bound_check(other, pi, 1, part_x, part_y)
    assert res.ok  # bound is the sum of step diameters


def test_mesh_bound_requires_cell_agreement():
    pi = _dyadic_pi()
    mu, nu = marginals(pi)
    other = product_coupling(mu, nu)
    sx = grid_partition(pi.left, F(0))
    sy = grid_partition(pi.right, F(0))
    if other.mass != pi.mass:
        with pytest.raises(CellAgreementRequired):
            mesh_bound_check(other, pi, 1, sx, sy)


def test_dyadic_fixture_mesh_ladder_frozen_values():
    """Frozen regression of the full pipeline on the dyadic fixture."""
    pi = _dyadic_pi()
    report = convergence_report(pi, [F(1, 2), F(1, 4), F(1, 8), F(0)], 1)
    assert report.ok
    wp = [row.wp_p for row in report.rows]
    assert wp == [F(5, 32), F(5, 128), F(1, 64), F(0)]
    for row in report.rows:
        assert row.cells_ok and row.bound_ok
        assert row.cost_gap <= row.wp_p  # 1-Lipschitz cost against W_1
    # weakly decreasing transport error along the ladder
    assert all(a >= b for a, b in zip(wp, wp[1:]))


def test_convergence_report_diagonal_rows_are_zero():
    sp = binary_space(2)
    mu = measure(sp, {("a", "a"): F(1, 2), ("a", "b"): F(1, 4), ("b", "b"): F(1, 4)})
    report = convergence_report(diagonal_coupling(mu), [F(1, 2), F(0)], 1)
    assert report.ok
    assert all(row.wp_p == F(0) for row in report.rows)


def test_convergence_report_random_instances():
    for seed in (0, 5, 9):
        _, _, pi = random_instance(seed, 2, 3, 4)
        report = convergence_report(pi, [F(1, 2), F(1, 4), F(0)], 1)
        assert report.ok
        assert report.rows[-1].wp_p == F(0)


def test_pipeline_with_squared_metric():
    pi = _dyadic_pi()
    report = convergence_report(pi, [F(1, 2), F(1, 8), F(0)], 2)
    assert report.ok
    assert report.rows[-1].wp_p == F(0)
    for row in report.rows:
        assert row.cells_ok and row.bound_ok


def test_surjective_mode_keeps_marginals_and_cells():
    pi = _dyadic_pi()
    mu, nu = marginals(pi)
    part_x = grid_partition(pi.left, F(1, 4))
    part_y = grid_partition(pi.right, F(1, 4))
    approx = monge_approximation(
        pi, part_x, part_y, plan=plan_refinement_doubled(pi), surjective_only=True
    )
    assert approx.bijection is None
    got_mu, got_nu = marginals(approx.pi_n)
    assert dict(got_mu.items()) == dict(mu.items())
    assert dict(got_nu.items()) == dict(nu.items())
    assert cell_agreement(approx.pi_n, pi, part_x, part_y).ok
    # the micro-to-base map is a function on micro atoms (an adapted Monge
    # coupling at micro resolution), generally non-injective
    tags = classify_monge(approx.micro_coupling)
    assert tags.is_monge and tags.is_adapted


def test_approximations_remain_bicausal_along_the_ladder():
    pi = _dyadic_pi()
    plan = plan_refinement_doubled(pi)
    for target in (F(1, 2), F(1, 4), F(0)):
        part_x = grid_partition(pi.left, target)
        part_y = grid_partition(pi.right, target)
        approx = monge_approximation(pi, part_x, part_y, plan=plan)
        assert is_bicausal(approx.pi_n).ok
    # the singleton-mesh approximation recovers pi itself, which is bicausal
    assert is_bicausal(pi).ok


def test_report_values_invariant_under_relabeling():
    mu, nu = fixture_dyadic()
    pi = solve_bicausal_dp(mu, nu, CostSpec.metric(1)).optimizer
    report = convergence_report(pi, [F(1, 4)], 1)

    mapping = {"a": "p", "b": "q", "c": "r", "d": "s"}

    def relabel_measure(m):
        space = make_space(
            [[(mapping[p.label], p.coord) for p in step.points] for step in m.space.steps]
        )
        return type(m)(space, {tuple(mapping[l] for l in path): v for path, v in m.items()})

    mu2, nu2 = relabel_measure(mu), relabel_measure(nu)
    pi2 = solve_bicausal_dp(mu2, nu2, CostSpec.metric(1)).optimizer
    report2 = convergence_report(pi2, [F(1, 4)], 1)
    assert [r.wp_p for r in report.rows] == [r.wp_p for r in report2.rows]
    assert [r.cost_gap for r in report.rows] == [r.cost_gap for r in report2.rows]


# -- feasibility --------------------------------------------------------------

def test_feasibility_identity_pair():
    sp = binary_space(2)
    mu = measure(sp, {("a", "a"): F(1, 2), ("b", "b"): F(1, 4), ("b", "a"): F(1, 4)})
    res = biadapted_feasibility(mu, mu)
    assert res.feasible
    assert all(src == dst for src, dst in res.mapping.items())


def test_feasibility_paper_pair_is_infeasible_with_multiset_witness():
    mu, nu = paper_example_pair()
    res = biadapted_feasibility(mu, nu)
    assert not res.feasible
    t, xh, yh, ms_x, ms_y = res.witness
    assert t == 2
    assert ms_x == (F(1),)
    assert ms_y == (F(1, 2), F(1, 2))


def test_feasibility_equal_multisets_different_supports():
    left = make_space([[("a", (0,)), ("b", (1,))], [("a", (0,)), ("b", (1,))]])
    right = make_space([[("x", (5,)), ("y", (7,))], [("x", (5,)), ("y", (7,))]])
    mu = measure(left, {("a", "a"): F(1, 3), ("a", "b"): F(1, 3), ("b", "a"): F(1, 3)})
    nu = measure(right, {("x", "x"): F(1, 3), ("x", "y"): F(1, 3), ("y", "x"): F(1, 3)})
    res = biadapted_feasibility(mu, nu)
    assert res.feasible
    assert res.mapping != {p: p for p in mu.support}
    image = pushforward(mu, res.mapping, nu.space)
    assert image.mass == nu.mass
    # the assembled map is a biadapted Monge coupling of the pair
    from bicausal_ot.couplings import monge_coupling

    pi = monge_coupling(mu, res.mapping, nu.space)
    assert classify_monge(pi).tag == "biadapted-monge"
    assert is_bicausal(pi).ok


def test_feasibility_witness_holds_for_any_first_step_alphabet():
    # conditional multisets {1} vs {1/2, 1/2} at the second step force
    # infeasibility regardless of the first-step alphabet size
    for k in (1, 2, 3):
        left = make_space(
            [[(chr(97 + i), (F(i),)) for i in range(k)], [("z", (0,))]]
        )
        right = make_space(
            [[(chr(97 + i), (F(i),)) for i in range(k)], [("u", (0,)), ("v", (1,))]]
        )
        mu = measure(left, {(chr(97 + i), "z"): F(1, k) for i in range(k)})
        nu_mass = {}
        for i in range(k):
            nu_mass[(chr(97 + i), "u")] = F(1, 2 * k)
            nu_mass[(chr(97 + i), "v")] = F(1, 2 * k)
        nu = measure(right, nu_mass)
        res = biadapted_feasibility(mu, nu)
        assert not res.feasible
        assert res.witness[3] == (F(1),)
        assert res.witness[4] == (F(1, 2), F(1, 2))


# -- metric plumbing ----------------------------------------------------------

def test_exchangeable_first_step_points_move_across_points():
    """Two step-1 points with identical conditional subtrees sit in one cell;
    the split map may then swap them, so the composed approximation exercises
    diverging input and output histories and must still verify everything."""
    from bicausal_ot import PathMeasure, plan_refinement
    from bicausal_ot.solvers import solve_bicausal_dp

    sp = make_space([[("a", (0,)), ("b", (F(1, 8),))]] * 2)
    mu = PathMeasure(
        sp,
        {("a", "a"): F(1, 4), ("a", "b"): F(1, 4), ("b", "a"): F(1, 4), ("b", "b"): F(1, 4)},
    )
    nu = PathMeasure(
        sp,
        {("a", "a"): F(1, 8), ("a", "b"): F(3, 8), ("b", "a"): F(1, 8), ("b", "b"): F(3, 8)},
    )
    pi = solve_bicausal_dp(mu, nu, CostSpec.metric(1)).optimizer
    part = grid_partition(sp, F(1, 2))
    joint = plan_refinement(mu, nu, pi)
    plan = RefinementPlan(tuple(2 * d for d in joint.denominators))
    approx = monge_approximation(pi, part, part, plan=plan)
    assert approx.bijection.is_bijection()
    assert verify_adapted(approx.bijection, "forward").ok
    assert verify_adapted(approx.bijection, "inverse").ok
    assert cell_agreement(approx.pi_n, pi, part, part).ok
    # the left rearrangement really moves mass between the two points
    assert any(
        src[0][0] != dst[0][0] for src, dst in approx.left_split.bijection.forward.items()
    )


def test_product_mesh_adds_step_meshes():
    sp = make_space([[("a", (0,)), ("b", (F(1, 8),))]] * 2)
    part = grid_partition(sp, F(1, 2))
    assert product_mesh_pow(part, part, 1) == 4 * F(1, 8)


def test_wasserstein_between_couplings_zero_iff_equal():
    _, _, pi = random_instance(2, 2, 2, 4)
    assert wasserstein_pp_between(pi, pi, 1) == F(0)
