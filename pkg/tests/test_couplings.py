from fractions import Fraction

import pytest

from bicausal_ot import (
    Coupling,
    bicausal_constraints,
    classify_monge,
    diagonal_coupling,
    is_bicausal,
    is_causal,
    make_space,
    marginals,
    product_coupling,
    swap,
)
from bicausal_ot.couplings import assemble_stagewise, cost_integral, stage_conditionals
from bicausal_ot.errors import InvalidCoupling
from bicausal_ot.generators import fixture_aw_gap, random_instance
from bicausal_ot.measures import next_step_kernel
from bicausal_ot.solvers import CostSpec, solve_kantorovich

from conftest import binary_space, comonotone_table, coupling, measure

F = Fraction


def test_coupling_rejects_bad_total():
    sp = binary_space(1)
    with pytest.raises(InvalidCoupling):
        Coupling(sp, sp, {(("a",), ("a",)): F(1, 2)})


def test_coupling_rejects_unknown_labels_and_shapes():
    sp = binary_space(1)
    with pytest.raises(InvalidCoupling):
        Coupling(sp, sp, {(("z",), ("a",)): F(1)})
    with pytest.raises(InvalidCoupling):
        Coupling(sp, sp, {(("a", "a"), ("a",)): F(1)})
    with pytest.raises(InvalidCoupling):
        Coupling(sp, sp, {(("a",), ("a",)): F(3, 2), (("b",), ("b",)): F(-1, 2)})


def test_marginals_of_product_and_diagonal():
    sp = binary_space(2)
    mu = measure(sp, {("a", "a"): F(1, 3), ("b", "b"): F(2, 3)})
    nu = measure(sp, {("a", "b"): F(1, 4), ("b", "a"): F(3, 4)})
    got_mu, got_nu = marginals(product_coupling(mu, nu))
    assert dict(got_mu.items()) == dict(mu.items())
    assert dict(got_nu.items()) == dict(nu.items())
    d_mu, d_nu = marginals(diagonal_coupling(mu))
    assert dict(d_mu.items()) == dict(mu.items()) == dict(d_nu.items())


def test_marginals_match_row_and_column_sums():
    sp = binary_space(1)
    table = {
        (("a",), ("a",)): F(1, 5),
        (("a",), ("b",)): F(3, 10),
        (("b",), ("a",)): F(1, 4),
        (("b",), ("b",)): F(1, 4),
    }
    pi = Coupling(sp, sp, table)
    mu, nu = marginals(pi)
    # independent row/column summation
    rows, cols = {}, {}
    for (x, y), v in table.items():
        rows[x] = rows.get(x, F(0)) + v
        cols[y] = cols.get(y, F(0)) + v
    assert dict(mu.items()) == rows
    assert dict(nu.items()) == cols


def test_swap_involution_and_transpose():
    sp = binary_space(1)
    pi = coupling(sp, sp, {(("a",), ("b",)): F(1, 3), (("b",), ("a",)): F(2, 3)})
    assert dict(swap(swap(pi)).items()) == dict(pi.items())
    assert swap(pi)(("b",), ("a",)) == F(1, 3)
    mu = measure(binary_space(2), {("a", "a"): F(1, 2), ("b", "b"): F(1, 2)})
    diag = diagonal_coupling(mu)
    assert dict(swap(diag).items()) == dict(diag.items())
    a, b = marginals(pi)
    sb, sa = marginals(swap(pi))
    assert dict(sb.items()) == dict(b.items())
    assert dict(sa.items()) == dict(a.items())


def test_product_coupling_is_causal_and_bicausal():
    sp = binary_space(2)
    mu = measure(sp, {("a", "a"): F(1, 6), ("a", "b"): F(1, 3), ("b", "a"): F(1, 2)})
    nu = measure(sp, {("a", "a"): F(1, 4), ("b", "b"): F(3, 4)})
    pi = product_coupling(mu, nu)
    assert is_causal(pi).verdict == "causal"
    assert is_bicausal(pi).verdict == "bicausal"


def test_one_step_couplings_are_causal():
    sp = binary_space(1)
    pi = coupling(sp, sp, {(("a",), ("b",)): F(1, 2), (("b",), ("a",)): F(1, 2)})
    assert is_causal(pi).ok and is_bicausal(pi).ok


def _anticipative_coupling():
    """y_1 copies x_2; built on 2 x 2 x 2 x 1 alphabets."""
    x_space = binary_space(2)
    y_space = make_space([[("a", (0,)), ("b", (1,))], [("z", (0,))]])
    q = F(1, 4)
    mass = {}
    for x1 in "ab":
        for x2 in "ab":
            mass[((x1, x2), (x2, "z"))] = q
    return Coupling(x_space, y_space, mass)


def test_anticipative_coupling_is_not_causal_with_witness():
    pi = _anticipative_coupling()
    report = is_causal(pi)
    assert report.verdict == "not-causal"
    w = report.witness
    assert w.t == 1 and w.side == "left"
    # the witness must reproduce a genuine violation of the conditional
    # identity: recompute both values straight from the mass table
    joint = F(0)
    hit = F(0)
    for (x, y), v in pi.items():
        if x[: w.t] == w.x_hist and y[: w.t] == w.y_hist:
            joint += v
            if x[w.t] == w.point:
                hit += v
    assert joint > 0
    assert hit / joint == w.conditional
    mu, _ = marginals(pi)
    assert next_step_kernel(mu, w.t)(w.x_hist)((w.point,)) == w.expected
    assert w.conditional != w.expected


def test_bicausal_equals_causal_both_ways_on_random_instances():
    for seed in range(12):
        _, _, pi = random_instance(seed, 2, 2, 4)
        both = is_causal(pi).ok and is_causal(swap(pi)).ok
        assert is_bicausal(pi).ok == both
    pi = _anticipative_coupling()
    assert is_bicausal(pi).ok == (is_causal(pi).ok and is_causal(swap(pi)).ok)


def _dependent_pair():
    sp = binary_space(2)
    mu = measure(
        sp,
        {("a", "a"): F(3, 8), ("a", "b"): F(1, 8), ("b", "a"): F(1, 8), ("b", "b"): F(3, 8)},
    )
    nu = measure(
        sp,
        {("a", "a"): F(1, 6), ("a", "b"): F(1, 6), ("b", "a"): F(2, 3)},
    )
    return mu, nu


def _quantile_coupling(mu, nu):
    """Stepwise quantile (comonotone) coupling, built independently of the
    library's solvers from the two kernel chains."""
    choices = {}
    k_mu = {t: next_step_kernel(mu, t) for t in range(mu.space.n_steps)}
    k_nu = {t: next_step_kernel(nu, t) for t in range(nu.space.n_steps)}
    for t in range(mu.space.n_steps):
        for xh in k_mu[t].histories():
            for yh in k_nu[t].histories():
                row = {lab: v for (lab,), v in k_mu[t](xh).items()}
                col = {lab: v for (lab,), v in k_nu[t](yh).items()}
                choices[(xh, yh)] = comonotone_table(row, col)
    return assemble_stagewise(mu.space, nu.space, choices)


def test_quantile_stagewise_coupling_is_bicausal():
    mu, nu = _dependent_pair()
    pi = _quantile_coupling(mu, nu)
    got_mu, got_nu = marginals(pi)
    assert dict(got_mu.items()) == dict(mu.items())
    assert dict(got_nu.items()) == dict(nu.items())
    assert is_bicausal(pi).verdict == "bicausal"


def test_kantorovich_optimizer_uses_future_information_on_gap_fixture():
    mu, nu = fixture_aw_gap()
    kp = solve_kantorovich(mu, nu, CostSpec.metric(1))
    assert is_bicausal(kp.optimizer).verdict == "not-bicausal"


def test_classify_diagonal_is_biadapted_monge():
    mu = measure(binary_space(2), {("a", "b"): F(1, 2), ("b", "a"): F(1, 2)})
    result = classify_monge(diagonal_coupling(mu))
    assert result.tag == "biadapted-monge"
    assert result.forward[("a", "b")] == ("a", "b")
    assert result.inverse[("b", "a")] == ("b", "a")


def test_classify_product_with_spread_target_is_not_monge():
    sp = binary_space(2)
    mu = measure(sp, {("a", "a"): F(1, 2), ("b", "b"): F(1, 2)})
    nu = measure(sp, {("a", "a"): F(1, 2), ("b", "b"): F(1, 2)})
    result = classify_monge(product_coupling(mu, nu))
    assert result.tag == "not-monge"
    assert not result.is_monge


def test_classify_time_reversal_is_bijective_not_adapted():
    sp = binary_space(2)
    q = F(1, 4)
    mu = measure(sp, {("a", "a"): q, ("a", "b"): q, ("b", "a"): q, ("b", "b"): q})
    reversal = {p: (p[1], p[0]) for p in mu.support}
    mass = {(p, reversal[p]): v for p, v in mu.items()}
    result = classify_monge(Coupling(sp, sp, mass))
    assert result.tag == "bijective-monge"
    assert result.is_bijective and not result.is_adapted
    # independent scan: two support paths share x_1 but map to different y_1
    assert reversal[("a", "a")][0] != reversal[("a", "b")][0]


def test_biadapted_monge_classification_implies_bicausal():
    for seed in range(6):
        mu, _, _ = random_instance(seed, 2, 2, 4, with_pi=False)
        pi = diagonal_coupling(mu)
        assert classify_monge(pi).tag == "biadapted-monge"
        assert is_bicausal(pi).ok


def test_constraints_one_step_is_marginals_only():
    sp = binary_space(1)
    mu = measure(sp, {("a",): F(1, 3), ("b",): F(2, 3)})
    nu = measure(sp, {("a",): F(1, 2), ("b",): F(1, 2)})
    system = bicausal_constraints(mu, nu)
    assert len(system.blocks) == 1
    block = system.blocks[0]
    assert block.t == 1 and block.x_hist == () and block.y_hist == ()
    assert block.equality_count == 4


def test_constraints_dirac_first_steps_reduce_to_second_kernels():
    x_space = make_space([[("o", (0,))], [("a", (0,)), ("b", (1,))]])
    mu = measure(x_space, {("o", "a"): F(1, 3), ("o", "b"): F(2, 3)})
    nu = measure(x_space, {("o", "a"): F(1, 2), ("o", "b"): F(1, 2)})
    system = bicausal_constraints(mu, nu)
    stage2 = system.blocks_at(2)
    assert len(stage2) == 1
    block = stage2[0]
    assert dict(block.rows) == {"a": F(1, 3), "b": F(2, 3)}
    assert dict(block.cols) == {"a": F(1, 2), "b": F(1, 2)}


def test_constraints_count_matches_hand_enumeration():
    mu, nu = _dependent_pair()
    system = bicausal_constraints(mu, nu)
    # hand enumeration: stage 1 has one block; stage 2 has one block per pair
    # of positive-mass one-step prefixes; each block contributes a constraint
    # per conditional support point on each side
    expected_blocks = 1
    mu_prefixes = {p[:1] for p in mu.support}
    nu_prefixes = {p[:1] for p in nu.support}
    expected_blocks += len(mu_prefixes) * len(nu_prefixes)
    assert len(system.blocks) == expected_blocks
    expected_equalities = 0
    k_mu0 = next_step_kernel(mu, 0)
    k_nu0 = next_step_kernel(nu, 0)
    expected_equalities += len(k_mu0(()).support) + len(k_nu0(()).support)
    k_mu1 = next_step_kernel(mu, 1)
    k_nu1 = next_step_kernel(nu, 1)
    for xh in sorted(mu_prefixes):
        for yh in sorted(nu_prefixes):
            expected_equalities += len(k_mu1(xh).support) + len(k_nu1(yh).support)
    assert system.equality_count == expected_equalities


def test_stagewise_system_characterizes_the_bicausal_set():
    """Both directions: any block-by-block choice of conditional couplings
    assembles into a bicausal coupling, and the stage conditionals of a
    bicausal coupling solve the blocks they reach."""
    mu, nu = _dependent_pair()
    system = bicausal_constraints(mu, nu)
    # forward: pick the independent coupling in every block
    choices = {}
    for block in system.blocks:
        choices[(block.x_hist, block.y_hist)] = {
            (xl, yl): mx * my for xl, mx in block.rows for yl, my in block.cols
        }
    pi = assemble_stagewise(mu.space, nu.space, choices)
    assert is_bicausal(pi).ok
    got_mu, got_nu = marginals(pi)
    assert dict(got_mu.items()) == dict(mu.items())
    assert dict(got_nu.items()) == dict(nu.items())
    # reverse: the conditionals of any bicausal coupling solve their blocks
    for seed in range(4):
        _, _, rnd = random_instance(seed, 2, 2, 4)
        r_mu, r_nu = marginals(rnd)
        r_system = bicausal_constraints(r_mu, r_nu)
        blocks = {(b.t, b.x_hist, b.y_hist): b for b in r_system.blocks}
        for t in (1, 2):
            for (xh, yh), table in stage_conditionals(rnd, t).items():
                block = blocks[(t, xh, yh)]
                rows = {lab: F(0) for lab, _ in block.rows}
                cols = {lab: F(0) for lab, _ in block.cols}
                for (xl, yl), v in table.items():
                    rows[xl] += v
                    cols[yl] += v
                assert rows == dict(block.rows)
                assert cols == dict(block.cols)


def test_stage_conditionals_normalize_each_history():
    _, _, pi = random_instance(3, 2, 2, 4)
    for t in (1, 2):
        for table in stage_conditionals(pi, t).values():
            assert sum(table.values(), F(0)) == F(1)


def test_cost_integral_matches_direct_sum():
    sp = binary_space(1)
    pi = coupling(sp, sp, {(("a",), ("b",)): F(1, 2), (("b",), ("a",)): F(1, 2)})
    assert cost_integral(pi, lambda x, y: F(1) if x != y else F(0)) == F(1)
