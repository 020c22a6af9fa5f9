import random
from fractions import Fraction

import pytest

from bicausal_ot.errors import UnbalancedMasses
from bicausal_ot.transport import enumerate_vertices, solve_transport

F = Fraction


def _certify(res, supply, demand, cost):
    """Independent optimality certificate: primal feasibility, dual
    feasibility, and equality of the two objective values."""
    m, n = len(supply), len(demand)
    row_totals = [F(0)] * m
    col_totals = [F(0)] * n
    for (i, j), f in res.plan.items():
        assert f > 0
        row_totals[i] += f
        col_totals[j] += f
    assert row_totals == [F(s) for s in supply]
    assert col_totals == [F(d) for d in demand]
    for i in range(m):
        for j in range(n):
            if supply[i] > 0 and demand[j] > 0:
                assert res.row_duals[i] + res.col_duals[j] <= cost[i][j]
    dual_value = sum(
        (res.row_duals[i] * supply[i] for i in range(m)), F(0)
    ) + sum((res.col_duals[j] * demand[j] for j in range(n)), F(0))
    assert dual_value == res.value
    assert res.value == sum((cost[i][j] * f for (i, j), f in res.plan.items()), F(0))


def test_zero_cost_on_identical_masses():
    supply = [F(1, 3), F(2, 3)]
    cost = [[F(0), F(1)], [F(1), F(0)]]
    res = solve_transport(supply, supply, cost)
    assert res.value == F(0)
    assert res.plan == {(0, 0): F(1, 3), (1, 1): F(2, 3)}
    _certify(res, supply, supply, cost)


def test_permutation_match_costs_zero():
    supply = [F(1, 2), F(1, 2)]
    cost = [[F(0), F(1)], [F(1), F(0)]]
    res = solve_transport(supply, supply, cost)
    assert res.value == F(0)


def test_asymmetric_masses_need_half():
    supply = [F(3, 4), F(1, 4)]
    demand = [F(1, 4), F(3, 4)]
    cost = [[F(0), F(1)], [F(1), F(0)]]
    res = solve_transport(supply, demand, cost)
    assert res.value == F(1, 2)
    _certify(res, supply, demand, cost)
    # independent oracle: both polytope vertices, evaluated directly
    vertices = enumerate_vertices(supply, demand)
    values = {
        sum((cost[i][j] * f for (i, j), f in v.items()), F(0)) for v in vertices
    }
    assert min(values) == F(1, 2)


def test_rejects_unbalanced_masses():
    with pytest.raises(UnbalancedMasses):
        solve_transport([F(1)], [F(1, 2)], [[F(0)]])


def test_zero_rows_and_columns_are_ignored():
    res = solve_transport(
        [F(1, 2), F(0), F(1, 2)],
        [F(0), F(1)],
        [[F(3), F(1)], [F(0), F(0)], [F(5), F(2)]],
    )
    assert res.value == F(1) * F(1, 2) + F(2) * F(1, 2)
    assert (1, 0) not in res.plan


def _random_instance(rng, m, n, denom=8, cmax=6):
    a = [1 + rng.randrange(denom) for _ in range(m)]
    b = [1 + rng.randrange(denom) for _ in range(n)]
    total_a, total_b = sum(a), sum(b)
    supply = [F(x, total_a) for x in a]
    demand = [F(x, total_b) for x in b]
    cost = [[F(rng.randrange(cmax + 1)) for _ in range(n)] for _ in range(m)]
    return supply, demand, cost


def test_simplex_agrees_with_vertex_enumeration_on_random_instances():
    rng = random.Random(42)
    for _ in range(60):
        m = 1 + rng.randrange(3)
        n = 1 + rng.randrange(3)
        supply, demand, cost = _random_instance(rng, m, n)
        res = solve_transport(supply, demand, cost)
        _certify(res, supply, demand, cost)
        best = min(
            sum((cost[i][j] * f for (i, j), f in v.items()), F(0))
            for v in enumerate_vertices(supply, demand)
        )
        assert res.value == best


def test_vertices_have_basic_support_and_exact_marginals():
    supply = [F(1, 3), F(1, 3), F(1, 3)]
    demand = [F(1, 2), F(1, 4), F(1, 4)]
    for v in enumerate_vertices(supply, demand):
        rows = [F(0)] * 3
        cols = [F(0)] * 3
        for (i, j), f in v.items():
            assert f > 0
            rows[i] += f
            cols[j] += f
        assert rows == supply and cols == demand
        assert len(v) <= 5  # at most m + n - 1 positive entries at a vertex


def test_degenerate_ties_terminate():
    supply = [F(1, 4), F(1, 4), F(1, 4), F(1, 4)]
    demand = [F(1, 4), F(1, 4), F(1, 4), F(1, 4)]
    cost = [[F((i * j) % 3) for j in range(4)] for i in range(4)]
    res = solve_transport(supply, demand, cost)
    _certify(res, supply, demand, cost)


def test_deterministic_output_across_runs():
    supply = [F(3, 8), F(5, 8)]
    demand = [F(1, 2), F(1, 2)]
    cost = [[F(2), F(2)], [F(2), F(2)]]  # fully degenerate costs
    first = solve_transport(supply, demand, cost)
    second = solve_transport(supply, demand, cost)
    assert first.plan == second.plan and first.value == second.value
