"""Exact transportation solver: primal simplex on the transportation polytope
with rational arithmetic and Bland's smallest-index rule for both the entering
and the leaving variable, which rules out cycling. Instances are desk scale,
so determinism and exactness win over asymptotics.

Also provides exhaustive vertex enumeration of small transportation polytopes,
used by the brute-force oracle and as an independent test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .errors import UnbalancedMasses


@dataclass(frozen=True)
class TransportResult:
    value: Fraction
    plan: dict[tuple[int, int], Fraction]
    row_duals: tuple[Fraction, ...]
    col_duals: tuple[Fraction, ...]
    pivots: int

    def to_json(self):
        from ._util import format_rational

        return {
            "value": format_rational(self.value),
            "row_duals": [format_rational(u) for u in self.row_duals],
            "col_duals": [format_rational(v) for v in self.col_duals],
            "pivots": self.pivots,
        }


def _northwest_basis(supply: list[Fraction], demand: list[Fraction]):
    """Initial basic feasible solution with exactly m+n-1 basic cells."""
    m, n = len(supply), len(demand)
    a = list(supply)
    b = list(demand)
    flows: dict[tuple[int, int], Fraction] = {}
    basis: list[tuple[int, int]] = []
    i = j = 0
    while True:
        t = min(a[i], b[j])
        flows[(i, j)] = t
        basis.append((i, j))
        a[i] -= t
        b[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if a[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1
    return flows, basis


def _tree_adjacency(basis: Sequence[tuple[int, int]], m: int, n: int):
    adj: dict[int, list[tuple[int, tuple[int, int]]]] = {k: [] for k in range(m + n)}
    for (i, j) in basis:
        adj[i].append((m + j, (i, j)))
        adj[m + j].append((i, (i, j)))
    return adj


def _compute_duals(basis, cost, m, n):
    adj = _tree_adjacency(basis, m, n)
    u: list[Fraction | None] = [None] * m
    v: list[Fraction | None] = [None] * n
    u[0] = Fraction(0)
    stack = [0]
    while stack:
        node = stack.pop()
        for nbr, (i, j) in adj[node]:
            if nbr < m and u[nbr] is None:
                u[nbr] = cost[i][j] - v[j]
                stack.append(nbr)
            elif nbr >= m and v[nbr - m] is None:
                v[nbr - m] = cost[i][j] - u[i]
                stack.append(nbr)
    return u, v


def _cycle_of(basis, entering, m, n):
    """Unique alternating cycle created by adding the entering cell."""
    ei, ej = entering
    adj = _tree_adjacency(basis, m, n)
    start, goal = ei, m + ej
    parent: dict[int, tuple[int, tuple[int, int]]] = {start: (-1, (-1, -1))}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for nbr, cell in adj[node]:
            if nbr not in parent:
                parent[nbr] = (node, cell)
                stack.append(nbr)
    path_cells = []
    node = goal
    while node != start:
        prev, cell = parent[node]
        path_cells.append(cell)
        node = prev
    # orient: entering is '+', then alternate along the path back to start
    cycle = [(entering, 1)]
    sign = -1
    for cell in path_cells:
        cycle.append((cell, sign))
        sign = -sign
    return cycle


def solve_transport(
    supply: Sequence[Fraction],
    demand: Sequence[Fraction],
    cost: Sequence[Sequence[Fraction]],
) -> TransportResult:
    """Minimize sum c[i][j] x[i][j] over the transportation polytope.

    Returns the optimal vertex reached by the fixed pivot order together with
    feasible duals certifying optimality (all reduced costs nonnegative and
    the dual objective equals the primal value).
    """
    supply = [Fraction(s) for s in supply]
    demand = [Fraction(d) for d in demand]
    if any(s < 0 for s in supply) or any(d < 0 for d in demand):
        raise UnbalancedMasses("negative supply or demand")
    if sum(supply) != sum(demand):
        raise UnbalancedMasses(
            "total supply differs from total demand",
            supply=sum(supply),
            demand=sum(demand),
        )
    # strip zero rows and columns; they carry no flow
    rows = [i for i, s in enumerate(supply) if s > 0]
    cols = [j for j, d in enumerate(demand) if d > 0]
    if not rows:
        return TransportResult(Fraction(0), {}, tuple(Fraction(0) for _ in supply), tuple(Fraction(0) for _ in demand), 0)
    a = [supply[i] for i in rows]
    b = [demand[j] for j in cols]
    c = [[Fraction(cost[i][j]) for j in cols] for i in rows]
    m, n = len(a), len(b)

    flows, basis = _northwest_basis(a, b)
    basis_set = set(basis)
    pivots = 0
    while True:
        u, v = _compute_duals(basis, c, m, n)
        entering = None
        for i in range(m):
            for j in range(n):
                if (i, j) in basis_set:
                    continue
                if c[i][j] - u[i] - v[j] < 0:
                    entering = (i, j)
                    break
            if entering:
                break
        if entering is None:
            break
        cycle = _cycle_of(basis, entering, m, n)
        minus_cells = [cell for cell, sign in cycle if sign < 0]
        theta = min(flows[cell] for cell in minus_cells)
        leaving = min(cell for cell in minus_cells if flows[cell] == theta)
        for cell, sign in cycle:
            if cell == entering:
                flows[cell] = theta
            else:
                flows[cell] += sign * theta
        basis_set.remove(leaving)
        basis_set.add(entering)
        basis = sorted(basis_set)
        del flows[leaving]
        pivots += 1

    u, v = _compute_duals(basis, c, m, n)
    value = sum((c[i][j] * f for (i, j), f in flows.items()), Fraction(0))
    plan = {
        (rows[i], cols[j]): f for (i, j), f in sorted(flows.items()) if f > 0
    }
    row_duals = [Fraction(0)] * len(supply)
    col_duals = [Fraction(0)] * len(demand)
    for k, i in enumerate(rows):
        row_duals[i] = u[k]
    for k, j in enumerate(cols):
        col_duals[j] = v[k]
    return TransportResult(value, plan, tuple(row_duals), tuple(col_duals), pivots)


def _spanning_tree_flows(cells, a, b, m, n):
    """Solve the basis equations by leaf stripping; None if the basis is not a
    spanning tree of the bipartite supply/demand graph."""
    degree = [0] * (m + n)
    adj: dict[int, list[tuple[int, tuple[int, int]]]] = {k: [] for k in range(m + n)}
    for (i, j) in cells:
        degree[i] += 1
        degree[m + j] += 1
        adj[i].append((m + j, (i, j)))
        adj[m + j].append((i, (i, j)))
    remaining = dict.fromkeys(cells, True)
    need = list(a) + list(b)
    flows: dict[tuple[int, int], Fraction] = {}
    leaves = [k for k in range(m + n) if degree[k] == 1]
    alive = [True] * (m + n)
    processed = 0
    while leaves:
        node = leaves.pop()
        if not alive[node]:
            continue
        edge = None
        for nbr, cell in adj[node]:
            if remaining.get(cell):
                edge = (nbr, cell)
                break
        if edge is None:
            continue
        nbr, cell = edge
        f = need[node]
        flows[cell] = f
        remaining[cell] = False
        need[nbr] -= f
        need[node] = Fraction(0)
        alive[node] = False
        degree[nbr] -= 1
        degree[node] -= 1
        processed += 1
        if degree[nbr] == 1:
            leaves.append(nbr)
    if processed != len(cells):
        return None  # contained a cycle or was disconnected
    if any(remaining.values()):
        return None
    return flows


_TREE_CACHE: dict[tuple[int, int], list[tuple[tuple[int, int], ...]]] = {}


def _candidate_bases(m: int, n: int):
    """All (m+n-1)-subsets of cells forming spanning trees, cached per shape."""
    key = (m, n)
    if key not in _TREE_CACHE:
        cells = [(i, j) for i in range(m) for j in range(n)]
        out = []
        ones = [Fraction(1)] * m
        ones_b_total = Fraction(m)
        # demands sum must match; use uniform dummy data only for tree check
        dummy_b = [ones_b_total / n] * n
        for subset in combinations(cells, m + n - 1):
            rows_hit = {i for i, _ in subset}
            cols_hit = {j for _, j in subset}
            if len(rows_hit) != m or len(cols_hit) != n:
                continue
            if _spanning_tree_flows(subset, ones, dummy_b, m, n) is not None:
                out.append(subset)
        _TREE_CACHE[key] = out
    return _TREE_CACHE[key]


def enumerate_vertices(
    supply: Sequence[Fraction], demand: Sequence[Fraction]
) -> list[dict[tuple[int, int], Fraction]]:
    """All vertices of the transportation polytope, deduplicated, in a
    deterministic order. Intended for small shapes only."""
    supply = [Fraction(s) for s in supply]
    demand = [Fraction(d) for d in demand]
    if sum(supply) != sum(demand):
        raise UnbalancedMasses("total supply differs from total demand")
    rows = [i for i, s in enumerate(supply) if s > 0]
    cols = [j for j, d in enumerate(demand) if d > 0]
    a = [supply[i] for i in rows]
    b = [demand[j] for j in cols]
    m, n = len(a), len(b)
    if m == 0:
        return [{}]
    seen = set()
    out = []
    for cells in _candidate_bases(m, n):
        flows = _spanning_tree_flows(cells, a, b, m, n)
        if flows is None:
            continue
        if any(f < 0 for f in flows.values()):
            continue
        table = tuple(sorted(((rows[i], cols[j]), f) for (i, j), f in flows.items() if f > 0))
        if table in seen:
            continue
        seen.add(table)
        out.append(dict(table))
    return out
