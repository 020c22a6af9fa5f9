"""Exact optimal transport values and optimizers.

Three routes:
  * solve_kantorovich: classical transport over all couplings of two path
    measures, reduced to one flat transportation problem over path atoms.
  * solve_bicausal_dp: exact backward induction over the stagewise product
    form of the bicausal feasible set; one transportation subproblem per
    joint history pair, values memoized, optimizers glued into a coupling.
  * solve_bicausal_oracle: brute force. For stepwise-separable costs it reuses
    the backward recursion but minimizes by exhaustive vertex enumeration of
    every conditional polytope instead of simplex pivoting. For general costs
    it enumerates all combinations of vertex choices across all blocks and
    evaluates the glued coupling, guarded by a combination budget.

adapted_wasserstein is the dynamic program with stepwise cost d_t(x,y)^p and
returns the p-th power of the adapted distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct
from typing import Optional

from ._util import mv_exact
from .couplings import (
    Coupling,
    StagewiseSystem,
    assemble_stagewise,
    bicausal_constraints,
    cost_integral,
)
from .errors import NonSeparableCost, SchemaError, TooLarge
from .measures import PathMeasure
from .spaces import Label, Path, PathSpace, step_distance_pow
from .transport import enumerate_vertices, solve_transport

VERTEX_BUDGET = 10**4


@dataclass(frozen=True)
class CostSpec:
    """Cost specification.

    kind "metric": c(x, y) = sum_t d_t(x_t, y_t)^p, the product metric power.
    kind "stepwise": c(x, y) = sum_t tables[t][(x_t, y_t)].
    kind "general": c(x, y) = table[(x, y)] over full path pairs.
    """

    kind: str
    p: Optional[Fraction] = None
    tables: Optional[tuple[dict[tuple[Label, Label], Fraction], ...]] = None
    table: Optional[dict[tuple[Path, Path], Fraction]] = None

    @staticmethod
    def metric(p) -> "CostSpec":
        return CostSpec("metric", p=Fraction(p))

    @staticmethod
    def stepwise(tables) -> "CostSpec":
        return CostSpec("stepwise", tables=tuple(dict(t) for t in tables))

    @staticmethod
    def general(table) -> "CostSpec":
        return CostSpec("general", table=dict(table))

    def is_separable(self) -> bool:
        return self.kind in ("metric", "stepwise")

    def step_tables(self, left: PathSpace, right: PathSpace) -> tuple[dict, ...]:
        """Per-step cost tables over the full alphabets, exact rationals."""
        if self.kind == "stepwise":
            return self.tables
        if self.kind != "metric":
            raise NonSeparableCost("general cost tables do not factor stepwise")
        p = self.p
        out = []
        for t in range(left.n_steps):
            table = {}
            for xp in left.steps[t].points:
                for yp in right.steps[t].points:
                    value = step_distance_pow(
                        left.steps[t], xp, right.steps[t], yp, p.numerator, p.denominator
                    )
                    table[(xp.label, yp.label)] = mv_exact(
                        value, context=f"metric cost at step {t}"
                    )
            out.append(table)
        return tuple(out)

    def pair_cost(self, left: PathSpace, right: PathSpace):
        """Total cost function on path pairs."""
        if self.kind == "general":
            table = self.table

            def general(x: Path, y: Path) -> Fraction:
                return table[(tuple(x), tuple(y))]

            return general
        tables = self.step_tables(left, right)

        def separable(x: Path, y: Path) -> Fraction:
            return sum(
                (tables[t][(x[t], y[t])] for t in range(len(x))), Fraction(0)
            )

        return separable


@dataclass(frozen=True)
class SolveResult:
    value: Fraction
    optimizer: Coupling
    certificate: dict

    def to_json(self):
        from ._util import format_rational

        return {"value": format_rational(self.value), "certificate": self.certificate}


def solve_kantorovich(mu: PathMeasure, nu: PathMeasure, cost: CostSpec) -> SolveResult:
    """Exact optimum over all couplings of mu and nu."""
    xs = list(mu.support)
    ys = list(nu.support)
    pair_cost = cost.pair_cost(mu.space, nu.space)
    table = [[pair_cost(x, y) for y in ys] for x in xs]
    res = solve_transport([mu(x) for x in xs], [nu(y) for y in ys], table)
    mass = {(xs[i], ys[j]): f for (i, j), f in res.plan.items()}
    optimizer = Coupling(mu.space, nu.space, mass)
    value = cost_integral(optimizer, pair_cost)
    if value != res.value:
        raise AssertionError("internal: optimizer cost disagrees with LP value")
    cert = {
        "kind": "kantorovich-duals",
        "lp": res.to_json(),
    }
    return SolveResult(res.value, optimizer, cert)


def _system_and_tables(mu: PathMeasure, nu: PathMeasure, cost: CostSpec):
    if not cost.is_separable():
        raise NonSeparableCost(
            "backward induction needs a stepwise-separable cost; route general tables to the oracle"
        )
    system = bicausal_constraints(mu, nu)
    tables = cost.step_tables(mu.space, nu.space)
    return system, tables


def _recurse_blocks(
    system: StagewiseSystem,
    tables,
    n: int,
    solve_block,
):
    """Backward induction over joint history pairs; solve_block(rows, cols,
    cost_matrix) must return (value, plan). Returns value and glued choices."""
    blocks = {(b.t, b.x_hist, b.y_hist): b for b in system.blocks}
    memo: dict[tuple[Path, Path], tuple[Fraction, dict]] = {}

    def value_of(xh: Path, yh: Path) -> Fraction:
        return memo[(xh, yh)][0]

    for t in range(n, 0, -1):
        stage = sorted(
            (key for key in blocks if key[0] == t), key=lambda k: (k[1], k[2])
        )
        for (_, xh, yh) in stage:
            block = blocks[(t, xh, yh)]
            row_labels = [lab for lab, _ in block.rows]
            col_labels = [lab for lab, _ in block.cols]
            ctab = []
            for xl in row_labels:
                row = []
                for yl in col_labels:
                    c = tables[t - 1][(xl, yl)]
                    if t < n:
                        c = c + value_of(xh + (xl,), yh + (yl,))
                    row.append(c)
                ctab.append(row)
            value, plan = solve_block(
                [m for _, m in block.rows], [m for _, m in block.cols], ctab
            )
            table = {
                (row_labels[i], col_labels[j]): f for (i, j), f in plan.items() if f > 0
            }
            memo[(xh, yh)] = (value, table)

    choices = {key: table for key, (_, table) in memo.items()}
    return memo[((), ())][0], choices


def solve_bicausal_dp(mu: PathMeasure, nu: PathMeasure, cost: CostSpec) -> SolveResult:
    """Exact bicausal optimum by backward induction with simplex subproblems."""
    system, tables = _system_and_tables(mu, nu, cost)
    n = mu.space.n_steps
    duals = {}

    def solve_block(rows, cols, ctab):
        res = solve_transport(rows, cols, ctab)
        duals[len(duals)] = res
        return res.value, res.plan

    value, choices = _recurse_blocks(system, tables, n, solve_block)
    optimizer = assemble_stagewise(mu.space, nu.space, choices)
    pair_cost = cost.pair_cost(mu.space, nu.space)
    realized = cost_integral(optimizer, pair_cost)
    if realized != value:
        raise AssertionError("internal: glued optimizer cost disagrees with DP value")
    cert = {
        "kind": "bicausal-dp",
        "subproblems": len(duals),
        "pivots": sum(r.pivots for r in duals.values()),
    }
    return SolveResult(value, optimizer, cert)


def _block_vertices(rows, cols):
    verts = enumerate_vertices(rows, cols)
    return verts


def solve_bicausal_oracle(
    mu: PathMeasure,
    nu: PathMeasure,
    cost: CostSpec,
    vertex_budget: int = VERTEX_BUDGET,
    force_joint: bool = False,
) -> SolveResult:
    """Brute-force bicausal optimum.

    Separable costs run the backward recursion with per-block exhaustive
    vertex minimization (no pivoting anywhere). General costs enumerate every
    combination of vertex choices across all blocks and evaluate each glued
    coupling; the combination count is guarded.
    """
    if cost.is_separable() and not force_joint:
        system = bicausal_constraints(mu, nu)
        tables = cost.step_tables(mu.space, nu.space)
        n = mu.space.n_steps
        enumerated = 0

        def solve_block(rows, cols, ctab):
            nonlocal enumerated
            verts = _block_vertices(rows, cols)
            enumerated += len(verts)
            if enumerated > vertex_budget:
                raise TooLarge(
                    "vertex budget exceeded", enumerated=enumerated, budget=vertex_budget
                )
            best = None
            best_plan = None
            for plan in verts:
                v = sum((ctab[i][j] * f for (i, j), f in plan.items()), Fraction(0))
                if best is None or v < best:
                    best, best_plan = v, plan
            return best, best_plan

        value, choices = _recurse_blocks(system, tables, n, solve_block)
        optimizer = assemble_stagewise(mu.space, nu.space, choices)
        pair_cost = cost.pair_cost(mu.space, nu.space)
        realized = cost_integral(optimizer, pair_cost)
        if realized != value:
            raise AssertionError("internal: oracle optimizer cost disagrees with its value")
        cert = {"kind": "bicausal-oracle-stagewise", "vertices": enumerated}
        return SolveResult(value, optimizer, cert)

    # joint enumeration for general (or forced) costs
    system = bicausal_constraints(mu, nu)
    pair_cost = cost.pair_cost(mu.space, nu.space)
    block_keys = []
    block_vertex_tables = []
    combos = 1
    for block in system.blocks:
        rows = [m for _, m in block.rows]
        cols = [m for _, m in block.cols]
        verts = _block_vertices(rows, cols)
        row_labels = [lab for lab, _ in block.rows]
        col_labels = [lab for lab, _ in block.cols]
        tables = [
            {(row_labels[i], col_labels[j]): f for (i, j), f in plan.items() if f > 0}
            for plan in verts
        ]
        combos *= len(tables)
        if combos > vertex_budget:
            raise TooLarge(
                "combination budget exceeded", combinations=combos, budget=vertex_budget
            )
        block_keys.append((block.x_hist, block.y_hist))
        block_vertex_tables.append(tables)

    best_value = None
    best_coupling = None
    tried = 0
    for combo in iproduct(*block_vertex_tables):
        choices = dict(zip(block_keys, combo))
        pi = assemble_stagewise(mu.space, nu.space, choices)
        v = cost_integral(pi, pair_cost)
        tried += 1
        if best_value is None or v < best_value:
            best_value, best_coupling = v, pi
    cert = {"kind": "bicausal-oracle-joint", "combinations": tried}
    return SolveResult(best_value, best_coupling, cert)


def adapted_wasserstein(mu: PathMeasure, nu: PathMeasure, p: int) -> SolveResult:
    """Value of the adapted (nested) p-distance raised to the power p."""
    if int(p) != p or p < 1:
        raise SchemaError("exactness requires an integer exponent p >= 1", p=p)
    return solve_bicausal_dp(mu, nu, CostSpec.metric(int(p)))
