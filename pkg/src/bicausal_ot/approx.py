"""Denseness pipeline: partitions with vanishing mesh, cell-compatible slot
rearrangements, composed biadapted Monge approximations, and exact cell and
metric verification, plus the feasibility check that explains why base-level
biadapted bijections between atomic laws usually do not exist.

The approximation works at micro resolution. A coupling is first lifted to a
biadapted bijection T between fine micro refinements of its marginals. On each
side a cell-preserving biadapted rearrangement (split map) scrambles slots
within partition cells; the composition T_n = (right split)^{-1} o T o (left
split) is again a biadapted micro bijection, and its induced coupling agrees
with the original coupling on every product of partition cells exactly. That
agreement pins the transport distance between the two couplings below the
partition mesh.

Slot moves across different base points are only sound when the recursive
cell-coarsened subtree shapes of the two points coincide; the split map
therefore rearranges within signature classes. Atomic measures with rigid
trees admit only within-point moves (the rearrangement degenerates to slot
relabeling), which is precisely the obstruction the feasibility checker
reports at base level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Optional, Sequence

from ._util import (
    PRECISION_SCALE,
    MetricValue,
    format_rational,
    mv_add,
    mv_bounds,
    mv_exact,
    mv_le,
    mv_max,
    mv_pow,
    ordered_parallel_map,
)
from .couplings import Coupling, cost_integral, is_bicausal, marginals
from .errors import (
    CellAgreementRequired,
    NotBicausal,
    PlanNotRefining,
    SchemaError,
)
from .lifting import (
    AdaptedBijection,
    AdaptednessReport,
    LiftResult,
    MicroPath,
    MicroSpace,
    RefinementPlan,
    lift_biadapted,
    microatomize,
    plan_for_measures,
    plan_refinement,
    project,
    verify_adapted,
)
from .measures import PathMeasure, kernel_chain, next_step_kernel
from .spaces import Label, Path, PathSpace, step_distance, step_distance_pow
from .solvers import CostSpec
from .transport import solve_transport


@dataclass(frozen=True)
class Partition:
    """Per-step grouping of alphabet points into disjoint covering cells."""

    space: PathSpace
    cells: tuple[tuple[tuple[Label, ...], ...], ...]  # per step, per cell, labels
    _lookup: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        lookup: list[dict[Label, int]] = []
        for t, step_cells in enumerate(self.cells):
            seen: dict[Label, int] = {}
            for ci, cell in enumerate(step_cells):
                for lab in cell:
                    if lab in seen:
                        raise SchemaError(f"label {lab!r} appears in two cells at step {t}")
                    seen[lab] = ci
            missing = [lab for lab in self.space.labels(t) if lab not in seen]
            if missing:
                raise SchemaError(f"cells at step {t} do not cover labels {missing!r}")
            lookup.append(seen)
        object.__setattr__(self, "_lookup", lookup)

    def cell_index(self, t: int, label: Label) -> int:
        return self._lookup[t][label]

    def step_mesh(self, t: int) -> MetricValue:
        step = self.space.steps[t]
        diams = [Fraction(0)]
        for cell in self.cells[t]:
            pts = [self.space.point(t, lab) for lab in cell]
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    diams.append(step_distance(step, pts[i], step, pts[j]))
        return mv_max(diams)

    def mesh(self) -> MetricValue:
        return mv_max(self.step_mesh(t) for t in range(self.space.n_steps))

    def mesh_pow(self, p: int) -> MetricValue:
        total: MetricValue = Fraction(0)
        for t in range(self.space.n_steps):
            total = mv_add(total, mv_pow(self.step_mesh(t), p))
        return total

    def is_singleton(self) -> bool:
        return all(len(cell) == 1 for step_cells in self.cells for cell in step_cells)

    @staticmethod
    def singletons(space: PathSpace) -> "Partition":
        cells = tuple(
            tuple((lab,) for lab in space.labels(t)) for t in range(space.n_steps)
        )
        return Partition(space, cells)


def _sqrt_upper_bound(d: int) -> Fraction:
    r = math.isqrt(d)
    if r * r == d:
        return Fraction(r)
    return Fraction(math.isqrt(d * PRECISION_SCALE**2) + 1, PRECISION_SCALE)


def grid_partition(space: PathSpace, target_mesh: Fraction) -> Partition:
    """Axis-aligned boxes of side at most target/sqrt(dim) per step.

    Points on a box boundary belong to the lexicographically smallest box
    whose closure contains them. A target of zero yields singleton cells.
    """
    target = Fraction(target_mesh)
    if target < 0:
        raise SchemaError("target mesh must be nonnegative")
    if target == 0:
        return Partition.singletons(space)
    all_cells = []
    for t in range(space.n_steps):
        step = space.steps[t]
        d = step.dim
        side = target if d == 1 else target / _sqrt_upper_bound(d)
        mins = [min(p.coord[i] for p in step.points) for i in range(d)]

        def box_id(coord):
            out = []
            for i, c in enumerate(coord):
                q = (c - mins[i]) / side
                idx = q.numerator // q.denominator
                if q.denominator == 1 and q.numerator > 0:
                    idx -= 1  # boundary point joins the smaller box
                out.append(idx)
            return tuple(out)

        groups: dict[tuple, list[Label]] = {}
        for p in step.points:
            groups.setdefault(box_id(p.coord), []).append(p.label)
        cells = tuple(tuple(groups[key]) for key in sorted(groups))
        all_cells.append(cells)
    return Partition(space, tuple(all_cells))


def product_mesh_pow(part_x: Partition, part_y: Partition, p: int) -> MetricValue:
    """Mesh of the induced product partition, raised to the power p: the
    per-step cell diameters add because product cells factor per coordinate."""
    return mv_add(part_x.mesh_pow(p), part_y.mesh_pow(p))


@dataclass(frozen=True)
class SplitMap:
    """Cell-preserving biadapted rearrangement of a fine micro space.

    Within every (history, signature class) group at step t, fine slots are
    re-indexed from coarse-block order to split order: the fine slot at
    position q = q_c * r + e moves to position e * n + q_c, where r is the
    plan ratio at that step and n the number of coarse slots in the group.
    When the fine plan equals the coarse plan the map is the identity.
    """

    bijection: AdaptedBijection
    partition: Partition
    coarse_plan: RefinementPlan
    fine_plan: RefinementPlan
    micro: MicroSpace
    adapted_forward: AdaptednessReport
    adapted_inverse: AdaptednessReport

    def cell_preserving(self) -> bool:
        for src, dst in self.bijection.forward.items():
            for t in range(len(src)):
                if self.partition.cell_index(t, src[t][0]) != self.partition.cell_index(
                    t, dst[t][0]
                ):
                    return False
        return True


def _signatures(measure: PathMeasure, fine: MicroSpace, partition: Partition):
    """Recursive cell-coarsened subtree shape of each (history, point)."""
    kernels = kernel_chain(measure)
    n = measure.space.n_steps
    memo: dict[tuple[Path, Label], tuple] = {}

    def sig(hist: Path, label: Label):
        key = (hist, label)
        if key in memo:
            return memo[key]
        t = len(hist)
        cell = partition.cell_index(t, label)
        if t == n - 1:
            out = (cell, ())
        else:
            child_hist = hist + (label,)
            counts = fine.counts(child_hist)
            children = sorted(
                (sig(child_hist, z), cnt) for z, cnt in counts.items() if cnt > 0
            )
            out = (cell, tuple(children))
        memo[key] = out
        return out

    return sig


def split_bijection(
    micro: MicroSpace, partition: Partition, finer_plan: RefinementPlan
) -> SplitMap:
    """Biadapted slot rearrangement of microatomize(base, finer_plan) that
    never crosses cell boundaries and preserves the measure exactly."""
    coarse = micro.plan
    if not finer_plan.refines(coarse):
        raise PlanNotRefining(
            "finer plan must be a per-step integer multiple of the coarse plan",
            coarse=list(coarse.denominators),
            fine=list(finer_plan.denominators),
        )
    measure = micro.base
    fine = microatomize(measure, finer_plan)
    ratios = [
        f // c for f, c in zip(finer_plan.denominators, coarse.denominators)
    ]
    sig = _signatures(measure, fine, partition)

    # ordered signature classes of a step fiber, per history
    class_cache: dict[tuple[int, Path], dict] = {}

    def classes_for(t: int, hist: Path):
        key = (t, hist)
        if key not in class_cache:
            counts = fine.counts(hist)
            groups: dict[tuple, list] = {}
            pos: dict = {}
            for lab in measure.space.labels(t):
                cnt = counts.get(lab, 0)
                if cnt == 0:
                    continue
                c = sig(hist, lab)
                lst = groups.setdefault(c, [])
                for k in range(cnt):
                    pos[(lab, k)] = (c, len(lst))
                    lst.append((lab, k))
            class_cache[key] = (groups, pos)
        return class_cache[key]

    forward: dict[MicroPath, MicroPath] = {}
    for mp in fine.micro_paths():
        ha: Path = ()
        hb: Path = ()
        out = []
        for t, (lab, k) in enumerate(mp):
            groups_a, pos_a = classes_for(t, ha)
            groups_b, _ = classes_for(t, hb)
            c, q = pos_a[(lab, k)]
            target_list = groups_b[c]
            r = ratios[t]
            n_coarse = len(target_list) // r
            q_c, e = divmod(q, r)
            dst = target_list[e * n_coarse + q_c]
            out.append(dst)
            ha = ha + (lab,)
            hb = hb + (dst[0],)
        forward[mp] = tuple(out)

    inverse = {dst: src for src, dst in forward.items()}
    space = fine.as_path_space()
    bijection = AdaptedBijection(space, space, forward, inverse)
    if not bijection.is_bijection():
        raise AssertionError("internal: split map is not a bijection")
    fwd = verify_adapted(bijection, "forward")
    inv = verify_adapted(bijection, "inverse")
    if not (fwd.ok and inv.ok):
        raise AssertionError("internal: split map failed the adaptedness scan")
    result = SplitMap(bijection, partition, coarse, finer_plan, fine, fwd, inv)
    if not result.cell_preserving():
        raise AssertionError("internal: split map crossed a cell boundary")
    return result


@dataclass(frozen=True)
class MongeApproximation:
    """Composed approximation at a partition pair.

    In bijective mode, `bijection` is the biadapted micro bijection and
    `micro_coupling` its induced coupling on the fine micro spaces. In
    surjective mode the right rearrangement is dropped, the map sends left
    micro atoms directly to base right paths, and `bijection` is None.
    """

    pi_n: Coupling
    micro_coupling: Coupling
    bijection: Optional[AdaptedBijection]
    surjective_map: Optional[dict]
    left_split: SplitMap
    right_split: Optional[SplitMap]
    lift: LiftResult
    part_x: Partition
    part_y: Partition


def monge_approximation(
    pi: Coupling,
    part_x: Partition,
    part_y: Partition,
    plan: Optional[RefinementPlan] = None,
    surjective_only: bool = False,
) -> MongeApproximation:
    """Build the composed biadapted Monge approximation of a bicausal coupling
    against a partition pair; its projection agrees with the input on every
    product of cells, exactly."""
    report = is_bicausal(pi)
    if not report.ok:
        raise NotBicausal(
            "approximation requires a bicausal coupling", witness=report.witness.to_json()
        )
    mu, nu = marginals(pi)
    joint = plan_refinement(mu, nu, pi)
    if plan is None:
        fine = joint
    else:
        fine = RefinementPlan(
            tuple(lcm(a, b) for a, b in zip(plan.denominators, joint.denominators))
        )
    lift = lift_biadapted(pi, plan=fine)
    coarse_x = plan_for_measures(mu)
    coarse_y = plan_for_measures(nu)
    phi = split_bijection(microatomize(mu, coarse_x), part_x, fine)
    psi = split_bijection(microatomize(nu, coarse_y), part_y, fine)

    atom = lift.left_micro.atom_mass
    if surjective_only:
        surj: dict[MicroPath, Path] = {}
        mass: dict[tuple[MicroPath, Path], Fraction] = {}
        for a in lift.left_micro.micro_paths():
            b_hat = lift.bijection.apply(phi.bijection.apply(a))
            y = MicroSpace.project_path(b_hat)
            surj[a] = y
            mass[(a, y)] = mass.get((a, y), Fraction(0)) + atom
        micro_coupling = Coupling(phi.bijection.left_space, nu.space, mass)
        base_mass: dict[tuple[Path, Path], Fraction] = {}
        for (a, y), v in mass.items():
            key = (MicroSpace.project_path(a), y)
            base_mass[key] = base_mass.get(key, Fraction(0)) + v
        pi_n = Coupling(mu.space, nu.space, base_mass)
        return MongeApproximation(pi_n, micro_coupling, None, surj, phi, None, lift, part_x, part_y)

    forward: dict[MicroPath, MicroPath] = {}
    for a in lift.left_micro.micro_paths():
        forward[a] = psi.bijection.invert(lift.bijection.apply(phi.bijection.apply(a)))
    inverse = {dst: src for src, dst in forward.items()}
    bijection = AdaptedBijection(
        phi.bijection.left_space, psi.bijection.left_space, forward, inverse
    )
    if not bijection.is_bijection():
        raise AssertionError("internal: composed map is not a bijection")
    fwd = verify_adapted(bijection, "forward")
    inv = verify_adapted(bijection, "inverse")
    if not (fwd.ok and inv.ok):
        raise AssertionError("internal: composed map failed the adaptedness scan")
    micro_coupling = Coupling(
        bijection.left_space,
        bijection.right_space,
        {(a, b): atom for a, b in forward.items()},
    )
    pi_n = project(micro_coupling, lift.left_micro, lift.right_micro)
    return MongeApproximation(pi_n, micro_coupling, bijection, None, phi, psi, lift, part_x, part_y)


@dataclass(frozen=True)
class CellAgreementResult:
    ok: bool
    table: tuple  # rows: (x cell ids, y cell ids, mass of pi_n, mass of pi)

    def to_json(self):
        return {
            "ok": self.ok,
            "cells": [
                {
                    "x_cells": list(xc),
                    "y_cells": list(yc),
                    "lhs": format_rational(a),
                    "rhs": format_rational(b),
                }
                for (xc, yc, a, b) in self.table
            ],
        }


def _cell_profile(pi: Coupling, part_x: Partition, part_y: Partition):
    out: dict[tuple[tuple, tuple], Fraction] = {}
    for (x, y), value in pi.items():
        key = (
            tuple(part_x.cell_index(t, lab) for t, lab in enumerate(x)),
            tuple(part_y.cell_index(t, lab) for t, lab in enumerate(y)),
        )
        out[key] = out.get(key, Fraction(0)) + value
    return out


def cell_agreement(
    pi_n: Coupling, pi: Coupling, part_x: Partition, part_y: Partition
) -> CellAgreementResult:
    """Exact equality of the two couplings on every product of per-step cells."""
    lhs = _cell_profile(pi_n, part_x, part_y)
    rhs = _cell_profile(pi, part_x, part_y)
    keys = sorted(set(lhs) | set(rhs))
    table = tuple(
        (xc, yc, lhs.get((xc, yc), Fraction(0)), rhs.get((xc, yc), Fraction(0)))
        for (xc, yc) in keys
    )
    ok = all(a == b for (_, _, a, b) in table)
    return CellAgreementResult(ok, table)


@dataclass(frozen=True)
class MeshBoundResult:
    wp_p: Fraction
    bound: MetricValue  # product-partition mesh to the power p
    explicit_cost: Fraction  # cost of the cell-block coupling
    ok: bool

    def to_json(self):
        lo, hi = mv_bounds(self.bound)
        return {
            "wp_p": format_rational(self.wp_p),
            "bound": format_rational(lo) if lo == hi else {"lo": format_rational(lo), "hi": format_rational(hi)},
            "explicit_cost": format_rational(self.explicit_cost),
            "ok": self.ok,
        }


def _pair_ground_cost(pi_a: Coupling, p: int):
    left, right = pi_a.left, pi_a.right

    def cost(u: tuple[Path, Path], w: tuple[Path, Path]) -> Fraction:
        (x1, y1), (x2, y2) = u, w
        total = Fraction(0)
        for t in range(left.n_steps):
            total += mv_exact(
                step_distance_pow(
                    left.steps[t], left.point(t, x1[t]), left.steps[t], left.point(t, x2[t]), p
                ),
                context="ground cost",
            )
        for t in range(right.n_steps):
            total += mv_exact(
                step_distance_pow(
                    right.steps[t], right.point(t, y1[t]), right.steps[t], right.point(t, y2[t]), p
                ),
                context="ground cost",
            )
        return total

    return cost


def wasserstein_pp_between(pi_a: Coupling, pi_b: Coupling, p: int) -> Fraction:
    """Exact W_p^p between two couplings viewed as measures on the product
    space, under the product metric."""
    atoms_a = list(pi_a.support)
    atoms_b = list(pi_b.support)
    ground = _pair_ground_cost(pi_a, p)
    table = [[ground(u, w) for w in atoms_b] for u in atoms_a]
    res = solve_transport(
        [pi_a(*u) for u in atoms_a], [pi_b(*w) for w in atoms_b], table
    )
    return res.value


def mesh_bound_check(
    pi_n: Coupling,
    pi: Coupling,
    p: int,
    part_x: Partition,
    part_y: Partition,
) -> MeshBoundResult:
    """Exact W_p^p between the approximation and the original, checked against
    the product-partition mesh to the power p, together with the cost of the
    explicit cell-block coupling (restrict both couplings to each product
    cell, take the normalized product, and sum over cells)."""
    agreement = cell_agreement(pi_n, pi, part_x, part_y)
    if not agreement.ok:
        raise CellAgreementRequired("mesh bound requires exact cell agreement")
    wpp = wasserstein_pp_between(pi_n, pi, p)
    bound = product_mesh_pow(part_x, part_y, p)

    # explicit coupling of the two couplings: within each product cell, pair
    # mass proportionally; its cost dominates W_p^p and sits below the mesh
    ground = _pair_ground_cost(pi_n, p)
    lhs_cells: dict[tuple, list] = {}
    rhs_cells: dict[tuple, list] = {}
    for (x, y), v in pi_n.items():
        key = (
            tuple(part_x.cell_index(t, lab) for t, lab in enumerate(x)),
            tuple(part_y.cell_index(t, lab) for t, lab in enumerate(y)),
        )
        lhs_cells.setdefault(key, []).append(((x, y), v))
    for (x, y), v in pi.items():
        key = (
            tuple(part_x.cell_index(t, lab) for t, lab in enumerate(x)),
            tuple(part_y.cell_index(t, lab) for t, lab in enumerate(y)),
        )
        rhs_cells.setdefault(key, []).append(((x, y), v))
    explicit = Fraction(0)
    for key in sorted(lhs_cells):
        cell_mass = sum((v for _, v in rhs_cells[key]), Fraction(0))
        for (u, va) in lhs_cells[key]:
            for (w, vb) in rhs_cells[key]:
                explicit += va * vb / cell_mass * ground(u, w)
    ok = mv_le(wpp, bound, context="mesh bound") and mv_le(
        explicit, bound, context="explicit coupling bound"
    ) and wpp <= explicit
    return MeshBoundResult(wpp, bound, explicit, ok)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    mapping: Optional[dict]  # base path -> base path
    witness: Optional[tuple]  # (t, x_hist, y_hist, multiset_x, multiset_y)

    def to_json(self):
        if self.feasible:
            return {
                "feasible": True,
                "map": [
                    {"from": list(src), "to": list(dst)}
                    for src, dst in sorted(self.mapping.items())
                ],
            }
        t, xh, yh, ms_x, ms_y = self.witness
        return {
            "feasible": False,
            "witness": {
                "t": t,
                "x_history": list(xh),
                "y_history": list(yh),
                "x_multiset": [format_rational(v) for v in ms_x],
                "y_multiset": [format_rational(v) for v in ms_y],
            },
        }


def biadapted_feasibility(mu: PathMeasure, nu: PathMeasure) -> FeasibilityResult:
    """Search for a base-level biadapted bijection pushing mu to nu.

    Necessary-condition recursion: at every reached history pair the multisets
    of conditional atom masses must coincide; equal-mass atoms are then matched
    greedily in declared label order and the recursion descends. Returns the
    first violating history pair, or the assembled stepwise map.
    """
    n = mu.space.n_steps
    mu_kernels = {t: next_step_kernel(mu, t) for t in range(n)}
    nu_kernels = {t: next_step_kernel(nu, t) for t in range(n)}

    step_match: dict[tuple[Path, Path], dict[Label, Label]] = {}

    def recurse(xh: Path, yh: Path) -> Optional[tuple]:
        t = len(xh)
        if t == n:
            return None
        cond_x = mu_kernels[t](xh)
        cond_y = nu_kernels[t](yh)
        ms_x = sorted(v for _, v in cond_x.items())
        ms_y = sorted(v for _, v in cond_y.items())
        if ms_x != ms_y:
            return (t + 1, xh, yh, tuple(ms_x), tuple(ms_y))
        by_mass_x: dict[Fraction, list[Label]] = {}
        by_mass_y: dict[Fraction, list[Label]] = {}
        for (lab,), v in cond_x.items():
            by_mass_x.setdefault(v, []).append(lab)
        for (lab,), v in cond_y.items():
            by_mass_y.setdefault(v, []).append(lab)
        pairing: dict[Label, Label] = {}
        for v in sorted(by_mass_x):
            for xl, yl in zip(by_mass_x[v], by_mass_y[v]):
                pairing[xl] = yl
        step_match[(xh, yh)] = pairing
        for xl in sorted(pairing, key=lambda lab: mu.space.index(t, lab)):
            failure = recurse(xh + (xl,), yh + (pairing[xl],))
            if failure is not None:
                return failure
        return None

    failure = recurse((), ())
    if failure is not None:
        return FeasibilityResult(False, None, failure)

    mapping: dict[Path, Path] = {}
    for x in mu.support:
        xh: Path = ()
        yh: Path = ()
        for lab in x:
            yl = step_match[(xh, yh)][lab]
            xh = xh + (lab,)
            yh = yh + (yl,)
        mapping[x] = yh
    return FeasibilityResult(True, mapping, None)


@dataclass(frozen=True)
class ConvergenceRow:
    target: Fraction
    mesh_pow: MetricValue
    wp_p: Fraction
    explicit_cost: Fraction
    cost_gap: Fraction
    cells_ok: bool
    bound_ok: bool

    def to_json(self):
        lo, hi = mv_bounds(self.mesh_pow)
        return {
            "mesh": format_rational(self.target),
            "mesh_pow": format_rational(lo) if lo == hi else {"lo": format_rational(lo), "hi": format_rational(hi)},
            "wp_p": format_rational(self.wp_p),
            "bound": format_rational(lo) if lo == hi else {"lo": format_rational(lo), "hi": format_rational(hi)},
            "explicit_cost": format_rational(self.explicit_cost),
            "cost_gap": format_rational(self.cost_gap),
            "cells_ok": self.cells_ok,
        }


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[ConvergenceRow, ...]
    ok: bool

    def to_json(self):
        return {"ok": self.ok, "rows": [r.to_json() for r in self.rows]}


def convergence_report(
    pi: Coupling,
    mesh_targets: Sequence[Fraction],
    p: int,
    cost: Optional[CostSpec] = None,
    threads: int = 1,
    surjective_only: bool = False,
    refine_factor: int = 2,
) -> ConvergenceReport:
    """Run the pipeline at each target mesh and verify every bound exactly.

    Row order follows the input target order; rows are computed independently
    (optionally in parallel) and merged deterministically. refine_factor
    multiplies the minimal slot plan so the rearrangements have slots to move:
    at factor 1 the split maps are identities and the approximation returns
    the input coupling itself.
    """
    report = is_bicausal(pi)
    if not report.ok:
        raise NotBicausal(
            "convergence report requires a bicausal coupling",
            witness=report.witness.to_json(),
        )
    mu, nu = marginals(pi)
    cost = cost or CostSpec.metric(p)
    pair_cost = cost.pair_cost(mu.space, nu.space)
    base_cost = cost_integral(pi, pair_cost)
    joint = plan_refinement(mu, nu, pi)
    plan = RefinementPlan(tuple(d * max(1, refine_factor) for d in joint.denominators))

    def run(target) -> ConvergenceRow:
        part_x = grid_partition(mu.space, target)
        part_y = grid_partition(nu.space, target)
        approx = monge_approximation(
            pi, part_x, part_y, plan=plan, surjective_only=surjective_only
        )
        agreement = cell_agreement(approx.pi_n, pi, part_x, part_y)
        check = mesh_bound_check(approx.pi_n, pi, p, part_x, part_y)
        gap = abs(cost_integral(approx.pi_n, pair_cost) - base_cost)
        return ConvergenceRow(
            Fraction(target), check.bound, check.wp_p, check.explicit_cost, gap, agreement.ok, check.ok
        )

    rows = ordered_parallel_map(run, [Fraction(t) for t in mesh_targets], threads)
    ok = all(r.cells_ok and r.bound_ok for r in rows)
    return ConvergenceReport(tuple(rows), ok)
