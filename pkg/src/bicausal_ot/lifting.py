"""Slot-level lifts: refine both sides of a coupling into equal-mass
micro-atoms and realize the coupling as the projection of a bijection.

Micro-atomization splits each atom of a measure, conditionally on its history,
into equal-mass slots, one randomizer per time step. On the refined spaces all
conditional laws are uniform, which is the finite stand-in for continuous
disintegrations, and deterministic lexicographic slot assignment replaces the
non-constructive selection arguments that the continuum construction needs.

lift_static treats the whole path as one block and produces a plain bijection
between micro-atom sets whose induced coupling projects back exactly.
lift_biadapted runs the same slot assignment stage by stage, conditioning on
the matched joint history, and produces a bijection that is adapted in both
directions. Its hypothesis (bicausality) is checked up front and refused with
a witness otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Mapping, Optional

from .couplings import (
    CausalityReport,
    Coupling,
    is_bicausal,
    marginals,
    stage_conditionals,
)
from .errors import BudgetExceeded, NotBicausal, OverflowGuard, PlanInvalid
from .measures import PathMeasure, kernel_chain
from .spaces import Label, Path, PathSpace, Point, StepAlphabet

MICRO_BUDGET = 10**6

MicroCoord = tuple  # (base label, slot index)
MicroPath = tuple  # tuple of MicroCoords


@dataclass(frozen=True)
class RefinementPlan:
    """Per-step slot denominators; step t is refined into slots of mass 1/D_t
    conditionally on each history."""

    denominators: tuple[int, ...]

    def __post_init__(self):
        if any(d < 1 for d in self.denominators):
            raise PlanInvalid("slot denominators must be positive integers")

    @property
    def size(self) -> int:
        out = 1
        for d in self.denominators:
            out *= d
        return out

    def refines(self, other: "RefinementPlan") -> bool:
        return len(self.denominators) == len(other.denominators) and all(
            mine % theirs == 0 for mine, theirs in zip(self.denominators, other.denominators)
        )


def plan_for_measures(*ms: PathMeasure, budget: int = MICRO_BUDGET) -> RefinementPlan:
    """Minimal plan clearing every conditional denominator of the measures."""
    n = ms[0].space.n_steps
    dens = [1] * n
    for m in ms:
        for t, kernel in enumerate(kernel_chain(m)):
            for hist in kernel.histories():
                for _, value in kernel(hist).items():
                    dens[t] = lcm(dens[t], value.denominator)
    plan = RefinementPlan(tuple(dens))
    if plan.size > budget:
        raise OverflowGuard(
            "micro-path budget exceeded", size=plan.size, budget=budget
        )
    return plan


def plan_refinement(
    mu: PathMeasure, nu: PathMeasure, pi: Coupling, budget: int = MICRO_BUDGET
) -> RefinementPlan:
    """Minimal plan clearing the conditional denominators of mu, nu and pi."""
    n = mu.space.n_steps
    dens = [1] * n
    for m in (mu, nu):
        for t, kernel in enumerate(kernel_chain(m)):
            for hist in kernel.histories():
                for _, value in kernel(hist).items():
                    dens[t] = lcm(dens[t], value.denominator)
    for t in range(1, n + 1):
        for table in stage_conditionals(pi, t).values():
            for value in table.values():
                dens[t - 1] = lcm(dens[t - 1], value.denominator)
    plan = RefinementPlan(tuple(dens))
    if plan.size > budget:
        raise OverflowGuard(
            "micro-path budget exceeded", size=plan.size, budget=budget
        )
    return plan


@dataclass(frozen=True)
class MicroSpace:
    """Slot refinement of a measure at a plan: conditionally on each history,
    point x at step t carries (conditional mass * D_t) slots, so every micro
    path has mass 1 / prod(D_t) and all conditional micro-laws are uniform."""

    base: PathMeasure
    plan: RefinementPlan
    _counts: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        counts: dict[Path, dict[Label, int]] = {}
        for t, kernel in enumerate(kernel_chain(self.base)):
            d = self.plan.denominators[t]
            for hist in kernel.histories():
                cond = kernel(hist)
                bucket = {}
                for (lab,), value in cond.items():
                    scaled = value * d
                    if scaled.denominator != 1:
                        raise PlanInvalid(
                            f"conditional mass {value} at step {t} does not divide into {d} slots",
                            step=t,
                            history=list(hist),
                        )
                    bucket[lab] = int(scaled)
                counts[hist] = bucket
        object.__setattr__(self, "_counts", counts)

    @property
    def size(self) -> int:
        return self.plan.size

    @property
    def atom_mass(self) -> Fraction:
        return Fraction(1, self.size)

    def counts(self, history: Path) -> dict[Label, int]:
        return self._counts[tuple(history)]

    def micro_paths(self) -> list[MicroPath]:
        """All micro paths in lexicographic order (base point order as
        declared, then slot index, stepwise)."""
        n = self.base.space.n_steps
        out: list[MicroPath] = []

        def extend(prefix: MicroPath, hist: Path, t: int):
            if t == n:
                out.append(prefix)
                return
            bucket = self._counts[hist]
            for lab in self.base.space.labels(t):
                cnt = bucket.get(lab, 0)
                for k in range(cnt):
                    extend(prefix + ((lab, k),), hist + (lab,), t + 1)

        extend((), (), 0)
        return out

    def as_path_space(self) -> PathSpace:
        """Product closure of the micro alphabet; micro measures are sparse on
        it since slot counts vary with the history."""
        steps = []
        for t, step in enumerate(self.base.space.steps):
            max_count: dict[Label, int] = {}
            for hist, bucket in self._counts.items():
                if len(hist) != t:
                    continue
                for lab, cnt in bucket.items():
                    max_count[lab] = max(max_count.get(lab, 0), cnt)
            points = []
            for p in step.points:
                for k in range(max_count.get(p.label, 0)):
                    points.append(Point((p.label, k), p.coord))
            steps.append(StepAlphabet(tuple(points), step.metric))
        return PathSpace(tuple(steps))

    def uniform_measure(self) -> PathMeasure:
        space = self.as_path_space()
        w = self.atom_mass
        return PathMeasure(space, {mp: w for mp in self.micro_paths()})

    @staticmethod
    def project_path(micro_path: MicroPath) -> Path:
        return tuple(lab for lab, _ in micro_path)


def microatomize(measure: PathMeasure, plan: RefinementPlan) -> MicroSpace:
    return MicroSpace(measure, plan)


@dataclass(frozen=True)
class AdaptednessReport:
    ok: bool
    t: Optional[int] = None
    pair: Optional[tuple[MicroPath, MicroPath]] = None

    def to_json(self):
        out = {"ok": self.ok}
        if not self.ok:
            out["t"] = self.t
            out["pair"] = [
                [[list(c) if isinstance(c, tuple) else c for c in p] for p in self.pair]
            ]
        return out


@dataclass(frozen=True)
class AdaptedBijection:
    """Bijection between two micro-path sets, stored as full-path maps.

    Component view: adaptedness means the t-th output coordinate is a function
    of the first t input coordinates, so after verification the map serializes
    as per-step component tables (prefix -> next output coordinate) in both
    directions.
    """

    left_space: PathSpace
    right_space: PathSpace
    forward: Mapping[MicroPath, MicroPath]
    inverse: Mapping[MicroPath, MicroPath]

    def apply(self, micro_path: MicroPath) -> MicroPath:
        return self.forward[tuple(micro_path)]

    def invert(self, micro_path: MicroPath) -> MicroPath:
        return self.inverse[tuple(micro_path)]

    def is_bijection(self) -> bool:
        if len(self.forward) != len(self.inverse):
            return False
        for src, dst in self.forward.items():
            if self.inverse.get(dst) != src:
                return False
        return True

    def component_tables(self, direction: str = "forward") -> list[dict]:
        mapping = self.forward if direction == "forward" else self.inverse
        n = 0
        for src in mapping:
            n = len(src)
            break
        tables: list[dict] = [{} for _ in range(n)]
        for src, dst in mapping.items():
            for t in range(n):
                tables[t][src[: t + 1]] = dst[t]
        return tables


def verify_adapted(bijection: AdaptedBijection, direction: str = "forward") -> AdaptednessReport:
    """Check that each output coordinate depends only on the input prefix of
    the same length; returns a violating pair of input paths otherwise."""
    mapping = bijection.forward if direction == "forward" else bijection.inverse
    if not mapping:
        return AdaptednessReport(True)
    n = len(next(iter(mapping)))
    items = sorted(mapping.items())
    for t in range(1, n + 1):
        seen: dict[MicroPath, tuple[MicroPath, MicroCoord]] = {}
        for src, dst in items:
            prefix = src[:t]
            if prefix in seen:
                other_src, other_out = seen[prefix]
                if other_out != dst[t - 1]:
                    return AdaptednessReport(False, t, (other_src, src))
            else:
                seen[prefix] = (src, dst[t - 1])
    return AdaptednessReport(True)


def _paired_slot_queues(
    counts: dict[Label, int], order: list[Label]
) -> dict[Label, list[int]]:
    return {lab: list(range(counts.get(lab, 0))) for lab in order}


def _match_block(
    cond: dict[tuple[Label, Label], Fraction],
    x_counts: dict[Label, int],
    y_counts: dict[Label, int],
    x_order: list[Label],
    y_order: list[Label],
    d: int,
    t: int,
    xh: Path,
    yh: Path,
) -> dict[MicroCoord, MicroCoord]:
    """Slot assignment for one conditional coupling: pairs in lexicographic
    order consume the next unconsumed slots of their two endpoints."""
    x_next = {lab: 0 for lab in x_order}
    y_next = {lab: 0 for lab in y_order}
    out: dict[MicroCoord, MicroCoord] = {}
    x_rank = {lab: i for i, lab in enumerate(x_order)}
    y_rank = {lab: i for i, lab in enumerate(y_order)}
    for (xl, yl) in sorted(cond, key=lambda cell: (x_rank[cell[0]], y_rank[cell[1]])):
        scaled = cond[(xl, yl)] * d
        if scaled.denominator != 1:
            raise PlanInvalid(
                f"conditional coupling mass {cond[(xl, yl)]} does not divide into {d} slots",
                step=t,
                history=[list(xh), list(yh)],
            )
        c = int(scaled)
        for _ in range(c):
            out[(xl, x_next[xl])] = (yl, y_next[yl])
            x_next[xl] += 1
            y_next[yl] += 1
    for lab, used in x_next.items():
        if used != x_counts.get(lab, 0):
            raise PlanInvalid(
                "slot totals do not close; coupling conditionals disagree with the left kernel",
                step=t,
                history=[list(xh), list(yh)],
            )
    for lab, used in y_next.items():
        if used != y_counts.get(lab, 0):
            raise PlanInvalid(
                "slot totals do not close; coupling conditionals disagree with the right kernel",
                step=t,
                history=[list(xh), list(yh)],
            )
    return out


@dataclass(frozen=True)
class LiftResult:
    """Verified lift: the bijection, the lifted coupling on the micro spaces,
    and both micro spaces, plus the adaptedness certificates."""

    bijection: AdaptedBijection
    lifted: Coupling
    left_micro: MicroSpace
    right_micro: MicroSpace
    plan: RefinementPlan
    adapted_forward: AdaptednessReport
    adapted_inverse: AdaptednessReport

    def project(self) -> Coupling:
        return project(self.lifted, self.left_micro, self.right_micro)


def lift_biadapted(
    pi: Coupling,
    plan: Optional[RefinementPlan] = None,
    budget: int = MICRO_BUDGET,
) -> LiftResult:
    """Lift a bicausal coupling to a biadapted micro-bijection that projects
    back exactly.

    Stage by stage, the first-step slot assignment matches step-t micro-atoms
    of the two sides; each matched pair determines the joint history whose
    conditional coupling drives the next stage. Refuses non-bicausal input
    with the violating witness.
    """
    report = is_bicausal(pi)
    if not report.ok:
        raise NotBicausal(
            "lift requires a bicausal coupling", witness=report.witness.to_json()
        )
    mu, nu = marginals(pi)
    minimal = plan_refinement(mu, nu, pi, budget=budget)
    if plan is None:
        plan = minimal
    else:
        if not plan.refines(minimal):
            raise PlanInvalid(
                "supplied plan does not refine the minimal plan of the instance",
                plan=list(plan.denominators),
                minimal=list(minimal.denominators),
            )
        if plan.size > budget:
            raise BudgetExceeded("micro-path budget exceeded", size=plan.size, budget=budget)
    micro_x = microatomize(mu, plan)
    micro_y = microatomize(nu, plan)

    n = pi.n_steps
    stage_tables = {t: stage_conditionals(pi, t) for t in range(1, n + 1)}
    matchings: dict[tuple[Path, Path], dict[MicroCoord, MicroCoord]] = {}

    def matching_for(xh: Path, yh: Path) -> dict[MicroCoord, MicroCoord]:
        key = (xh, yh)
        if key not in matchings:
            t = len(xh) + 1
            cond = stage_tables[t][(xh, yh)]
            matchings[key] = _match_block(
                cond,
                micro_x.counts(xh),
                micro_y.counts(yh),
                mu.space.labels(t - 1),
                nu.space.labels(t - 1),
                plan.denominators[t - 1],
                t,
                xh,
                yh,
            )
        return matchings[key]

    forward: dict[MicroPath, MicroPath] = {}
    for mp in micro_x.micro_paths():
        xh: Path = ()
        yh: Path = ()
        out: list[MicroCoord] = []
        for (xl, kx) in mp:
            step_match = matching_for(xh, yh)
            yl, ky = step_match[(xl, kx)]
            out.append((yl, ky))
            xh = xh + (xl,)
            yh = yh + (yl,)
        forward[mp] = tuple(out)

    inverse = {dst: src for src, dst in forward.items()}
    left_space = micro_x.as_path_space()
    right_space = micro_y.as_path_space()
    bijection = AdaptedBijection(left_space, right_space, forward, inverse)
    if not bijection.is_bijection() or len(forward) != micro_x.size:
        raise AssertionError("internal: slot assignment did not produce a bijection")
    fwd_report = verify_adapted(bijection, "forward")
    inv_report = verify_adapted(bijection, "inverse")
    if not (fwd_report.ok and inv_report.ok):
        raise AssertionError("internal: lifted bijection failed the adaptedness scan")
    w = micro_x.atom_mass
    lifted = Coupling(left_space, right_space, {(src, dst): w for src, dst in forward.items()})
    result = LiftResult(bijection, lifted, micro_x, micro_y, plan, fwd_report, inv_report)
    if result.project().mass != pi.mass:
        raise AssertionError("internal: lifted coupling does not project back to its input")
    return result


def lift_static(pi: Coupling, budget: int = MICRO_BUDGET) -> LiftResult:
    """One-block lift: any coupling becomes the projection of a bijection
    between single-step micro refinements of the two path laws."""
    mu, nu = marginals(pi)
    d = 1
    for _, v in mu.items():
        d = lcm(d, v.denominator)
    for _, v in nu.items():
        d = lcm(d, v.denominator)
    for _, v in pi.items():
        d = lcm(d, v.denominator)
    if d > budget:
        raise BudgetExceeded("micro-path budget exceeded", size=d, budget=budget)

    x_flat = _flatten_measure(mu)
    y_flat = _flatten_measure(nu)
    plan = RefinementPlan((d,))
    micro_x = microatomize(x_flat, plan)
    micro_y = microatomize(y_flat, plan)

    x_order = x_flat.space.labels(0)
    y_order = y_flat.space.labels(0)
    match = _match_block(
        {(x, y): v for (x, y), v in pi.items()},
        micro_x.counts(()),
        micro_y.counts(()),
        x_order,
        y_order,
        d,
        1,
        (),
        (),
    )
    forward = {((xl, k),): ((match[(xl, k)]),) for (xl, k) in match}
    inverse = {dst: src for src, dst in forward.items()}
    left_space = micro_x.as_path_space()
    right_space = micro_y.as_path_space()
    bijection = AdaptedBijection(left_space, right_space, forward, inverse)
    if not bijection.is_bijection() or len(forward) != d:
        raise AssertionError("internal: static slot assignment did not produce a bijection")
    w = Fraction(1, d)
    lifted = Coupling(left_space, right_space, {(src, dst): w for src, dst in forward.items()})
    result = LiftResult(
        bijection,
        lifted,
        micro_x,
        micro_y,
        plan,
        verify_adapted(bijection, "forward"),
        verify_adapted(bijection, "inverse"),
    )
    projected = project_static(result.lifted, pi.left, pi.right)
    if projected.mass != pi.mass:
        raise AssertionError("internal: static lift does not project back to its input")
    return result


def _flatten_measure(m: PathMeasure) -> PathMeasure:
    """View a path measure as a one-step measure whose labels are full paths."""
    points = []
    for path in sorted(m.space.iter_paths(), key=m.space.path_key):
        coords = tuple(c for t, lab in enumerate(path) for c in m.space.point(t, lab).coord)
        points.append(Point(path, coords))
    space = PathSpace((StepAlphabet(tuple(points), m.space.steps[0].metric),))
    return PathMeasure(space, {(path,): v for path, v in m.items()})


def project(pi_hat: Coupling, left_micro: MicroSpace, right_micro: MicroSpace) -> Coupling:
    """Forget slot coordinates and sum masses."""
    mass: dict[tuple[Path, Path], Fraction] = {}
    for (mx, my), value in pi_hat.items():
        key = (MicroSpace.project_path(mx), MicroSpace.project_path(my))
        mass[key] = mass.get(key, Fraction(0)) + value
    return Coupling(left_micro.base.space, right_micro.base.space, mass)


def project_static(pi_hat: Coupling, left_base: PathSpace, right_base: PathSpace) -> Coupling:
    """Projection for one-block lifts, where micro labels are (path, slot)."""
    mass: dict[tuple[Path, Path], Fraction] = {}
    for (mx, my), value in pi_hat.items():
        (x_path, _), = mx
        (y_path, _), = my
        key = (tuple(x_path), tuple(y_path))
        mass[key] = mass.get(key, Fraction(0)) + value
    return Coupling(left_base, right_base, mass)


def projection_bicausal_check(
    pi_hat: Coupling, left_micro: MicroSpace, right_micro: MicroSpace
) -> CausalityReport:
    """Regression hook for the reverse implication: a bicausal coupling of the
    micro spaces must project to a bicausal coupling of the bases."""
    upstairs = is_bicausal(pi_hat)
    if not upstairs.ok:
        raise NotBicausal(
            "projection check requires a bicausal micro-coupling",
            witness=upstairs.witness.to_json(),
        )
    return is_bicausal(project(pi_hat, left_micro, right_micro))
