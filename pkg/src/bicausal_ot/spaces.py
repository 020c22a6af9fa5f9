"""Finite path spaces: per-step labeled alphabets with rational coordinate
vectors, per-step metrics, and the product metric raised to the power p.

All coordinates are exact rationals parsed from decimal strings. Metric values
are exact rationals whenever the arithmetic allows (1-d coordinates, even
powers, Manhattan steps); otherwise they are directed-rounding intervals and
any comparison that cannot be decided outside the band raises PrecisionBand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Hashable, Iterator, Sequence

from ._util import MetricValue, mv_add, mv_pow, root_value
from .errors import DimensionMismatch, SchemaError, StepOutOfRange

Label = Hashable
Path = tuple  # tuple of per-step labels

STEP_METRICS = ("euclidean", "manhattan")


@dataclass(frozen=True)
class Point:
    label: Label
    coord: tuple[Fraction, ...]


@dataclass(frozen=True)
class StepAlphabet:
    points: tuple[Point, ...]
    metric: str = "euclidean"

    def __post_init__(self):
        if not self.points:
            raise SchemaError("step alphabet must be non-empty")
        if self.metric not in STEP_METRICS:
            raise SchemaError(f"unknown step metric {self.metric!r}")
        labels = [p.label for p in self.points]
        if len(set(labels)) != len(labels):
            raise SchemaError("duplicate point labels within a step")
        dims = {len(p.coord) for p in self.points}
        if len(dims) != 1:
            raise DimensionMismatch("points within a step must share coordinate dimension")

    @property
    def dim(self) -> int:
        return len(self.points[0].coord)


@dataclass(frozen=True)
class PathSpace:
    """Product of per-step alphabets. Paths are tuples with one label per step;
    path order is lexicographic in the declared point order of each step."""

    steps: tuple[StepAlphabet, ...]
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.steps:
            raise SchemaError("a path space needs at least one step")
        index = {}
        for t, step in enumerate(self.steps):
            index[t] = {p.label: i for i, p in enumerate(step.points)}
        object.__setattr__(self, "_index", index)

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def labels(self, t: int) -> list[Label]:
        return [p.label for p in self.steps[t].points]

    def index(self, t: int, label: Label) -> int:
        try:
            return self._index[t][label]
        except KeyError:
            raise SchemaError(f"label {label!r} unknown at step {t}") from None

    def point(self, t: int, label: Label) -> Point:
        return self.steps[t].points[self.index(t, label)]

    def has_label(self, t: int, label: Label) -> bool:
        return label in self._index[t]

    def path_key(self, path: Path) -> tuple[int, ...]:
        """Sort key realizing the canonical lexicographic path order."""
        return tuple(self.index(t, lab) for t, lab in enumerate(path))

    def iter_paths(self) -> Iterator[Path]:
        for combo in product(*[self.labels(t) for t in range(self.n_steps)]):
            yield combo

    def check_step(self, t: int, *, allow_end: bool = False) -> None:
        hi = self.n_steps if allow_end else self.n_steps - 1
        if not 1 <= t <= hi:
            raise StepOutOfRange(f"step index {t} outside 1..{hi}", t=t, n_steps=self.n_steps)


def step_distance(step_a: StepAlphabet, pa: Point, step_b: StepAlphabet, pb: Point) -> MetricValue:
    """Distance between two points under the (shared) step metric."""
    if step_a.metric != step_b.metric:
        raise DimensionMismatch(
            f"step metrics differ: {step_a.metric} vs {step_b.metric}"
        )
    if len(pa.coord) != len(pb.coord):
        raise DimensionMismatch(
            "coordinate dimensions differ", left=len(pa.coord), right=len(pb.coord)
        )
    deltas = [a - b for a, b in zip(pa.coord, pb.coord)]
    if step_a.metric == "manhattan":
        return Fraction(sum(abs(d) for d in deltas))
    # euclidean
    if len(deltas) == 1:
        return abs(deltas[0])
    return root_value(Fraction(sum(d * d for d in deltas)), 2)


def step_distance_pow(
    step_a: StepAlphabet, pa: Point, step_b: StepAlphabet, pb: Point, p_num: int, p_den: int = 1
) -> MetricValue:
    """d(a, b) ** (p_num/p_den), exact when possible.

    For euclidean steps and even integer p the square root never materializes,
    so the value stays rational for any coordinate dimension.
    """
    if step_a.metric == "euclidean" and p_den == 1 and p_num % 2 == 0 and len(pa.coord) > 1:
        if len(pa.coord) != len(pb.coord):
            raise DimensionMismatch("coordinate dimensions differ")
        sq = Fraction(sum((a - b) ** 2 for a, b in zip(pa.coord, pb.coord)))
        return sq ** (p_num // 2)
    return mv_pow(step_distance(step_a, pa, step_b, pb), p_num, p_den)


@dataclass(frozen=True)
class ProductMetric:
    """d(x, y)^p = sum_t d_t(x_t, y_t)^p over two spaces with matching shape."""

    left: PathSpace
    right: PathSpace
    p_num: int
    p_den: int = 1

    def __post_init__(self):
        if self.left.n_steps != self.right.n_steps:
            raise DimensionMismatch(
                "path spaces have different numbers of steps",
                left=self.left.n_steps,
                right=self.right.n_steps,
            )
        if self.p_num <= 0 or self.p_den <= 0 or Fraction(self.p_num, self.p_den) < 1:
            raise SchemaError("exponent p must be at least 1")

    @property
    def p(self) -> Fraction:
        return Fraction(self.p_num, self.p_den)

    def dpow(self, x: Path, y: Path) -> MetricValue:
        if len(x) != self.left.n_steps or len(y) != self.right.n_steps:
            raise DimensionMismatch("paths have the wrong number of steps")
        total: MetricValue = Fraction(0)
        for t in range(self.left.n_steps):
            pa = self.left.point(t, x[t])
            pb = self.right.point(t, y[t])
            total = mv_add(
                total,
                step_distance_pow(self.left.steps[t], pa, self.right.steps[t], pb, self.p_num, self.p_den),
            )
        return total


def distance_pp(left: PathSpace, right: PathSpace, x: Path, y: Path, p: int | Fraction) -> MetricValue:
    """Value of d(x, y)^p under the product metric."""
    p = Fraction(p)
    return ProductMetric(left, right, p.numerator, p.denominator).dpow(x, y)


def make_space(step_specs: Sequence[Sequence[tuple[Label, Sequence[Fraction]]]], metric: str = "euclidean") -> PathSpace:
    """Convenience constructor from [(label, coords), ...] per step."""
    steps = []
    for spec in step_specs:
        pts = tuple(Point(lab, tuple(Fraction(c) for c in coords)) for lab, coords in spec)
        steps.append(StepAlphabet(pts, metric))
    return PathSpace(tuple(steps))
