"""Exact path measures: validation, disintegration into prefix marginals and
one-step conditional kernels, pushforward, and restriction.

Masses are Fractions and every identity here is exact; there is no tolerance
anywhere. Kernels are defined only on histories of positive prefix mass, and
consumers must skip zero-mass histories.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import (
    MassSumNotOne,
    NegativeMass,
    StepOutOfRange,
    UndefinedOnSupport,
    UnknownLabel,
)
from .spaces import Label, Path, PathSpace

ONE = Fraction(1)


def _check_path(space: PathSpace, path: Path) -> None:
    if len(path) != space.n_steps:
        raise UnknownLabel(
            f"path {path!r} has {len(path)} steps, space has {space.n_steps}",
            path=list(path),
        )
    for t, lab in enumerate(path):
        if not space.has_label(t, lab):
            raise UnknownLabel(f"label {lab!r} unknown at step {t}", path=list(path), step=t)


@dataclass(frozen=True)
class PathMeasure:
    """Probability measure on a PathSpace with positive rational atom masses."""

    space: PathSpace
    mass: Mapping[Path, Fraction]
    _support: tuple[Path, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        for path in self.mass:
            _check_path(self.space, path)
        canon: dict[Path, Fraction] = {}
        for path in sorted(self.mass, key=self.space.path_key):
            value = Fraction(self.mass[path])
            if value < 0:
                raise NegativeMass(f"negative mass {value} on path {path!r}", path=list(path))
            if value == 0:
                continue
            canon[path] = value
        total = sum(canon.values(), Fraction(0))
        if total != ONE:
            raise MassSumNotOne(f"masses sum to {total}, expected 1", actual=total)
        object.__setattr__(self, "mass", canon)
        object.__setattr__(self, "_support", tuple(canon))

    @property
    def support(self) -> tuple[Path, ...]:
        return self._support

    def __call__(self, path: Path) -> Fraction:
        return self.mass.get(tuple(path), Fraction(0))

    def items(self) -> Iterable[tuple[Path, Fraction]]:
        return self.mass.items()

    def prefix_masses(self, t: int) -> dict[Path, Fraction]:
        """Masses of length-t prefixes, in canonical order. t may equal n_steps."""
        self.space.check_step(t, allow_end=True)
        out: dict[Path, Fraction] = {}
        for path, value in self.mass.items():
            key = path[:t]
            out[key] = out.get(key, Fraction(0)) + value
        order = lambda pref: tuple(self.space.index(i, lab) for i, lab in enumerate(pref))
        return {k: out[k] for k in sorted(out, key=order)}


def validate(measure: PathMeasure) -> PathMeasure:
    """Return the canonicalized measure (sorted support, reduced rationals).

    Construction already validates, so this re-canonicalizes defensively; it is
    the public entry point used by the CLI.
    """
    return PathMeasure(measure.space, dict(measure.mass))


def tail_space(space: PathSpace, t: int) -> PathSpace:
    return PathSpace(space.steps[t:])


def prefix_space(space: PathSpace, t: int) -> PathSpace:
    return PathSpace(space.steps[:t])


def one_step_space(space: PathSpace, t: int) -> PathSpace:
    """Single-step space holding the alphabet of step index t (0-based)."""
    return PathSpace((space.steps[t],))


@dataclass(frozen=True)
class Kernel:
    """Conditional next-step law indexed by positive-mass histories.

    conditionals maps each length-`prefix_len` history to a PathMeasure on the
    one-step space of the following step.
    """

    prefix_len: int
    step_space: PathSpace
    conditionals: Mapping[Path, PathMeasure]

    def __call__(self, history: Path) -> PathMeasure:
        return self.conditionals[tuple(history)]

    def histories(self) -> tuple[Path, ...]:
        return tuple(self.conditionals)


def prefix_marginal(measure: PathMeasure, t: int) -> PathMeasure:
    measure.space.check_step(t, allow_end=True)
    masses = measure.prefix_masses(t)
    return PathMeasure(prefix_space(measure.space, t), masses)


def next_step_kernel(measure: PathMeasure, t: int) -> Kernel:
    """Kernel of step t+1 given the first t coordinates (t in 1..N-1).

    t = 0 is allowed and yields the first-step marginal as a kernel indexed by
    the empty history.
    """
    if not 0 <= t <= measure.space.n_steps - 1:
        raise StepOutOfRange(f"prefix length {t} outside 0..{measure.space.n_steps - 1}", t=t)
    step_sp = one_step_space(measure.space, t)
    grouped: dict[Path, dict[Path, Fraction]] = {}
    for path, value in measure.items():
        hist = path[:t]
        nxt = (path[t],)
        bucket = grouped.setdefault(hist, {})
        bucket[nxt] = bucket.get(nxt, Fraction(0)) + value
    conditionals = {}
    for hist in sorted(grouped, key=lambda h: tuple(measure.space.index(i, lab) for i, lab in enumerate(h))):
        bucket = grouped[hist]
        total = sum(bucket.values(), Fraction(0))
        conditionals[hist] = PathMeasure(step_sp, {k: v / total for k, v in bucket.items()})
    return Kernel(t, step_sp, conditionals)


def disintegrate(measure: PathMeasure, t: int) -> tuple[PathMeasure, Kernel]:
    """Split into the prefix marginal on steps 1..t and the step-(t+1) kernel.

    Exactness contract: for every support path x,
        mass(x) = prefix(x_{1:t}) * prod_{s=t..N-1} kernel_s(x_{1:s})(x_{s+1})
    where kernel_s comes from disintegrating at s. The chain identity is
    checked in the test suite with exact rational equality.
    """
    measure.space.check_step(t)
    return prefix_marginal(measure, t), next_step_kernel(measure, t)


def kernel_chain(measure: PathMeasure) -> list[Kernel]:
    """All one-step kernels, from the empty history up to length N-1."""
    return [next_step_kernel(measure, t) for t in range(measure.space.n_steps)]


def recompose(space: PathSpace, chain: Sequence[Kernel]) -> PathMeasure:
    """Rebuild a measure from its one-step kernel chain."""
    masses: dict[Path, Fraction] = {(): ONE}
    for kernel in chain:
        nxt: dict[Path, Fraction] = {}
        for hist, value in masses.items():
            cond = kernel.conditionals.get(hist)
            if cond is None:
                continue
            for (lab,), w in cond.items():
                nxt[hist + (lab,)] = value * w
        masses = nxt
    return PathMeasure(space, masses)


def pushforward(
    measure: PathMeasure,
    mapping: Callable[[Path], Path] | Mapping[Path, Path],
    target: PathSpace,
) -> PathMeasure:
    """Image measure under a map defined on every support path."""
    get = mapping.get if isinstance(mapping, Mapping) else (lambda p: mapping(p))
    out: dict[Path, Fraction] = {}
    for path, value in measure.items():
        image = get(path)
        if image is None:
            raise UndefinedOnSupport(f"map undefined on support path {path!r}", path=list(path))
        image = tuple(image)
        _check_path(target, image)
        out[image] = out.get(image, Fraction(0)) + value
    return PathMeasure(target, out)


@dataclass(frozen=True)
class SubMeasure:
    """Unnormalized restriction of a measure; keeps the ambient space."""

    space: PathSpace
    mass: Mapping[Path, Fraction]

    @property
    def total(self) -> Fraction:
        return sum(self.mass.values(), Fraction(0))

    def __call__(self, path: Path) -> Fraction:
        return self.mass.get(tuple(path), Fraction(0))


def restrict(measure: PathMeasure, cell: Sequence[Iterable[Label]]) -> SubMeasure:
    """Keep exactly the atoms inside a product of per-step label subsets."""
    if len(cell) != measure.space.n_steps:
        raise StepOutOfRange(
            f"cell has {len(cell)} steps, space has {measure.space.n_steps}", t=len(cell)
        )
    sets = [frozenset(c) for c in cell]
    kept = {
        path: value
        for path, value in measure.items()
        if all(lab in sets[t] for t, lab in enumerate(path))
    }
    return SubMeasure(measure.space, kept)


def dirac(space: PathSpace, path: Path) -> PathMeasure:
    return PathMeasure(space, {tuple(path): ONE})


def product_measure(alpha: PathMeasure, beta: PathMeasure) -> PathMeasure:
    """Product of measures on consecutive step blocks (independence)."""
    space = PathSpace(alpha.space.steps + beta.space.steps)
    masses = {
        pa + pb: va * vb for pa, va in alpha.items() for pb, vb in beta.items()
    }
    return PathMeasure(space, masses)
