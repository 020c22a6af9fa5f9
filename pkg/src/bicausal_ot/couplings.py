"""Couplings between two path measures: marginals, swap, causality and
bicausality verdicts with explicit witnesses, Monge-structure classification,
and the stagewise constraint system cut out by bicausality.

The causality check is the disintegration criterion: for every t < N and every
positive-mass joint history, the conditional next-step law on the left side
must coincide with the left marginal's own conditional. On finite spaces this
stepwise identity is equivalent to the measurability definition of causality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .errors import InvalidCoupling
from .measures import PathMeasure, next_step_kernel
from .spaces import Label, Path, PathSpace

ONE = Fraction(1)

Pair = tuple[Path, Path]


@dataclass(frozen=True)
class Coupling:
    """Measure on the product of two path spaces with positive atom masses."""

    left: PathSpace
    right: PathSpace
    mass: Mapping[Pair, Fraction]
    _support: tuple[Pair, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.left.n_steps != self.right.n_steps:
            raise InvalidCoupling(
                "left and right spaces must have the same number of steps",
                left=self.left.n_steps,
                right=self.right.n_steps,
            )
        for (x, y) in self.mass:
            if len(x) != self.left.n_steps or len(y) != self.right.n_steps:
                raise InvalidCoupling("pair has wrong path lengths", pair=[list(x), list(y)])
            for t, lab in enumerate(x):
                if not self.left.has_label(t, lab):
                    raise InvalidCoupling(f"unknown left label {lab!r} at step {t}")
            for t, lab in enumerate(y):
                if not self.right.has_label(t, lab):
                    raise InvalidCoupling(f"unknown right label {lab!r} at step {t}")
        canon: dict[Pair, Fraction] = {}
        for (x, y) in sorted(self.mass, key=self._pair_key):
            value = Fraction(self.mass[(x, y)])
            if value < 0:
                raise InvalidCoupling(
                    f"negative mass {value} on pair {(x, y)!r}", pair=[list(x), list(y)]
                )
            if value == 0:
                continue
            canon[(tuple(x), tuple(y))] = value
        total = sum(canon.values(), Fraction(0))
        if total != ONE:
            raise InvalidCoupling(f"masses sum to {total}, expected 1", actual=total)
        object.__setattr__(self, "mass", canon)
        object.__setattr__(self, "_support", tuple(canon))

    def _pair_key(self, pair: Pair):
        x, y = pair
        return (self.left.path_key(x), self.right.path_key(y))

    @property
    def n_steps(self) -> int:
        return self.left.n_steps

    @property
    def support(self) -> tuple[Pair, ...]:
        return self._support

    def __call__(self, x: Path, y: Path) -> Fraction:
        return self.mass.get((tuple(x), tuple(y)), Fraction(0))

    def items(self):
        return self.mass.items()


def marginals(pi: Coupling) -> tuple[PathMeasure, PathMeasure]:
    """Exact projections onto the two factors."""
    mu: dict[Path, Fraction] = {}
    nu: dict[Path, Fraction] = {}
    for (x, y), value in pi.items():
        mu[x] = mu.get(x, Fraction(0)) + value
        nu[y] = nu.get(y, Fraction(0)) + value
    return PathMeasure(pi.left, mu), PathMeasure(pi.right, nu)


def swap(pi: Coupling) -> Coupling:
    return Coupling(pi.right, pi.left, {(y, x): v for (x, y), v in pi.items()})


def couples(pi: Coupling, mu: PathMeasure, nu: PathMeasure) -> bool:
    """Whether the projections reproduce the declared marginals exactly."""
    got_mu, got_nu = marginals(pi)
    return dict(got_mu.items()) == dict(mu.items()) and dict(got_nu.items()) == dict(nu.items())


@dataclass(frozen=True)
class Witness:
    """Reproducible violation of a conditional identity.

    At step t+1, conditioned on the joint history (x_hist, y_hist), the
    coupling gives `conditional` to `point` while the marginal's own kernel
    gives `expected`.
    """

    side: str  # "left" or "right"
    t: int
    x_hist: Path
    y_hist: Path
    point: Label
    conditional: Fraction
    expected: Fraction

    def to_json(self):
        from ._util import format_rational

        return {
            "side": self.side,
            "t": self.t,
            "x_history": list(self.x_hist),
            "y_history": list(self.y_hist),
            "point": self.point if isinstance(self.point, str) else list(self.point),
            "conditional": format_rational(self.conditional),
            "expected": format_rational(self.expected),
        }


@dataclass(frozen=True)
class CausalityReport:
    kind: str  # "causal" or "bicausal"
    ok: bool
    witness: Optional[Witness] = None

    @property
    def verdict(self) -> str:
        return self.kind if self.ok else f"not-{self.kind}"

    def to_json(self):
        out = {"kind": self.kind, "verdict": self.verdict}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def _joint_prefixes(pi: Coupling, t: int) -> dict[tuple[Path, Path], Fraction]:
    out: dict[tuple[Path, Path], Fraction] = {}
    for (x, y), value in pi.items():
        key = (x[:t], y[:t])
        out[key] = out.get(key, Fraction(0)) + value
    return out


def _one_sided_witness(pi: Coupling, side: str) -> Optional[Witness]:
    """First violation (t ascending, histories lexicographic) of the identity
    pr_next-left(conditional of pi given joint history) = left-marginal kernel.
    For side == "right" the roles are exchanged."""
    work = pi if side == "left" else swap(pi)
    mu, _ = marginals(work)
    n = work.n_steps
    for t in range(1, n):
        kernel = next_step_kernel(mu, t)
        # conditional next-left-step masses grouped by joint history
        grouped: dict[tuple[Path, Path], dict[Label, Fraction]] = {}
        totals: dict[tuple[Path, Path], Fraction] = {}
        for (x, y), value in work.items():
            key = (x[:t], y[:t])
            bucket = grouped.setdefault(key, {})
            bucket[x[t]] = bucket.get(x[t], Fraction(0)) + value
            totals[key] = totals.get(key, Fraction(0)) + value
        for key in sorted(
            grouped,
            key=lambda k: (
                tuple(work.left.index(i, lab) for i, lab in enumerate(k[0])),
                tuple(work.right.index(i, lab) for i, lab in enumerate(k[1])),
            ),
        ):
            xh, yh = key
            cond = grouped[key]
            total = totals[key]
            expected = kernel(xh)
            for lab in work.left.labels(t):
                got = cond.get(lab, Fraction(0)) / total
                want = expected((lab,))
                if got != want:
                    if side == "right":
                        return Witness("right", t, yh, xh, lab, got, want)
                    return Witness("left", t, xh, yh, lab, got, want)
    return None


def is_causal(pi: Coupling) -> CausalityReport:
    """Causality along the left filtration: the conditional law of the next
    left step given both histories matches the left marginal's kernel."""
    witness = _one_sided_witness(pi, "left")
    return CausalityReport("causal", witness is None, witness)


def is_bicausal(pi: Coupling) -> CausalityReport:
    """Causal in both directions; equal to is_causal(pi) and is_causal(swap(pi))."""
    witness = _one_sided_witness(pi, "left")
    if witness is None:
        witness = _one_sided_witness(pi, "right")
    return CausalityReport("bicausal", witness is None, witness)


@dataclass(frozen=True)
class MongeClassification:
    """Strongest applicable tag plus the individual structure flags."""

    tag: str
    forward: Optional[dict[Path, Path]]
    inverse: Optional[dict[Path, Path]]
    is_monge: bool
    is_bijective: bool
    is_adapted: bool
    is_inverse_adapted: bool

    def to_json(self):
        out = {
            "tag": self.tag,
            "is_monge": self.is_monge,
            "is_bijective": self.is_bijective,
            "is_adapted": self.is_adapted,
            "is_inverse_adapted": self.is_inverse_adapted,
        }
        return out


def _graph_map(pairs, key_side: int) -> Optional[dict[Path, Path]]:
    out: dict[Path, Path] = {}
    for pair in pairs:
        src, dst = (pair[0], pair[1]) if key_side == 0 else (pair[1], pair[0])
        if src in out and out[src] != dst:
            return None
        out[src] = dst
    return out


def classify_monge(pi: Coupling) -> MongeClassification:
    forward = _graph_map(pi.support, 0)
    if forward is None:
        return MongeClassification("not-monge", None, None, False, False, False, False)
    inverse = _graph_map(pi.support, 1)
    bijective = inverse is not None
    n = pi.n_steps
    adapted = _adapted_all_coords(forward, n)
    inv_adapted = bijective and _adapted_all_coords(inverse, n)
    if bijective and adapted and inv_adapted:
        tag = "biadapted-monge"
    elif adapted:
        tag = "adapted-monge"
    elif bijective:
        tag = "bijective-monge"
    else:
        tag = "monge"
    return MongeClassification(tag, forward, inverse, True, bijective, adapted, inv_adapted)


def _adapted_all_coords(mapping: dict[Path, Path], n_steps: int) -> bool:
    """Adaptedness scan over support: for every t in 1..N, output coordinate t
    is determined by the first t input coordinates."""
    for t in range(1, n_steps + 1):
        seen: dict[Path, Label] = {}
        for src, dst in mapping.items():
            prefix = src[:t]
            out_t = dst[t - 1]
            if prefix in seen:
                if seen[prefix] != out_t:
                    return False
            else:
                seen[prefix] = out_t
    return True


@dataclass(frozen=True)
class StageBlock:
    """One conditional transportation polytope: couplings of the two one-step
    conditional laws attached to a joint history pair."""

    t: int  # stage index, 1-based; histories have length t-1
    x_hist: Path
    y_hist: Path
    rows: tuple[tuple[Label, Fraction], ...]  # left conditional: label, mass
    cols: tuple[tuple[Label, Fraction], ...]

    @property
    def equality_count(self) -> int:
        return len(self.rows) + len(self.cols)

    @property
    def variable_count(self) -> int:
        return len(self.rows) * len(self.cols)


@dataclass(frozen=True)
class StagewiseSystem:
    """Product form of the bicausal feasible set: one transportation polytope
    per stage and joint history pair; a coupling is bicausal exactly when its
    stagewise conditionals solve every reached block.

    The flat formulation over path-pair variables is bilinear once the
    conditional identities are multiplied out, so the system is emitted in
    this stagewise form, which is what the dynamic program and the brute-force
    oracle consume.
    """

    left: PathSpace
    right: PathSpace
    blocks: tuple[StageBlock, ...]

    def blocks_at(self, t: int) -> list[StageBlock]:
        return [b for b in self.blocks if b.t == t]

    @property
    def equality_count(self) -> int:
        return sum(b.equality_count for b in self.blocks)

    @property
    def variable_count(self) -> int:
        return sum(b.variable_count for b in self.blocks)


def bicausal_constraints(mu: PathMeasure, nu: PathMeasure) -> StagewiseSystem:
    """Emit the stagewise constraint system for Cpl_bc(mu, nu).

    Stage 1 has the single empty-history block coupling the first-step
    marginals; stage t couples the conditional kernels of mu and nu attached
    to every pair of positive-mass length-(t-1) prefixes.
    """
    n = mu.space.n_steps
    blocks: list[StageBlock] = []
    for t in range(1, n + 1):
        mu_kernel = next_step_kernel(mu, t - 1)
        nu_kernel = next_step_kernel(nu, t - 1)
        for xh in mu_kernel.histories():
            row_m = mu_kernel(xh)
            rows = tuple((lab, row_m((lab,))) for (lab,) in row_m.support)
            for yh in nu_kernel.histories():
                col_m = nu_kernel(yh)
                cols = tuple((lab, col_m((lab,))) for (lab,) in col_m.support)
                blocks.append(StageBlock(t, xh, yh, rows, cols))
    return StagewiseSystem(mu.space, nu.space, tuple(blocks))


def stage_conditionals(pi: Coupling, t: int) -> dict[tuple[Path, Path], dict[tuple[Label, Label], Fraction]]:
    """Conditional one-step pair laws of pi at stage t (histories of length
    t-1), keyed by joint history, for positive-mass histories only."""
    grouped: dict[tuple[Path, Path], dict[tuple[Label, Label], Fraction]] = {}
    totals: dict[tuple[Path, Path], Fraction] = {}
    for (x, y), value in pi.items():
        key = (x[: t - 1], y[: t - 1])
        bucket = grouped.setdefault(key, {})
        cell = (x[t - 1], y[t - 1])
        bucket[cell] = bucket.get(cell, Fraction(0)) + value
        totals[key] = totals.get(key, Fraction(0)) + value
    return {
        key: {cell: v / totals[key] for cell, v in bucket.items()}
        for key, bucket in grouped.items()
    }


def assemble_stagewise(
    left: PathSpace,
    right: PathSpace,
    choices: Mapping[tuple[Path, Path], Mapping[tuple[Label, Label], Fraction]],
) -> Coupling:
    """Glue stagewise conditional couplings into a path-pair coupling.

    choices maps each reached joint history pair (of any length 0..N-1) to a
    one-step coupling table over (next left label, next right label). Masses
    multiply along the tree; unreached histories are ignored. The result is
    bicausal by construction whenever each table couples the corresponding
    conditional kernels.
    """
    n = left.n_steps
    frontier: dict[tuple[Path, Path], Fraction] = {((), ()): ONE}
    for _ in range(n):
        nxt: dict[tuple[Path, Path], Fraction] = {}
        for (xh, yh), value in frontier.items():
            table = choices[(xh, yh)]
            for (xl, yl), w in table.items():
                if w == 0:
                    continue
                nxt[(xh + (xl,), yh + (yl,))] = nxt.get((xh + (xl,), yh + (yl,)), Fraction(0)) + value * w
        frontier = nxt
    return Coupling(left, right, {pair: v for pair, v in frontier.items()})


def product_coupling(mu: PathMeasure, nu: PathMeasure) -> Coupling:
    mass = {(x, y): vx * vy for x, vx in mu.items() for y, vy in nu.items()}
    return Coupling(mu.space, nu.space, mass)


def diagonal_coupling(mu: PathMeasure) -> Coupling:
    return Coupling(mu.space, mu.space, {(x, x): v for x, v in mu.items()})


def monge_coupling(mu: PathMeasure, mapping: Mapping[Path, Path], target: PathSpace) -> Coupling:
    mass: dict[Pair, Fraction] = {}
    for x, v in mu.items():
        y = tuple(mapping[x])
        mass[(x, y)] = mass.get((x, y), Fraction(0)) + v
    return Coupling(mu.space, target, mass)


def cost_integral(pi: Coupling, cost) -> Fraction:
    """Integral of a cost function c(x_path, y_path) against the coupling."""
    total = Fraction(0)
    for (x, y), value in pi.items():
        total += value * cost(x, y)
    return total
