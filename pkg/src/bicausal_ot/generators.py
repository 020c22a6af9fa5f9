"""Deterministic instance generators and named fixtures.

All randomness flows through getrandbits of a seeded Mersenne twister, so a
seed pins the generated instance byte for byte across platforms and runs.
Couplings are generated stagewise (one conditional coupling per joint history
pair), which makes them bicausal by construction.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .couplings import Coupling, assemble_stagewise, bicausal_constraints
from .errors import UsageError
from .lifting import RefinementPlan, microatomize, plan_for_measures
from .measures import PathMeasure
from .spaces import Path, PathSpace, make_space

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _rand_below(rng: random.Random, n: int) -> int:
    return rng.getrandbits(32) % n


def _rand_composition(rng: random.Random, total: int, parts: int) -> list[int]:
    """Random composition of `total` into `parts` positive integers."""
    if parts == 1:
        return [total]
    cuts = sorted(
        _sample_without_replacement(rng, total - 1, parts - 1)
    )  # cut positions in 1..total-1
    out = []
    prev = 0
    for c in cuts:
        out.append(c - prev)
        prev = c
    out.append(total - prev)
    return out


def _sample_without_replacement(rng: random.Random, n: int, k: int) -> list[int]:
    """k distinct values from 1..n."""
    chosen: list[int] = []
    pool = list(range(1, n + 1))
    for _ in range(k):
        i = _rand_below(rng, len(pool))
        chosen.append(pool.pop(i))
    return chosen


def tree_space(n_steps: int, branching: int, coord_scale: Fraction = Fraction(1, 4)) -> PathSpace:
    """Per-step alphabet of `branching` labeled points on a 1-d grid."""
    step = [( _LETTERS[i], (Fraction(i) * coord_scale,)) for i in range(branching)]
    return make_space([step] * n_steps)


def random_tree_measure(
    rng: random.Random, space: PathSpace, denom: int, full_support: bool = True
) -> PathMeasure:
    """Random measure built from stagewise kernels with masses k/denom."""
    n = space.n_steps
    frontier: dict[Path, Fraction] = {(): Fraction(1)}
    for t in range(n):
        labels = space.labels(t)
        nxt: dict[Path, Fraction] = {}
        for hist in sorted(frontier, key=lambda h: tuple(space.index(i, l) for i, l in enumerate(h))):
            value = frontier[hist]
            if full_support:
                if len(labels) > denom:
                    raise UsageError(
                        "full support needs a denominator at least as large as the branching",
                        branching=len(labels),
                        denom=denom,
                    )
                support = list(labels)
            else:
                k = 1 + _rand_below(rng, min(len(labels), denom))
                support = [labels[i - 1] for i in sorted(_sample_without_replacement(rng, len(labels), k))]
            weights = _rand_composition(rng, denom, len(support))
            for lab, w in zip(support, weights):
                nxt[hist + (lab,)] = value * Fraction(w, denom)
        frontier = nxt
    return PathMeasure(space, frontier)


def random_integer_plan(rng: random.Random, rows: list[int], cols: list[int]) -> dict:
    """Random integer transportation table with the given integer marginals."""
    a = list(rows)
    b = list(cols)
    out: dict[tuple[int, int], int] = {}
    active_r = [i for i, v in enumerate(a) if v > 0]
    active_c = [j for j, v in enumerate(b) if v > 0]
    while active_r and active_c:
        i = active_r[_rand_below(rng, len(active_r))]
        j = active_c[_rand_below(rng, len(active_c))]
        amount = 1 + _rand_below(rng, min(a[i], b[j]))
        out[(i, j)] = out.get((i, j), 0) + amount
        a[i] -= amount
        b[j] -= amount
        active_r = [r for r, v in enumerate(a) if v > 0]
        active_c = [c for c, v in enumerate(b) if v > 0]
    if any(a) or any(b):
        raise AssertionError("internal: integer plan did not balance")
    return out


def random_bicausal_coupling(
    rng: random.Random, mu: PathMeasure, nu: PathMeasure, denom: int
) -> Coupling:
    """Random element of the bicausal polytope via stagewise conditional
    couplings with masses in multiples of 1/denom; every conditional kernel
    mass of mu and nu must clear the same denominator."""
    system = bicausal_constraints(mu, nu)
    choices = {}
    d = denom
    for block in system.blocks:
        if any((m * d).denominator != 1 for _, m in block.rows + block.cols):
            raise UsageError("denominator bound too small for this instance")
        rows = [int(m * d) for _, m in block.rows]
        cols = [int(m * d) for _, m in block.cols]
        plan = random_integer_plan(rng, rows, cols)
        row_labels = [lab for lab, _ in block.rows]
        col_labels = [lab for lab, _ in block.cols]
        choices[(block.x_hist, block.y_hist)] = {
            (row_labels[i], col_labels[j]): Fraction(v, d) for (i, j), v in plan.items()
        }
    return assemble_stagewise(mu.space, nu.space, choices)


def random_instance(seed: int, n_steps: int, branching: int, denom: int, with_pi: bool = True):
    """Deterministic (mu, nu[, pi]) triple from a 64-bit seed."""
    rng = random.Random(seed)
    space = tree_space(n_steps, branching)
    mu = random_tree_measure(rng, space, denom)
    nu = random_tree_measure(rng, space, denom)
    if not with_pi:
        return mu, nu, None
    pi = random_bicausal_coupling(rng, mu, nu, denom)
    return mu, nu, pi


def random_micro_bicausal(seed: int, n_steps: int, branching: int, denom: int):
    """Random bicausal coupling between the uniform micro refinements of a
    random instance, together with both micro spaces."""
    rng = random.Random(seed)
    space = tree_space(n_steps, branching)
    mu = random_tree_measure(rng, space, denom)
    nu = random_tree_measure(rng, space, denom)
    from math import lcm as _lcm

    plan = RefinementPlan(
        tuple(
            _lcm(a, b)
            for a, b in zip(
                plan_for_measures(mu).denominators, plan_for_measures(nu).denominators
            )
        )
    )
    micro_x = microatomize(mu, plan)
    micro_y = microatomize(nu, plan)
    mu_hat = micro_x.uniform_measure()
    nu_hat = micro_y.uniform_measure()
    pi_hat = random_bicausal_coupling(rng, mu_hat, nu_hat, plan.size)
    return pi_hat, micro_x, micro_y


def paper_example_pair() -> tuple[PathMeasure, PathMeasure]:
    """Finite analogue of the canonical infeasibility pair: both first steps
    are uniform on two points; the left second step is a single point, the
    right second step is uniform on two points. No bicausal coupling of the
    pair is supported on a bijection graph."""
    x_space = make_space(
        [
            [("a", ("0",)), ("b", ("1",))],
            [("z", ("0",))],
        ]
    )
    y_space = make_space(
        [
            [("a", ("0",)), ("b", ("1",))],
            [("a", ("0",)), ("b", ("1",))],
        ]
    )
    half = Fraction(1, 2)
    quarter = Fraction(1, 4)
    mu = PathMeasure(x_space, {("a", "z"): half, ("b", "z"): half})
    nu = PathMeasure(
        y_space,
        {
            ("a", "a"): quarter,
            ("a", "b"): quarter,
            ("b", "a"): quarter,
            ("b", "b"): quarter,
        },
    )
    return mu, nu


def fixture_f1() -> tuple[PathMeasure, PathMeasure]:
    """Frozen 2-step, 2x2-alphabet pair used by the solver tests."""
    space = make_space(
        [
            [("a", ("0",)), ("b", ("1",))],
            [("a", ("0",)), ("b", ("1",))],
        ]
    )
    mu = PathMeasure(
        space,
        {
            ("a", "a"): Fraction(1, 6),
            ("a", "b"): Fraction(1, 3),
            ("b", "a"): Fraction(1, 3),
            ("b", "b"): Fraction(1, 6),
        },
    )
    nu = PathMeasure(
        space,
        {
            ("a", "a"): Fraction(1, 4),
            ("a", "b"): Fraction(1, 4),
            ("b", "a"): Fraction(1, 8),
            ("b", "b"): Fraction(3, 8),
        },
    )
    return mu, nu


def fixture_aw_gap(
    spread: Fraction = Fraction(1), eps: Fraction = Fraction(1, 2)
) -> tuple[PathMeasure, PathMeasure]:
    """Information-sensitive pair: the left process reveals its move at the
    second step, the right process commits at the first step. The adapted
    value strictly exceeds the classical one whenever eps < 2 - spread gap."""
    spread = Fraction(spread)
    eps = Fraction(eps)
    x_space = make_space(
        [
            [("o", (Fraction(0),))],
            [("d", (-spread,)), ("u", (spread,))],
        ]
    )
    y_space = make_space(
        [
            [("d", (-eps,)), ("u", (eps,))],
            [("d", (-spread,)), ("u", (spread,))],
        ]
    )
    half = Fraction(1, 2)
    mu = PathMeasure(x_space, {("o", "d"): half, ("o", "u"): half})
    nu = PathMeasure(y_space, {("d", "d"): half, ("u", "u"): half})
    return mu, nu


def fixture_dyadic() -> tuple[PathMeasure, PathMeasure]:
    """2-step, 4 points per step at coordinates {0, 1/8, 1/4, 1/2}, dyadic
    masses; grid targets 1/2, 1/4, 1/8 and 0 produce a strictly finer
    partition ladder on these coordinates."""
    step = [("a", ("0",)), ("b", ("0.125",)), ("c", ("0.25",)), ("d", ("0.5",))]
    space = make_space([step, step])
    e = Fraction(1, 8)
    mu = PathMeasure(
        space,
        {
            ("a", "a"): 2 * e * Fraction(1, 2),
            ("a", "c"): 2 * e * Fraction(1, 2),
            ("b", "b"): e,
            ("c", "a"): 2 * e * Fraction(1, 4),
            ("c", "d"): 2 * e * Fraction(3, 4),
            ("d", "b"): 3 * e * Fraction(1, 2),
            ("d", "d"): 3 * e * Fraction(1, 2),
        },
    )
    nu = PathMeasure(
        space,
        {
            ("a", "b"): e * Fraction(1, 2),
            ("a", "d"): e * Fraction(1, 2),
            ("b", "a"): 3 * e * Fraction(1, 4),
            ("b", "c"): 3 * e * Fraction(3, 4),
            ("c", "c"): 2 * e,
            ("d", "a"): 2 * e * Fraction(1, 2),
            ("d", "b"): 2 * e * Fraction(1, 2),
        },
    )
    return mu, nu


FIXTURES = {
    "f1": fixture_f1,
    "aw-gap": fixture_aw_gap,
    "dyadic": fixture_dyadic,
    "paper-example": paper_example_pair,
}


def fixture(name: str):
    try:
        return FIXTURES[name]()
    except KeyError:
        raise UsageError(f"unknown fixture {name!r}", known=sorted(FIXTURES)) from None
