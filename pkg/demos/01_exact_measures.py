"""Exact path measures: build, disintegrate, recompose, restrict, push.

Every mass is a Fraction and every identity printed below is an exact
rational equality, not a float comparison.
"""

from fractions import Fraction as F

from bicausal_ot import PathMeasure, disintegrate, make_space, pushforward, restrict
from bicausal_ot.measures import kernel_chain, recompose

# a two-step process: calm/volatile regime, then a move on a 1-d grid
space = make_space(
    [
        [("calm", (0,)), ("vol", (1,))],
        [("down", (-1,)), ("flat", (0,)), ("up", (1,))],
    ]
)
mu = PathMeasure(
    space,
    {
        ("calm", "flat"): F(1, 3),
        ("calm", "up"): F(1, 6),
        ("vol", "down"): F(1, 4),
        ("vol", "up"): F(1, 4),
    },
)
print("measure on", space.n_steps, "steps with", len(mu.support), "atoms")

prefix, kernel = disintegrate(mu, 1)
print("\nfirst-step marginal:")
for path, value in prefix.items():
    print("  ", path[0], "->", value)
print("conditional next-step laws:")
for hist in kernel.histories():
    print("  given", hist[0], "->", {lab: str(v) for (lab,), v in kernel(hist).items()})

rebuilt = recompose(space, kernel_chain(mu))
print("\nchain recomposition reproduces the measure exactly:", dict(rebuilt.items()) == dict(mu.items()))

cell = restrict(mu, [("calm", "vol"), ("flat", "up")])
print("mass retained on the {flat,up} cell:", cell.total)

flip = {p: (("vol" if p[0] == "calm" else "calm"),) + p[1:] for p in mu.support}
image = pushforward(mu, flip, space)
print("pushforward under the regime flip keeps total mass:", sum(v for _, v in image.items()))
