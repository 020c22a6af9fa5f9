"""Causality verdicts with witnesses, and Monge-structure classification.

A coupling is causal when the conditional law of the next left step given
both histories never uses the right history beyond what the left history
already determines; bicausal when this holds in both directions. The checks
below are exhaustive over positive-mass histories and return a reproducible
witness on failure.
"""

from fractions import Fraction as F

from bicausal_ot import (
    Coupling,
    PathMeasure,
    classify_monge,
    diagonal_coupling,
    is_bicausal,
    is_causal,
    make_space,
    product_coupling,
)

space = make_space([[("a", (0,)), ("b", (1,))]] * 2)
mu = PathMeasure(space, {("a", "a"): F(3, 8), ("a", "b"): F(1, 8), ("b", "a"): F(1, 8), ("b", "b"): F(3, 8)})
nu = PathMeasure(space, {("a", "a"): F(1, 4), ("a", "b"): F(1, 4), ("b", "b"): F(1, 2)})

print("product coupling:", is_bicausal(product_coupling(mu, nu)).verdict)
print("diagonal coupling:", is_bicausal(diagonal_coupling(mu)).verdict)

# an anticipative coupling: the first right coordinate copies the second
# left coordinate, so the right side peeks one step into the future
y_space = make_space([[("a", (0,)), ("b", (1,))], [("z", (0,))]])
peeking = Coupling(
    space,
    y_space,
    {((x1, x2), (x2, "z")): F(1, 4) for x1 in "ab" for x2 in "ab"},
)
report = is_causal(peeking)
print("\npeeking coupling:", report.verdict)
w = report.witness
print(
    "witness: at step", w.t + 1,
    "given histories", w.x_hist, w.y_hist,
    "the conditional of", w.point, "is", w.conditional, "but the kernel says", w.expected,
)

print("\nMonge classification:")
print("  diagonal:", classify_monge(diagonal_coupling(mu)).tag)
print("  product:", classify_monge(product_coupling(mu, nu)).tag)

reversal = {p: (p[1], p[0]) for p in mu.support}
flipped = Coupling(space, space, {(p, reversal[p]): v for p, v in mu.items()})
tag = classify_monge(flipped)
print("  time reversal:", tag.tag, "(bijective:", tag.is_bijective, "/ adapted:", tag.is_adapted, ")")
