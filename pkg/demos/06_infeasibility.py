"""Why the approximation must live on slot-extended spaces.

At base level, a biadapted bijection between two discrete laws needs, at
every reached pair of histories, a mass-preserving bijection between the
conditional supports. The pair below has first steps uniform on two points,
but the left second step is a single point while the right second step splits
in two: the conditional atom-mass multisets are {1} versus {1/2, 1/2}, so no
bicausal coupling of the pair sits on a bijection graph. Slot refinement is
exactly what removes this obstruction.
"""

from bicausal_ot import CostSpec, classify_monge, solve_bicausal_dp, solve_kantorovich
from bicausal_ot.approx import biadapted_feasibility
from bicausal_ot.generators import paper_example_pair

mu, nu = paper_example_pair()
print("left law:", dict((p, str(v)) for p, v in mu.items()))
print("right law:", dict((p, str(v)) for p, v in nu.items()))

result = biadapted_feasibility(mu, nu)
print("\nbase-level biadapted bijection exists:", result.feasible)
t, xh, yh, ms_x, ms_y = result.witness
print(
    "witness: at step", t, "given histories", xh, yh,
    "conditional mass multisets are", [str(v) for v in ms_x], "vs", [str(v) for v in ms_y],
)

cost = CostSpec.metric(1)
for name, res in (
    ("classical optimizer", solve_kantorovich(mu, nu, cost)),
    ("adapted optimizer", solve_bicausal_dp(mu, nu, cost)),
):
    print(f"{name}: value {res.value}, classification {classify_monge(res.optimizer).tag}")

print("\nno optimizer of this pair is a biadapted Monge coupling, as predicted")
