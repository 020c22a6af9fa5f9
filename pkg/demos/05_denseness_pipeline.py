"""Approximating a bicausal coupling by biadapted Monge couplings.

At each target mesh the pipeline lifts the coupling to a biadapted bijection,
scrambles slots within partition cells on both sides (never across cells),
and projects the composition back. The result is the induced coupling of a
bijection, it agrees with the original on every product of cells exactly, and
its transport distance to the original sits below the partition mesh. At
singleton cells the approximation returns the coupling itself.
"""

from fractions import Fraction as F

from bicausal_ot import CostSpec, convergence_report, solve_bicausal_dp
from bicausal_ot.generators import fixture_dyadic

mu, nu = fixture_dyadic()
pi = solve_bicausal_dp(mu, nu, CostSpec.metric(1)).optimizer
print("target coupling: bicausal optimizer with", len(pi.support), "atoms")

report = convergence_report(pi, [F(1, 2), F(1, 4), F(1, 8), F(0)], p=1)
print("\n  mesh     W_1(pi_n, pi)   mesh bound   explicit bound   cost gap   cells")
for row in report.rows:
    print(
        f"  {str(row.target):<8} {str(row.wp_p):<15} {str(row.mesh_pow):<12}"
        f" {str(row.explicit_cost):<16} {str(row.cost_gap):<10} {row.cells_ok}"
    )
print("\nall rows verified exactly:", report.ok)
print("last row recovers the coupling: W_1 = 0 at singleton cells")
