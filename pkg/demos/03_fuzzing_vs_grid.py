"""Budget-matched comparison of NSGA-II fuzzing and a Latin-hypercube grid.

A small two-cell campaign; the full desk-scale version lives in the
acceptance suite and takes a few minutes.
"""

from dataclasses import replace

from tsfuzz.campaign import CampaignPlan, Method, aggregate, run_campaign
from tsfuzz.netstate import NetworkConfig
from tsfuzz.nsga2 import GaConfig

plan = CampaignPlan(scenarios=("high_interference",), policies=("a3", "qlearning"), trials_per_cell=3,
                    ga=GaConfig(mu=8, generations=4), seed=5, network=NetworkConfig(n_ues=20))
ai = run_campaign(plan)
grid = run_campaign(replace(plan, method=Method.TRADITIONAL))

print("policy     trial  AI  grid")
for a, g in zip(ai.rows, grid.rows):
    print(f"{a.policy:<10} {a.trial:>5}  {a.total_vulns:>4}  {g.total_vulns:>4}")



def cell(result, policy):
    outcomes = [o for o in result.outcomes if o.row.policy == policy]
    return [o.row for o in outcomes], sum(o.severity_counts for o in outcomes)


for policy in plan.policies:
    (ai_rows, ai_sev), (grid_rows, grid_sev) = cell(ai, policy.value), cell(grid, policy.value)
    rep = aggregate(ai_rows, grid_rows, ai_sev, grid_sev)
    print(f"{policy.value}: uplift {100 * rep['improvement_rate']:+.1f}%, "
          f"Mann-Whitney p = {rep['mann_whitney_vulns']['p_value']:.3f}")
