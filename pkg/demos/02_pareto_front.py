"""Evolve load-imbalance configurations against the utility policy and list the Pareto front."""

from tsfuzz.genome import scenario_spec
from tsfuzz.netstate import NetworkConfig
from tsfuzz.nsga2 import GaConfig, evolve
from tsfuzz.objectives import evaluate
from tsfuzz.policies import PolicyConfig, PolicyKind

scenario = scenario_spec("load_imbalance", NetworkConfig(n_ues=20))
policy = PolicyConfig(kind=PolicyKind.UTILITY)


def evaluator(genome, seed, index):
    return evaluate(genome, policy, seed, eval_index=index)


result = evolve(scenario, evaluator, GaConfig(mu=12, generations=6), seed=3)

print("gen  best cumulative  max f1    max f2   max f3")
for row in result.history:
    print(f"{row['generation']:>3}  {row['best_cumulative_vulns']:>15}  {row['max_f1']:7.3f}  "
          f"{row['max_f2']:7.4f}  {row['max_f3']:6.4f}")

print(f"\nfinal front ({len(result.front)} of {len(result.population)} survivors):")
for ind in sorted(result.front, key=lambda i: -i.objectives[0]):
    f1, f2, f3 = ind.objectives
    print(f"  {ind.genome.hash}  f1 {f1:7.3f}  f2 {f2:.4f}  f3 {f3:.4f}  vulns {ind.result.n_vulns}")
