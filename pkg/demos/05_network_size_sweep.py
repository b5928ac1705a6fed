"""More agents, more regret: the network-size sweep on ring topologies.

Each agent pays the full summed cost at its own decision, so disagreement
anywhere in the network shows up in everyone's regret.  Bigger rings mix
slower and carry a larger summed cost, so the time-averaged regret curves
order themselves by network size.
"""
import warnings

from rgfopt.experiments import experiment_fig4

with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    result = experiment_fig4(seed=0, agent_counts=(5, 10, 20, 40), horizon=1200,
                             out_dir="demo_out_sweep")

print("=== mean time-averaged regret, (1/N) sum_i R_i(t)/t ===")
print(f"{'N':>5} {'t=120':>10} {'t=600':>10} {'t=1200':>10}")
for n in result.agent_counts:
    curve = result.mean_time_avg[n]
    print(f"{n:>5} {curve[119]:>10.4f} {curve[599]:>10.4f} {curve[-1]:>10.4f}")

finals = [result.final_values[n] for n in result.agent_counts]
print("\nfinal values nondecreasing in N:",
      all(b >= a for a, b in zip(finals, finals[1:])))
print("every curve still descending over its final decade:",
      all(result.mean_time_avg[n][-1] < result.mean_time_avg[n][119]
          for n in result.agent_counts))
print("\nartifacts (CSV series, metadata, plot script) in", result.out_dir)
