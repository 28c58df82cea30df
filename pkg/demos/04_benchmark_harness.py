"""Run the benchmark grid on synthetic specs and summarize it.

The harness runs a (dataset x run x algorithm) grid. Each cell re-splits
the data 70/30 under a seed derived from (master seed, dataset, run), so
adding a dataset never changes another dataset's numbers. The same grid
is exposed as `softgp bench`, which also accepts PMLB names and 'paper'
for the twelve-dataset comparison suite.
"""

from softgp.bench import emit_bench_files, run_benchmark, summarize
from softgp.evolve import Algo, EvolutionConfig

datasets = ["synth:circles:120:0.1", "synth:moons:120:0.1", "synth:linsep:120:0.1"]
cfg = EvolutionConfig(population_size=30, max_generation=10, seed=0)

results, failures = run_benchmark(datasets, [Algo.GP, Algo.SGP], runs=3,
                                  ratio=0.7, cfg=cfg, master_seed=0,
                                  cache_dir=".pmlb-cache", log=print)

print(f"\n{len(results)} cells, {len(failures)} failures")
stats = summarize(results)
print(f"{'dataset':28s} {'algo':4s}  mean    stddev")
for (dataset, algo), (mean, std, n) in sorted(stats.items()):
    print(f"{dataset:28s} {algo:4s}  {mean:.4f}  {std:.4f}  ({n} runs)")

emit_bench_files(results, failures, "bench_out")
print("\nwrote bench_out/results.csv, summary.csv, summary.md")
