"""A small end-to-end benchmark: three valuators, two noise rates.

Runs the suite harness (noise injection -> valuation -> detection
metrics -> mean/standard-error aggregation) on a reduced grid so it
finishes in about a minute, then prints the headline F1 table.
"""

from lossval import BenchmarkConfig, SplitSpec, run_benchmark

config = BenchmarkConfig(
    datasets=("blobs",),
    methods=("lossval", "knn_shapley", "random"),
    noise_kinds=("label",),
    rates=(0.1, 0.2),
    n_seeds=3,
    split=SplitSpec(300, 60, 200, seed=0),
    epochs=10,
    mlp_hidden=(32, 32),
    blob_dim=6,
    n_jobs=2,
)

report = run_benchmark(config)

print(f"{'method':<14} {'rate':>5} {'F1':>8} {'+/- SE':>8}")
for agg in report.aggregates:
    print(f"{agg['method']:<14} {agg['rate']:>5.2f} "
          f"{agg['f1_mean']:>8.3f} {agg['f1_se']:>8.3f}")

failures = [c for c in report.cells if "error" in c]
print(f"\n{len(report.cells)} cells, {len(failures)} failed")
print("the same numbers would land in report.json / f1_table.csv via the CLI:")
print("  lossval benchmark --datasets blobs --methods lossval,knn_shapley,random"
      " --rates 10,20 --seeds 3 --out results/")
