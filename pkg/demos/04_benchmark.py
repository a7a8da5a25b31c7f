# Benchmark
# The raw correlation costs O(N^2 M) and the compressed one O(N^2 K).
# Doubling M should double the raw time and leave the compressed one flat.

from hxpcs import bench

report = bench.run_bench([(128, 16384, 16), (128, 32768, 16)], repeats=2)
print(bench.format_summary(report))
