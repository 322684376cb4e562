"""Learning time against graph size and dataset size.

Each optimizer iteration factors an N x N matrix per instance, so time should
grow roughly linearly in M and polynomially in N (cubic asymptotically; at
these sizes the quadratic parts still dominate).
"""

from gcrfbc.bench import benchmark, loglog_slope

nodes = [16, 32, 64, 128]
rep = benchmark([(4, n) for n in nodes], repeats=3)
print(rep.to_csv())
for v in ("b", "nb"):
    print(v, "slope vs N:", round(loglog_slope(nodes, [r.fit_seconds for r in rep.select(v)]), 2))

sizes = [50, 100, 200, 400]
rep = benchmark([(m, 16) for m in sizes], variants=("b",), repeats=3)
print("b slope vs M:", round(loglog_slope(sizes, [r.fit_seconds for r in rep.select("b")]), 2))
