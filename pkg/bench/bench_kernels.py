"""Time the compiled kernels against the pure-Python fallback.

    python bench/bench_kernels.py [--repeat 5]
"""
import argparse
import random
import timeit

from rotree import kernels
from rotree.envs.blocksworld import generate_instances


def workloads(seed=0):
    rng = random.Random(seed)
    states = [inst.state().encode() for inst in generate_instances(30, (4, 6), 4, seed=seed)]
    n = 2000
    parents = [-1] + [rng.randrange(i) for i in range(1, n)]
    values = [rng.random() for _ in range(n)]
    visits = [rng.randint(0, 3) for _ in range(n)]
    q = [rng.random() for _ in range(50)]
    counts = [rng.randint(1, 20) for _ in range(50)]
    return {
        "plan_distance (30 four-step states)": lambda m: [m.plan_distance(on, goal) for on, goal in states],
        "importance_scores (2000 nodes)": lambda m: m.importance_scores(parents, values, visits, True),
        "uct_argmax (50 children) x1000": lambda m: [m.uct_argmax(q, counts, sum(counts), 1.0) for _ in range(1000)],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = kernels.implementations()
    if "cython" not in impls:
        print("compiled kernels not built; timing the pure-Python fallback only")
    print(f"{'kernel':40s}" + "".join(f"{name:>12s}" for name in impls) + "     speedup")
    for label, fn in workloads().items():
        times = {name: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) for name, m in impls.items()}
        row = f"{label:40s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times.values())
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
