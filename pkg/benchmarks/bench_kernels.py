"""Benchmark the compiled kernels against the pure NumPy fallback.

Times the three hot kernels in isolation and a full bandit run end to end,
swapping the backend by rebinding the dispatch module's function attributes
(every caller looks them up per call).

Usage: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

import emtree._kernels as kernels
from emtree._kernels import _pure

try:
    from emtree._kernels import _core
except ImportError:
    _core = None

KERNEL_NAMES = ["score_rows", "project", "project_rows", "oja_pass",
                "hashed_dot", "hashed_adagrad_update"]


def use_backend(impl):
    for name in KERNEL_NAMES:
        setattr(kernels, name, getattr(impl, name))
    kernels.BACKEND = impl.BACKEND


def best_of(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_score_rows(impl, iters=2000):
    rng = np.random.default_rng(0)
    w = rng.random(64)
    keys = rng.random((100, 64))
    x = rng.random(64)

    def work():
        for _ in range(iters):
            impl.score_rows(w, keys, x, False)

    return best_of(work) / iters


def bench_oja(impl, iters=200):
    rng = np.random.default_rng(1)
    xc = rng.standard_normal((512, 8))
    xc -= xc.mean(axis=0)
    xc = np.ascontiguousarray(xc)
    v0 = rng.standard_normal(8)
    v0 /= np.linalg.norm(v0)

    def work():
        for _ in range(iters):
            impl.oja_pass(xc, v0)

    return best_of(work) / iters


def bench_hashed_update(impl, iters=2000):
    rng = np.random.default_rng(2)
    w = np.zeros(1 << 16)
    acc = np.zeros(1 << 16)
    slots = rng.integers(0, 1 << 16, size=232).astype(np.int64)
    phi = rng.random(232)

    def work():
        for _ in range(iters):
            impl.hashed_adagrad_update(w, acc, slots, phi, -0.5, 0.5)

    return best_of(work, repeats=3) / iters


def bench_full_run():
    # end-to-end: memory-tree bandit on a recurring-context stream
    from emtree.bandit import TreeBandit
    from emtree.datasets import BanditEnv, SupervisedDataset
    from emtree.evaluation import RunConfig, run

    rng = np.random.default_rng(3)
    contexts = rng.random((50, 10))
    labels = rng.integers(5, size=50)
    labels[:5] = np.arange(5)
    idx = rng.integers(50, size=2000)
    ds = SupervisedDataset(features=contexts[idx], labels=labels[idx], n_classes=5)

    def work():
        learner = TreeBandit(10, 5, seed=0)
        run(learner, BanditEnv(ds), RunConfig(horizon=2000, seed=0))

    return best_of(work, repeats=3)


def main():
    if _core is None:
        print("compiled extension not built; benchmarking the pure backend only")
    backends = [("pure", _pure)] + ([("compiled", _core)] if _core else [])
    micro = [("score_rows 100x64", bench_score_rows),
             ("oja_pass 512x8", bench_oja),
             ("hashed_update 232 slots", bench_hashed_update)]

    results = {}
    for label, bench in micro:
        results[label] = {name: bench(impl) for name, impl in backends}

    macro = {}
    for name, impl in backends:
        use_backend(impl)
        macro[name] = bench_full_run()
    use_backend(_core if _core is not None else _pure)

    width = max(len(label) for label, _ in micro) + 2
    header = f"{'kernel':<{width}}" + "".join(f"{name:>12}" for name, _ in backends)
    if _core is not None:
        header += f"{'speedup':>10}"
    print(header)
    for label, _ in micro:
        row = f"{label:<{width}}"
        for name, _ in backends:
            row += f"{results[label][name] * 1e6:>10.2f}us"
        if _core is not None:
            row += f"{results[label]['pure'] / results[label]['compiled']:>9.1f}x"
        print(row)
    row = f"{'bandit run T=2000':<{width}}"
    for name, _ in backends:
        row += f"{macro[name] * 1e3:>10.1f}ms"
    if _core is not None:
        row += f"{macro['pure'] / macro['compiled']:>9.1f}x"
    print(row)


if __name__ == "__main__":
    main()
