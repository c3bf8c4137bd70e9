"""Time the numba and numpy kernel paths on CNN-sized tensors.

    python3 benchmarks/bench_kernels.py [--side 100] [--batch 16] [--repeat 5]

Reports the best-of-N wall time of each kernel on both backends and of one
full forward/backward training step with each backend swapped in.
"""

import argparse
import timeit

import numpy as np

from nfdx import _accel
from nfdx.nn import ArchConfig, init_model, kernels, loss_and_gradients

BACKENDS = ("numpy", "numba")
KERNELS = ("im2col", "col2im", "maxpool2x2", "maxpool2x2_backward")


def use_backend(name):
    for k in KERNELS:
        setattr(kernels, k, getattr(kernels, f"{k}_{name}"))


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation on the numba path
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(side, batch, rng):
    x3 = rng.normal(size=(batch, 3, side, side))
    x64 = rng.normal(size=(batch, 64, side // 2, side // 2))
    cols = rng.normal(size=(batch * (side // 2) ** 2, 64 * 9))
    relu = rng.normal(size=(batch, 64, side, side))
    pooled, arg = kernels.maxpool2x2_numpy(relu)
    return {
        "im2col (3ch)": lambda b: getattr(kernels, f"im2col_{b}")(x3, 3),
        "im2col (64ch)": lambda b: getattr(kernels, f"im2col_{b}")(x64, 3),
        "col2im (64ch)": lambda b: getattr(kernels, f"col2im_{b}")(cols, x64.shape, 3),
        "maxpool2x2": lambda b: getattr(kernels, f"maxpool2x2_{b}")(relu),
        "maxpool2x2 backward": lambda b: getattr(kernels, f"maxpool2x2_backward_{b}")(pooled, arg, relu.shape),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--side", type=int, default=100)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare (pip install numba)")
    rng = np.random.default_rng(0)
    print(f"side {args.side}, batch {args.batch}, best of {args.repeat}, default backend {_accel.backend_name()}")
    print(f"{'kernel':<22}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, run in kernel_cases(args.side, args.batch, rng).items():
        t = {b: best_of(lambda b=b: run(b), args.repeat) for b in BACKENDS}
        print(f"{name:<22}{1e3 * t['numpy']:>10.2f}{1e3 * t['numba']:>10.2f}{t['numpy'] / t['numba']:>8.2f}x")

    model = init_model(ArchConfig(side=args.side), seed=0)
    x = rng.random((args.batch, 3, args.side, args.side))
    y = rng.integers(0, 4, args.batch)
    step = {}
    original = {k: getattr(kernels, k) for k in KERNELS}
    try:
        for b in BACKENDS:
            use_backend(b)
            step[b] = best_of(lambda: loss_and_gradients(model, x, y, train=True, rng=np.random.default_rng(0)), args.repeat)
    finally:
        for k, fn in original.items():
            setattr(kernels, k, fn)
    print(f"{'training step':<22}{1e3 * step['numpy']:>10.1f}{1e3 * step['numba']:>10.1f}{step['numpy'] / step['numba']:>8.2f}x")


if __name__ == "__main__":
    main()
