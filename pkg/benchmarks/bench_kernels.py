"""Compiled kernels vs the numpy fallback.

Times each hot kernel on workload shapes taken from the default classifier and
generator, plus a full conv2d forward/backward through the autograd layer with
each backend swapped in. Prints one row per kernel with both timings and the
speedup, and checks that both backends agree: bit-for-bit for the layout
kernels, to 1e-12 relative for the distance reduction (summation order differs).

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
import timeit

import numpy as np

from cccgen import kernels
from cccgen import autograd as ag
from cccgen.autograd import Tensor

BACKENDS = ("python", "compiled")


@contextlib.contextmanager
def use_backend(name):
    """Point the module-level kernel names (used by the autograd ops) at one backend."""
    mod = kernels.get_backend(name)
    names = ("im2col", "col2im", "min_sq_dist", "maxpool2d_forward", "maxpool2d_backward")
    saved = {n: getattr(kernels, n) for n in names}
    for n in names:
        setattr(kernels, n, getattr(mod, n))
    try:
        yield
    finally:
        for n, fn in saved.items():
            setattr(kernels, n, fn)


def workloads(rng):
    x = rng.standard_normal((128, 32, 14, 14)).astype(np.float32)
    cols = kernels.get_backend("python").im2col(x, 3, 3, 2, 1)
    pool_in = rng.standard_normal((128, 32, 28, 28)).astype(np.float32)
    _, arg = kernels.get_backend("python").maxpool2d_forward(pool_in, 2)
    g_pool = rng.standard_normal((128, 32, 14, 14)).astype(np.float32)
    q = rng.random((100, 784))
    r = rng.random((5000, 784))
    conv_x = rng.standard_normal((64, 32, 14, 14)).astype(np.float32)
    conv_w = (rng.standard_normal((64, 32, 3, 3)) * 0.05).astype(np.float32)

    def conv_fwd_bwd(backend):
        with use_backend(backend):
            xt = Tensor(conv_x, requires_grad=True)
            wt = Tensor(conv_w, requires_grad=True)
            out = ag.conv2d(xt, wt, stride=2, padding=1)
            ag.tsum(out).backward()
            return np.concatenate([out.data.ravel(), xt.grad.ravel(), wt.grad.ravel()])

    return {
        "im2col [128,32,14,14] k3 s2": lambda b: kernels.get_backend(b).im2col(x, 3, 3, 2, 1),
        "col2im [128,32,14,14] k3 s2": lambda b: kernels.get_backend(b).col2im(cols, x.shape, 3, 3, 2, 1),
        "maxpool fwd [128,32,28,28]": lambda b: kernels.get_backend(b).maxpool2d_forward(pool_in, 2)[0],
        "maxpool bwd [128,32,28,28]": lambda b: kernels.get_backend(b).maxpool2d_backward(g_pool, arg, pool_in.shape, 2),
        "min_sq_dist 100x5000x784": lambda b: kernels.get_backend(b).min_sq_dist(q, r),
        "conv2d fwd+bwd [64,32,14,14]": conv_fwd_bwd,
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="also write results to this file")
    args = parser.parse_args(argv)
    if not kernels.compiled_available():
        print("compiled extension not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1

    rng = np.random.default_rng(0)
    results = []
    print(f"{'kernel':32s} {'python ms':>10s} {'compiled ms':>12s} {'speedup':>8s}  agree")
    for name, fn in workloads(rng).items():
        outs = {b: fn(b) for b in BACKENDS}
        if name.startswith("min_sq_dist"):
            agree = bool(np.allclose(outs["python"], outs["compiled"], rtol=1e-12, atol=0))
        else:
            agree = bool(np.array_equal(outs["python"], outs["compiled"]))
        times = {b: min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) * 1e3 for b in BACKENDS}
        speedup = times["python"] / times["compiled"]
        results.append({"kernel": name, **{f"{b}_ms": t for b, t in times.items()}, "speedup": speedup,
                        "agree": agree})
        print(f"{name:32s} {times['python']:10.2f} {times['compiled']:12.2f} {speedup:7.2f}x  {agree}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
    return 0 if all(r["agree"] for r in results) else 1


if __name__ == "__main__":
    raise SystemExit(main())
