"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--size N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from advact import _kernels_py
from advact.adversarial import XiGeluParams, XiTanhParams
from advact.kernels import compiled_module


def cases(n, rng):
    x = rng.uniform(-4.0, 4.0, size=(n // 64, 64))
    c = [rng.uniform(-2.0, 2.0, size=x.shape) for _ in range(4)]
    g = np.ones_like(x)
    a = XiTanhParams().values.copy()
    q = XiGeluParams().values.copy()
    cbar = (c[1] + c[2] + c[3]) / 3.0
    return {
        "sigmoid_vd": (x,),
        "sigmoid_theta_vd": (x, 1.0),
        "xi_sigmoid_vd": (x,),
        "xi_sigmoid_theta_vd": (x, 1.0),
        "tanh_vd": (x,),
        "gelu_vd": (x,),
        "tanh_split4_vp": tuple(c),
        "gelu_split4_vp": tuple(c),
        "xi_tanh_fwd": (*c, a),
        "xi_tanh_bwd": (g, *c, a),
        "xi_gelu_fwd": (c[0], cbar, q),
        "xi_gelu_bwd": (g, c[0], cbar, q),
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=1 << 18)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    compiled = compiled_module()
    if compiled is None:
        print("compiled extension not built; nothing to compare")
        return
    args_by_name = cases(args.size, np.random.default_rng(0))
    print(f"{'kernel':<22}{'numpy ms':>10}{'cython ms':>11}{'speedup':>9}")
    for name, call_args in args_by_name.items():
        times = []
        for mod in (_kernels_py, compiled):
            fn = getattr(mod, name)
            times.append(min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=args.repeat)) * 1e3)
        print(f"{name:<22}{times[0]:>10.2f}{times[1]:>11.2f}{times[0] / times[1]:>8.1f}x")


if __name__ == "__main__":
    main()
