"""Compare the compiled and pure-Python kernel backends.

Times the two hot kernels (origin weights and batched cart-pole rollouts) on
each available backend, checks that both give the same answer, and prints
one line per case with the speed-up.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --population 1024 --repeats 5
"""

import argparse
import timeit

import numpy as np

from diffevo import kernels
from diffevo.cartpole import ARCHITECTURES, _episode_inits, param_count


def _weight_case(N, d, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, d))
    log_q = np.log(rng.uniform(0.01, 1.0, N))
    return (X, X, log_q, 0.5)


def _rollout_case(N, arch, seed):
    sizes = ARCHITECTURES[arch]
    rng = np.random.default_rng(seed)
    params = rng.standard_normal((N, param_count(sizes)))
    init = _episode_inits(rng.integers(0, 2**32, N), 1, 500)
    return (params, np.array(sizes), init, 500)


def _time(fn, args, backend, repeats):
    timer = timeit.Timer(lambda: fn(*args, backend=backend))
    return min(timer.repeat(repeat=repeats, number=1))


def _agree(a, b):
    return all(np.allclose(x, y, rtol=1e-10, atol=1e-12) for x, y in zip(a, b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--population", type=int, default=512)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND})")
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is timed")

    N = args.population
    cases = [
        (f"origin_weights N={N} d=2", kernels.origin_weights, _weight_case(N, 2, args.seed)),
        (f"origin_weights N={N} d=58", kernels.origin_weights, _weight_case(N, 58, args.seed)),
        (f"rollout_batch N={N} small", kernels.rollout_batch, _rollout_case(N, "small", args.seed)),
        (f"rollout_batch N={N // 4} deep", kernels.rollout_batch, _rollout_case(N // 4, "deep", args.seed)),
    ]
    print(f"{'case':<32} " + " ".join(f"{b:>12}" for b in backends) + f" {'speed-up':>9} {'agree':>6}")
    for name, fn, case in cases:
        times = {b: _time(fn, case, b, args.repeats) for b in backends}
        outputs = [fn(*case, backend=b) for b in backends]
        agree = _agree(outputs[0], outputs[-1])
        speedup = times["python"] / times["compiled"] if "compiled" in times else 1.0
        cells = " ".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
        print(f"{name:<32} {cells} {speedup:>8.1f}x {str(agree):>6}")


if __name__ == "__main__":
    main()
