"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from spltrack import kernels


def cases(rng):
    n = 50
    losses, cs, rhos = rng.uniform(0, 0.02, n), rng.uniform(0, 1, n), rng.uniform(0.5, 1, n)
    rmap = rng.standard_normal((48, 48))
    quad, lin = rng.uniform(0.1, 2, 20), rng.uniform(-1, 1, 20)
    xh = np.fft.fft2(rng.standard_normal((n, 48, 48)))
    yh = np.fft.fft2(rng.standard_normal((48, 48)))[None].repeat(n, 0)
    filt = np.fft.fft2(rng.standard_normal((48, 48)))
    v = rng.uniform(0, 1, n)
    return {
        "guided_weights (t=50)": lambda k: k.guided_weights(losses, cs, rhos, 0.008, 0.01),
        "two_peaks (48x48)": lambda k: k.two_peaks(rmap, 4),
        "coordinate_descent (t=20)": lambda k: k.coordinate_descent(quad, lin),
        "spectral_losses (50x48x48)": lambda k: k.spectral_losses(filt, xh, yh),
        "weighted_spectra (50x48x48)": lambda k: k.weighted_spectra(v, xh, yh),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = kernels.backends()
    if "cython" not in impls:
        print("compiled backend not built; only the python backend is available")
    names = [n for n in ("python", "cython") if n in impls]
    print(f"{'kernel':<30s}" + "".join(f"{n:>14s}" for n in names) + ("    speedup" if len(names) > 1 else ""))
    for label, fn in cases(np.random.default_rng(0)).items():
        times = []
        for name in names:
            k = impls[name]
            number, _ = timeit.Timer(lambda: fn(k)).autorange()
            best = min(timeit.repeat(lambda: fn(k), number=number, repeat=args.repeat)) / number
            times.append(best)
        row = f"{label:<30s}" + "".join(f"{t * 1e6:>11.1f} us" for t in times)
        if len(times) > 1:
            row += f"  {times[0] / times[1]:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
