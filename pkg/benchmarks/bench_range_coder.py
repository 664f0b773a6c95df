#!/usr/bin/env python3
"""Benchmark the compiled range coder against the pure-Python fallback.

Usage: python benchmarks/bench_range_coder.py [n_symbols]

Encodes/decodes the same Gaussian symbol stream with both backends and
reports throughput. The two must produce identical bytes; this is checked
on every run.
"""

import sys
import time

import numpy as np

from nvc.entropy import build_cum_matrix
from nvc.entropy.coder import _range_py

try:
    from nvc.entropy.coder import _range_cy
except ImportError:
    _range_cy = None


def make_stream(n, seed=0):
    rng = np.random.default_rng(seed)
    mu = rng.normal(0, 3, n)
    sigma = rng.uniform(0.1, 8.0, n)
    symbols = np.round(rng.normal(mu, sigma)).astype(np.int64)
    lo = int(symbols.min()) - 1
    hi = int(symbols.max()) + 1
    cum = build_cum_matrix(mu, sigma, (lo, hi))
    return symbols - lo, cum


def run(backend, idx, cum):
    t0 = time.perf_counter()
    enc = backend.RangeEncoder()
    enc.encode_all(idx, cum)
    data = enc.finish()
    t1 = time.perf_counter()
    dec = backend.RangeDecoder(data)
    out = dec.decode_all(cum)
    dec.verify()
    t2 = time.perf_counter()
    assert np.array_equal(out, idx)
    return data, t1 - t0, t2 - t1


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    idx, cum = make_stream(n)
    print(f"{n} symbols, alphabet size {cum.shape[1] - 1}")
    print(f"{'backend':<10}{'encode':>12}{'decode':>12}"
          f"{'enc sym/s':>14}{'dec sym/s':>14}")

    results = {}
    backends = [("python", _range_py)]
    if _range_cy is not None:
        backends.append(("cython", _range_cy))
    for name, mod in backends:
        data, t_enc, t_dec = run(mod, idx, cum)
        results[name] = data
        print(f"{name:<10}{t_enc:>10.3f}s{t_dec:>10.3f}s"
              f"{n / t_enc:>14,.0f}{n / t_dec:>14,.0f}")

    if len(results) == 2:
        assert results["python"] == results["cython"], \
            "backends produced different bytes"
        print("byte-identical output: yes")
    else:
        print("compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
