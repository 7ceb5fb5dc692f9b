"""Compiled versus pure-Python inner SE kernel.

Times ``inner_batch`` from both backends on the same batch of links, checks
that they agree, and optionally times a full ``se_dl`` evaluation under each
backend in a fresh interpreter.

Usage::

    python3 benchmarks/bench_kernels.py [--links 200] [--repeat 3] [--end-to-end]
"""

from __future__ import annotations

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from fdmimo import _kernels_py

try:
    from fdmimo import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def link_batch(n: int) -> tuple[np.ndarray, np.ndarray, dict]:
    """Massive-MIMO FD downlink links over the nearest-BS distance range."""
    lam = 4.0 / math.pi * 1e-6
    p_d, users, beta = 1000.0, 8, 4.0
    x = np.logspace(-8, 1.4, n)
    r = np.sqrt(x / (math.pi * lam))
    a = p_d / users * r**-beta
    args = dict(D=53, beta=beta, sigma2=10 ** (-10.0) * 2e7 * 10 ** -17.0, field_lam=lam,
                field_U=users, field_V=p_d / users, cross_c=3.1e-4, si_q=0.1, si_k=1.0,
                si_om=1e-8, rel_tol=1e-8)
    return a, r, args


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def end_to_end(pure: bool) -> float:
    code = ("import time; from fdmimo.config import build_network, DEFAULTS; from fdmimo import se;"
            "cfg = build_network({'n_t': 80, 'n_r': 20, 'users': 8, 'p_d_dbm': 30.0});"
            "t = time.perf_counter(); se.se_dl(cfg); print(time.perf_counter() - t)")
    env = dict(os.environ)
    env.pop("FDMIMO_PURE_PYTHON", None)
    if pure:
        env["FDMIMO_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    return float(out.stdout.strip())


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--links", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)

    a, r, kw = link_batch(args.links)
    t_py = best_of(lambda: _kernels_py.inner_batch(a, r, **kw), args.repeat)
    print(f"python  inner_batch  {args.links} links: {t_py * 1e3:9.1f} ms")
    if _kernels_c is None:
        print("compiled extension not built; skipping comparison")
        return 0
    t_c = best_of(lambda: _kernels_c.inner_batch(a, r, **kw), args.repeat)
    v_py = _kernels_py.inner_batch(a, r, **kw)[0]
    v_c = _kernels_c.inner_batch(a, r, **kw)[0]
    rel = np.max(np.abs(v_c - v_py) / np.maximum(np.abs(v_py), 1e-300))
    print(f"cython  inner_batch  {args.links} links: {t_c * 1e3:9.1f} ms")
    print(f"speedup {t_py / t_c:.1f}x, max relative difference {rel:.2e}")
    if args.end_to_end:
        e_py, e_c = end_to_end(True), end_to_end(False)
        print(f"se_dl end to end: python {e_py:.2f} s, cython {e_c:.2f} s, "
              f"speedup {e_py / e_c:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
