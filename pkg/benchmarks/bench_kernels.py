"""Compare the numba and numpy paths of the full-model kernels.

    python benchmarks/bench_kernels.py [--t-end 5] [--order 6] [--repeat 3]

Runs the covariance propagation and the one-period fundamental matrix at
the fig4a parameters (kappa units) with both backends, checks that they
agree and prints wall times.  The first numba call includes compilation
and is reported separately.
"""
import argparse
import time

import numpy as np

from mechent import full_model as fm
from mechent import presets, rwa
from mechent._accel import HAVE_NUMBA


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--t-end", type=float, default=5.0, help="propagation window in 1/kappa")
    ap.add_argument("--order", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    p = presets.system_params("fig4a", omega1=50.0, omega2=100.0)
    kappa = p.kappa
    t = np.linspace(0.0, args.t_end / kappa, 51)
    prop = {b: (lambda b=b: fm.evolve_full(None, p, t, args.order, "transient", backend=b))
            for b in ("numba", "numpy")}
    q = fm.prepare(p, 1)
    drift = fm.build_periodic_drift(q, fm.mean_field_expansion(q, 1, "steady"))
    floq = {b: (lambda b=b: fm.floquet_from_drift(drift, backend=b)) for b in ("numba", "numpy")}

    rows = []
    for name, fns in (("covariance_series_rk4", prop), ("fundamental_matrix", floq)):
        res = {}
        if HAVE_NUMBA:
            t0 = time.perf_counter()
            fns["numba"]()
            compile_t = time.perf_counter() - t0
            res["numba"] = _time(fns["numba"], args.repeat)
        else:
            compile_t = float("nan")
        res["numpy"] = _time(fns["numpy"], args.repeat)
        if "numba" in res:
            a, b = res["numba"][1], res["numpy"][1]
            if isinstance(a, rwa.EntanglementTrajectory):
                diff = float(np.max(np.abs(a.covariances - b.covariances)) / np.max(np.abs(b.covariances)))
            else:
                diff = float(np.max(np.abs(a.exponents.real - b.exponents.real)) * 1.0)
            rows.append((name, compile_t, res["numba"][0], res["numpy"][0], diff))
        else:
            rows.append((name, compile_t, float("nan"), res["numpy"][0], float("nan")))

    print(f"{'kernel':<24}{'first numba [s]':>16}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, c, tn, tp, d in rows:
        print(f"{name:<24}{c:>16.3f}{tn:>12.4f}{tp:>12.4f}{tp / tn:>10.1f}{d:>12.2e}")


if __name__ == "__main__":
    main()
