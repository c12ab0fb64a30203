"""Compiled kernels against the pure-Python fallback.

Two views:

* per kernel, in one process: the numba dispatcher against its ``.py_func``;
* end to end, in two subprocesses: the same workload with and without
  ``PVTELE_DISABLE_NUMBA=1`` (the switch the package honours at import time).

    python benchmarks/bench_kernels.py [--repeat 5] [--skip-e2e]
"""

import argparse
import os
import subprocess
import sys
import textwrap
import timeit

import numpy as np

from pvtele import _accel, _kernels
from pvtele.hermite import _FACT, hermite_terms

WORKLOAD = textwrap.dedent("""
    import time
    import numpy as np
    t0 = time.perf_counter()
    from pvtele._accel import backend
    from pvtele.gaussian_states import SqueezingParam, tmsv
    from pvtele.pv_ops import GeneralizedPVSpec, PVSpec, response_ratio, tmsv_pv
    from pvtele.fock_oracle import oracle_apply, oracle_cf, oracle_state
    t_import = time.perf_counter() - t0
    r = SqueezingParam.from_db(8)
    xs = np.linspace(0.01, 3, 301)
    t0 = time.perf_counter()
    for n in (1, 2, 3, 4):
        response_ratio(tmsv_pv(r, PVSpec.symmetric(-1, n)), xs)
    response_ratio(tmsv_pv(r, GeneralizedPVSpec(6, np.ones(7))), xs)
    st = oracle_apply(oracle_state("tmsv", 0.7, 80), PVSpec.symmetric(-1, 2))
    oracle_cf(st, np.stack([xs[::10], xs[::10]], 1).astype(complex))
    print(backend(), t_import, time.perf_counter() - t0)
""")


def kernel_cases():
    """``name -> (compiled, args)`` with inputs built the way the package builds them."""
    cases = {}
    cases["displacement_matrix D=120"] = (_kernels.displacement_matrix, (1.5 + 0.5j, 120))

    n = (4, 4, 4, 4)
    empty = np.zeros((0, 4), dtype=np.int64)
    count = _kernels.four_index_terms(*n, False, empty)
    terms = np.zeros((count, 4), dtype=np.int64)
    _kernels.four_index_terms(*n, True, terms)
    cases["four_index_terms (4,4,4,4)"] = (_kernels.four_index_terms, (*n, True, terms.copy()))
    args = (terms, *n, -1.2 + 0j, -1.2 + 0j, 1.3 + 0j, _FACT)
    cases["four_index_coefficients (4,4,4,4)"] = (_kernels.four_index_coefficients, args)
    coef = _kernels.four_index_coefficients(*args)
    xi = np.linspace(0.01, 3, 2000).astype(np.complex128)
    cases["eval_four_index 2000 pts"] = (_kernels.eval_four_index, (coef, 4, 4, xi, np.conj(xi)))

    rng = np.random.default_rng(0)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    M = (A + A.T) / 2
    coefs, Q = hermite_terms(M, (3, 3, 3, 3))
    X = rng.normal(size=(2000, 4)) + 0j
    cases["eval_monomials (3,3,3,3) 2000 pts"] = (_kernels.eval_monomials, (coefs, Q, X))
    return cases


def bench_kernels(repeat):
    print(f"kernel timings, best of {repeat} (backend: {_accel.backend()})")
    print(f"{'kernel':38s} {'compiled':>12s} {'python':>12s} {'speedup':>9s}")
    for name, (fn, args) in kernel_cases().items():
        fn(*args)  # compile outside the timing
        n = 3
        fast = min(timeit.repeat(lambda: fn(*args), number=n, repeat=repeat)) / n
        slow = min(timeit.repeat(lambda: fn.py_func(*args), number=1, repeat=repeat))
        print(f"{name:38s} {fast * 1e3:10.3f}ms {slow * 1e3:10.3f}ms {slow / fast:8.1f}x")


def bench_end_to_end():
    print("\nend to end (fresh interpreter each; includes first-call compilation or cache load)")
    for disable in (False, True):
        env = dict(os.environ)
        env.pop("PVTELE_DISABLE_NUMBA", None)
        if disable:
            env["PVTELE_DISABLE_NUMBA"] = "1"
        out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env, capture_output=True, text=True, check=True)
        name, t_import, t_run = out.stdout.split()
        print(f"  {name:6s} import {float(t_import):6.2f}s  workload {float(t_run):7.2f}s")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args(argv)
    if not _accel.HAS_NUMBA:
        print("numba is disabled or missing: both columns time the same Python code")
    bench_kernels(args.repeat)
    if not args.skip_e2e:
        bench_end_to_end()


if __name__ == "__main__":
    main()
