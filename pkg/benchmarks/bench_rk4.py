"""Compare the compiled and pure-numpy paths of the prolonged-system
RK4 kernels.

Each path runs in its own subprocess so the environment flag
``KOOPMANPF_NO_NUMBA`` is honored at import time. Usage::

    python3 benchmarks/bench_rk4.py [--points 2000] [--samples 100]
"""

import argparse
import json
import os
import subprocess
import sys
import textwrap

WORKER = textwrap.dedent(
    """
    import json, sys, time
    import numpy as np
    from koopmanpf import _accel

    points, samples = json.loads(sys.argv[1])
    rng = np.random.default_rng(0)
    states = rng.uniform(-2.0, 2.0, size=(points, 2))
    xi = np.array([1e-6, 0.0])

    # warm-up triggers compilation on the numba path
    _accel.rk4_lc_prolonged(np.array([1.0, 0.0, 1e-6, 0.0]), 0.1, samples, 10)

    t0 = time.perf_counter()
    acc = 0.0
    for x0 in states:
        y0 = np.concatenate([x0, xi])
        out = _accel.rk4_lc_prolonged(y0, 0.1, samples, 10)
        acc += out[-1, 0]
    elapsed = time.perf_counter() - t0
    print(json.dumps({"numba": _accel.USE_NUMBA, "seconds": elapsed,
                      "checksum": acc}))
    """
)


def run(points, samples, no_numba):
    env = dict(os.environ)
    if no_numba:
        env["KOOPMANPF_NO_NUMBA"] = "1"
    else:
        env.pop("KOOPMANPF_NO_NUMBA", None)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps([points, samples])],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=2000)
    parser.add_argument("--samples", type=int, default=100)
    args = parser.parse_args()

    fast = run(args.points, args.samples, no_numba=False)
    slow = run(args.points, args.samples, no_numba=True)
    if abs(fast["checksum"] - slow["checksum"]) > 1e-9 * (1 + abs(slow["checksum"])):
        raise SystemExit("paths disagree: checksum mismatch")

    label_fast = "compiled" if fast["numba"] else "pure-numpy (numba unavailable)"
    print(f"{args.points} limit-cycle points, {args.samples} samples each, 10 substeps")
    print(f"  {label_fast:12s}: {fast['seconds']:.3f} s")
    print(f"  pure-numpy  : {slow['seconds']:.3f} s")
    if fast["numba"]:
        print(f"  speedup     : {slow['seconds'] / fast['seconds']:.1f}x")


if __name__ == "__main__":
    main()
