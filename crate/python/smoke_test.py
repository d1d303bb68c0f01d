"""Smoke test for the dcslab_py extension.

Build and run from the repository root:

    cargo build --release -p dcslab-py --features extension-module
    cp target/release/libdcslab_py.so python/dcslab_py.so
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import dcslab_py as d


def main():
    path = d.sample_path(10, 7)
    assert len(path) == 2**10 + 1 and path[0] == 0.0
    assert path == d.sample_path(10, 7)

    xs = d.enumerate_minimizers(12, 3, 8)
    assert sorted(xs[:4]) == sorted(d.level_argmins(12, 3, 2))

    t, m = d.continuum_argmin(12, 5)
    assert 0.0 < t < 1.0 and m <= 0.0

    const, defect = d.phi_normalization(1.0, 1.0)
    assert defect < 1e-4 and const > 0
    assert d.phi(1.0, 1.0, 0.5) > 0
    try:
        d.phi_normalization(-1.0, 1.0)
        raise AssertionError("negative a accepted")
    except ValueError:
        pass

    tr = d.run_coupling("iid-uniform", height=10.0, seed=2)
    assert len(tr) == len(tr.times) and all(0 < y < 1 for y in tr.locations)
    assert json.loads(tr.to_json())["H"] == 10.0
    assert len(tr.consumed_below(5.0)) <= len(tr)

    mm, cover, u, v = d.max_mass_min_cover(["1/2", "1/2"], ["1/3", "2/3"], [([0], [1]), ([1], [0])])
    assert mm == cover == "5/6", (mm, cover)

    residual, sweeps, shifts = d.rational_demo(64, 50)
    assert residual < 1e-3 and shifts > 0

    stat, p = d.ks_test([(i + 0.5) / 100 for i in range(100)], "uniform")
    assert stat < 0.01 and p > 0.99

    ok, files = d.run_suite("rational", {"grid_l": "32"})
    assert ok and "summary.json" in files
    summary = json.loads(files["summary.json"])
    assert summary["command"] == "rational" and summary["version"] == d.__version__

    print("dcslab_py smoke test ok (version %s, rational residual %.3g)" % (d.__version__, residual))


if __name__ == "__main__":
    main()
