"""Smoke test for the pycdmd extension module.

Build and run from the repository root:

    cargo build --release -p centered-dmd-py --features extension-module
    cp target/release/libpycdmd.so python/pycdmd.so
    python3 python/smoke_test.py
"""

import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pycdmd  # noqa: E402


def close(a, b, tol=1e-9):
    return abs(a - b) < tol


def affine_data():
    x = [4.0, -3.0]
    cols = []
    for _ in range(8):
        cols.append(list(x))
        x = [0.5 * x[0] + 1.0, 0.8 * x[1] + 2.0]
    return [[c[i] for c in cols] for i in range(2)]


def main():
    data = affine_data()

    cen = pycdmd.centered_dmd(data)
    eig = sorted(cen.eigenvalues, key=lambda z: z.real)
    assert close(eig[0], 0.5) and close(eig[1], 0.8), eig
    assert close(cen.fixed_point[0], 2.0, 1e-8) and close(cen.fixed_point[1], 10.0, 1e-8)
    rec = cen.reconstruct([row[0] for row in data], len(data[0]))
    assert max(abs(a - b) for ra, rb in zip(rec, data) for a, b in zip(ra, rb)) < 1e-8

    sub = pycdmd.frequency_subtracted_dmd(data, [1 + 0j])
    assert sub.fixed_lambdas == [1 + 0j]
    d = pycdmd.spectral_distance(sub.eigenvalues, cen.eigenvalues)
    assert d < 1e-9, d

    a, b = pycdmd.affine_dmd_direct(data)
    assert close(a[0][0], 0.5) and close(a[1][1], 0.8) and close(b[0], 1.0) and close(b[1], 2.0)

    coeffs, roots, _ = pycdmd.companion_dmd([[1.0, 2.0, 4.0]])
    assert close(coeffs[0], 0.8) and close(coeffs[1], 1.6), coeffs
    assert all(min(abs(z - t) for t in (-0.4, 2.0)) < 1e-12 for z in roots), roots

    system = pycdmd.LinearSystem(10, 6, placement="unit_annulus", seed=1)
    x = system.simulate(15, seed=1)
    model = pycdmd.exact_dmd(x)
    assert model.rank_used == 6
    pairs, total = pycdmd.optimal_matching(model.eigenvalues, system.eigenvalues)
    assert sorted(pairs) == list(range(6)) and total < 1e-8, total

    try:
        pycdmd.exact_dmd([[1.0, 2.0], [3.0]])
    except ValueError:
        pass
    else:
        raise AssertionError("ragged input was accepted")

    assert "fig7_video" in pycdmd.experiments()
    with tempfile.TemporaryDirectory() as out:
        summary = pycdmd.run_experiment("custom", out, seed=2, overrides={"n": 8, "r": 4})
        assert summary["passed"], json.dumps(summary["assertions"])
        assert os.path.exists(os.path.join(out, "summary.json"))

    print(f"pycdmd {pycdmd.__version__}: all smoke checks passed")


if __name__ == "__main__":
    main()
