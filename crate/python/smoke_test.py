"""Smoke test for the capflow Python extension.

Build and install it first, for example with
    pip install maturin && maturin develop -m crates/python/Cargo.toml
or copy target/release/libcapflow_py.so to capflow.so on PYTHONPATH.
"""

import math
import pathlib
import sys

import capflow

ROOT = pathlib.Path(__file__).resolve().parent.parent


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    euclid = capflow.Anisotropy.euclidean()
    assert close(euclid.value([3.0, 4.0]), 5.0, 1e-12)
    assert close(euclid.isoperimetric_constant(), 2 * math.sqrt(math.pi), 1e-3)
    assert close(euclid.winterbottom_constant(0.0), math.sqrt(2 * math.pi), 1e-3)
    assert close(euclid.certify_ellipticity()["gamma"], 1.0, 1e-6)
    assert not capflow.Anisotropy.smoothed_l1(0.0).certify_ellipticity()["elliptic"]

    grid = capflow.Grid(1.0, 1.0, 1 / 32)
    e0 = capflow.BinarySet.half_disk(grid, 0.0, 0.6)
    scheme = capflow.Scheme(grid, euclid)
    e1 = capflow.step(e0, 0.02, scheme)
    assert e1.is_subset_of(e0), "an unforced step of a half-disk must not grow"
    assert capflow.step(e0, 0.02, scheme, select="minimal").is_subset_of(
        capflow.step(e0, 0.02, scheme, select="maximal")
    )

    flow = capflow.flat_flow(e0, 0.02, 0.1, scheme)
    volumes = flow.volumes()
    assert flow.steps == 5 and len(volumes) == 6
    assert all(b <= a + 1e-12 for a, b in zip(volumes, volumes[1:]))

    samples = capflow.front_half_circle(euclid, 1.0, 0.2, sample_dt=0.1)
    for t, area, _ in samples:
        assert close(math.sqrt(2 * area / math.pi), math.sqrt(1 - 2 * t), 1e-2)

    try:
        capflow.Scheme(grid, euclid, beta=1.0)
    except capflow.CapflowError as e:
        assert "admissibility" in str(e)
    else:
        raise AssertionError("β = Φ(e_n) must be rejected")

    config = ROOT / "crates" / "core" / "configs" / "winterbottom.cfg"
    reports = capflow.verify(str(config), ["coercivity"])
    assert all(r["status"] != "fail" for r in reports), reports

    print(f"capflow smoke test passed ({flow.steps} steps, final volume {volumes[-1]:.4f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
