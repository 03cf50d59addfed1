#!/usr/bin/env python3
"""Smoke test for the roydennet_py extension module.

Builds nothing itself: compile the module first with

    cargo build -p roydennet-py

then run

    python3 python/smoke_test.py

The script copies the compiled library next to a temp directory under the
importable name and checks a handful of exact, hand-verifiable values.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "debug" / "libroydennet_py.so",
        REPO / "target" / "release" / "libroydennet_py.so",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("module not built; run: cargo build -p roydennet-py")
    staging = Path(tempfile.mkdtemp(prefix="roydennet-py-"))
    shutil.copy2(built, staging / "roydennet_py.so")
    sys.path.insert(0, str(staging))
    import roydennet_py

    return roydennet_py


def main():
    rn = load_module()

    # Fixture generators report the documented sizes.
    s = rn.Space.path(64)
    assert s.vertex_count == 64 and s.edge_count == 63
    assert s.kind == "combinatorial-graph"
    assert s.total_volume == 64.0
    assert len(s) == 64
    assert s.distance(0, 63) == 63.0
    assert s.ball_volume(5, 2.0) == 5.0  # closed ball {3,4,5,6,7}

    tree = rn.Space.regular_tree(3, 4)
    assert tree.vertex_count == 46

    # The text format round-trips.
    again = rn.Space.parse(s.to_text())
    assert again.vertex_count == 64 and again.edge_count == 63

    # Net extraction keeps every other path vertex and audits clean.
    net = rn.extract_net(s, 2.0)
    assert net.points() == list(range(0, 64, 2))
    assert net.kappa == 2.0 and net.threshold == 6.0
    audit = net.audit()
    assert audit["separation_ok"] and audit["maximality_ok"]
    assert audit["covering_radius"] <= 2.0
    assert net.bounded_geometry(2.0) == 3
    cert = net.distortion_certificate()
    assert cert["c"] <= 2.0

    # Constants survive both transfer directions exactly.
    ones = {g: 1.0 for g in net.points()}
    smoothed = rn.smooth(net, ones)
    assert len(smoothed) == 64
    assert all(abs(v - 1.0) <= 1e-12 for v in smoothed.values())
    back = rn.discretize(net, smoothed)
    assert all(abs(v - 1.0) <= 1e-12 for v in back.values())

    # The ramp is the exact 2-harmonic extension of its endpoints, with
    # energy 2 * 63 * (1/63)^2 under the doubled-edge convention.
    sol = rn.solve(s, 2.0, {0: 0.0, 63: 1.0}, tol=1e-10)
    assert sol["final_residual"] <= 1e-10
    for i, v in sol["values"].items():
        assert abs(v - i / 63.0) < 1e-7
    ramp = {i: i / 63.0 for i in range(64)}
    e = rn.energy(s, 2.0, ramp)
    assert math.isclose(e, 2.0 / 63.0, rel_tol=0, abs_tol=1e-15)

    # Exponents at or below 1 are rejected.
    try:
        rn.solve(s, 1.0, {0: 0.0, 63: 1.0})
    except ValueError as exc:
        assert "p must exceed 1" in str(exc)
    else:
        raise AssertionError("p = 1 must be rejected")

    # Decomposition of an already-harmonic field leaves nothing in the
    # potential part on the interior of the largest ball.
    split = rn.decompose(s, 2.0, ramp, base=0, radii=[8.0, 16.0], tol=1e-12)
    assert [st["radius"] for st in split["stages"]] == [8.0, 16.0]
    assert split["stages"][0]["sup_h_change"] is None
    assert split["stages"][1]["sup_h_change"] is not None

    # A single check and the whole suite both pass on the path fixture.
    rep = rn.verify("partition", s, kappa=2.0)
    assert rep["pass"] and rep["measured"] <= 1e-12
    suite = rn.verify("all", s, kappa=2.0, p=2.0, seed=7)
    assert suite["pass"]
    assert [c["check"] for c in suite["checks"]] == [
        "partition",
        "smoothing-energy",
        "discretization-energy",
        "poincare",
        "ray-discretization",
        "ray-smoothing",
        "roundtrip",
    ]

    print("smoke test passed")


if __name__ == "__main__":
    main()
