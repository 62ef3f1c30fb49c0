#!/usr/bin/env python3
"""Smoke test for the carnot_py extension module.

Builds the crate (unless --no-build), copies the cdylib next to this script
as carnot_py.so, imports it, and exercises the main types and operations
against known values.
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_and_import(no_build: bool):
    if not no_build:
        subprocess.run(
            ["cargo", "build", "-p", "carnot-py", "--release"],
            cwd=REPO,
            check=True,
        )
    lib = REPO / "target" / "release" / "libcarnot_py.so"
    if not lib.exists():
        sys.exit(f"missing {lib}; run `cargo build -p carnot-py --release` first")
    stage = Path(tempfile.mkdtemp(prefix="carnot-py-"))
    shutil.copy(lib, stage / "carnot_py.so")
    sys.path.insert(0, str(stage))
    import carnot_py

    return carnot_py


def approx(a, b, tol=1e-12):
    assert abs(a - b) <= tol * (1.0 + abs(b)), f"{a} != {b}"


def main():
    no_build = "--no-build" in sys.argv
    m = build_and_import(no_build)

    # Group arithmetic on the Heisenberg group.
    h1 = m.Group.heisenberg(1)
    assert h1.name == "heisenberg:1"
    assert (h1.dim, h1.horizontal_dim, h1.step) == (3, 2, 2)
    assert h1.multiply([1, 0, 0], [0, 1, 0]) == [1.0, 1.0, 0.5]
    assert h1.inverse([1, 1, 0.5]) == [-1.0, -1.0, -0.5]
    assert h1.dilate(2.0, [1, 1, 1]) == [2.0, 2.0, 4.0]
    approx(h1.gauge_norm([1, 0, 0]), 1.0)
    approx(h1.gauge_norm(h1.dilate(3.0, [1, 0, 1])), 3.0 * 2.0 ** 0.25)
    approx(h1.distance([0.3, -0.2, 0.4], [0.3, -0.2, 0.4]), 0.0)
    approx(m.euclidean_norm([3, 4, 0]), 5.0)

    # Coefficient matrix rows (1, 0, -y/2), (0, 1, x/2).
    a = h1.coefficient_matrix([0.6, -0.8, 0.1])
    approx(a[0][2], 0.4)
    approx(a[1][2], 0.3)

    # Horizontal jet of x1^2 at (1, 2, 3): gradient (2, 0), hessian [[2,0],[0,0]].
    value, grad, hess = h1.horizontal_jet("x1^2", [1, 2, 3])
    approx(value, 1.0)
    approx(grad[0], 2.0)
    approx(grad[1], 0.0)
    approx(hess[0][0], 2.0)
    approx(hess[1][1], 0.0)

    # Custom group from JSON round-trips.
    custom = m.Group.from_json(h1.to_json())
    assert custom.multiply([1, 0, 0], [0, 1, 0]) == [1.0, 1.0, 0.5]

    # Expression utilities.
    assert m.parse_expr("x1^2+exp(x3)") == "x1^2 + exp(x3)"
    approx(m.eval_expr("x1^2 - x3", [2.0, 0.0, 1.0]), 3.0)
    assert m.diff_expr("exp(2*x1)", 1) == "2*exp(2*x1)"

    # Group-law check report.
    rep = json.loads(h1.group_check(500, 7))
    assert rep["pass"] and all(c["max_error"] < 1e-9 for c in rep["checks"])

    # Sup-convolution sweep: gaps shrink with epsilon.
    conv = json.loads(
        m.convolve(
            json.dumps(
                {
                    "group": "euclidean:1",
                    "domain": {"intervals": [[-1.0, 1.0]], "nodes": [101]},
                    "u": "abs(x1)",
                    "epsilons": [0.1, 0.05, 0.025],
                }
            )
        )
    )
    gaps = [row["sup_gap"] for row in conv["rows"]]
    assert gaps == sorted(gaps, reverse=True)
    assert all(row["monotone_vs_previous"] for row in conv["rows"])

    # Strict-supersolution perturbation.
    pert = json.loads(
        m.perturb(
            json.dumps(
                {
                    "group": "heisenberg:1",
                    "domain": {
                        "intervals": [[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]],
                        "nodes": [7, 7, 7],
                    },
                    "operator": {"op": "trace_minus_u", "c": 1.0},
                    "v": "0",
                    "delta": 0.1,
                }
            )
        )
    )
    assert pert["c_delta"] > 0 and pert["bounds_hold"]

    # Structure check flags the non-monotone operator.
    struct = json.loads(
        m.structure_check(
            json.dumps(
                {
                    "group": "euclidean:2",
                    "domain": {"intervals": [[-1, 1], [-1, 1]], "nodes": [5, 5]},
                    "operator": {
                        "op": "expr",
                        "m": 2,
                        "expr": "0 - x4 - x7",
                        "declare": {"degenerate_subelliptic": True},
                    },
                    "samples": 100,
                    "seed": 3,
                }
            )
        )
    )
    assert not struct["declared_hold"]

    # Comparison pipeline: one HOLDS run, one violation.
    base = {
        "group": "euclidean:2",
        "domain": {"intervals": [[-1, 1], [-1, 1]], "nodes": [21, 21]},
        "operator": {"op": "trace_minus_u", "c": 1.0},
        "v": "0",
        "tol": 1e-6,
        "seed": 7,
    }
    holds = json.loads(m.compare(json.dumps({**base, "u": "-0.5*(1 - x1^2 - x2^2)"})))
    assert holds["verdict"] == "HOLDS", holds
    violated = json.loads(m.compare(json.dumps({**base, "u": "0.5*(1 - x1^2 - x2^2)"})))
    assert violated["verdict"] == "HYPOTHESIS_VIOLATION", violated
    assert violated["failing_step"] == "subsolution_check"

    # Dilation homogeneity sanity sweep from Python.
    e2 = m.Group.euclidean(2)
    d = e2.distance([0.0, 0.0], [3.0, 4.0])
    approx(d, 5.0)
    for lam in (0.5, 2.0, 10.0):
        approx(
            e2.distance(e2.dilate(lam, [0.0, 0.0]), e2.dilate(lam, [3.0, 4.0])),
            lam * d,
            tol=1e-12,
        )
    assert math.isclose(e2.gauge_norm([1.0, 0.0]), 1.0)

    print("carnot_py smoke test: OK")


if __name__ == "__main__":
    main()
