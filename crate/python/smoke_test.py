#!/usr/bin/env python3
"""Smoke test for the bmlab Python extension.

Builds nothing itself: run `cargo build --release -p bmlab-py` first. The
script locates the cdylib under target/, stages it as an importable module,
and exercises the main types and operations end to end.
"""

import math
import os
import shutil
import sys
import tempfile


def stage_module() -> str:
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates = [
        os.path.join(root, "target", profile, name)
        for profile in ("release", "debug")
        for name in ("libbmlab.so", "libbmlab.dylib", "bmlab.dll")
    ]
    built = next((p for p in candidates if os.path.exists(p)), None)
    if built is None:
        sys.exit("build the extension first: cargo build --release -p bmlab-py")
    stage = tempfile.mkdtemp(prefix="bmlab-py-")
    suffix = ".pyd" if built.endswith(".dll") else ".so"
    shutil.copy2(built, os.path.join(stage, "bmlab" + suffix))
    return stage


sys.path.insert(0, stage_module())
import bmlab  # noqa: E402

checks = 0


def check(cond, msg):
    global checks
    assert cond, msg
    checks += 1


# Means: the zero convention and the closed forms.
check(abs(bmlab.p_mean(4.0, 9.0, "1/2", "0") - 6.0) < 1e-12, "geometric mean")
check(bmlab.p_mean(0.0, 7.0, "2/5", "1/2") == 0.0, "ab = 0 convention")
check(abs(bmlab.raw_power_combination(0.0, 8.0, "1/2", "1") - 4.0) < 1e-12, "raw combination")

# Exact lattice sets.
lattice = bmlab.Lattice(2, "1/8")
box = '{"kind":"box","min":["0","0"],"max":["1","1"]}'
a = bmlab.GridSet.build(box, lattice)
check(len(a) == 64, "box tiling")
check(a.combine(a, "1/2").point_set_eq(a), "convexity: (A+A)/2 = A")

check(a.translate(["3/2", "0"]).pitch() == "1/8", "aligned translate keeps the pitch")
check(a.translate(["1/3", "0"]).pitch() == "1/24", "translate refines to the common pitch")

hull = bmlab.GridSet.from_cells(lattice, [[2, 3]]).wu_hull()
check(len(hull) == 4 and hull.is_weakly_unconditional(), "weakly unconditional hull")

# Measure brackets against the error-function oracle.
gauss = bmlab.Density.gaussian(1.0, 2)
sym = bmlab.GridSet.build('{"kind":"box","min":["-1","-1"],"max":["1","1"]}', lattice)
m = bmlab.measure(sym, gauss, refine=2)
oracle = bmlab.gaussian_box_oracle([(-1.0, 1.0), (-1.0, 1.0)], 1.0)
check(m.lower <= oracle <= m.upper, "bracket contains erf oracle")
check(m.rigorous, "gaussian brackets are rigorous")
check(abs(oracle - math.erf(1 / math.sqrt(2)) ** 2) < 1e-12, "oracle closed form")

# Certified verdicts. Exact Lebesgue equality case first: the margin is
# exactly zero, which still certifies.
leb = bmlab.Density.lebesgue(2)
v = bmlab.check_bm(a, a, "1/2", "1/2", leb)
check(v.status == "certified_holds" and abs(v.hold_margin) < 1e-9, "Lebesgue equality case")

# Gaussian suite on a weakly unconditional hull (C strictly grows, so the
# verdict certifies despite bracket slack).
hulled = bmlab.GridSet.build(
    '{"kind":"wu_hull","of":{"kind":"ball","center":["2","2"],"radius":"1","mode":"outer"}}',
    lattice,
)
v = bmlab.check_theorem_a(hulled, hulled, "1/2", gauss, measure_refine=2)
check(v.status == "certified_holds" and v.gates_passed, "theorem suite on a wu hull")

line = bmlab.Lattice(1, "1/64")
xsq = bmlab.Density.from_json('{"kind":"product","factors":[{"kind":"power","alpha":2.0}]}')
a1 = bmlab.GridSet.build('{"kind":"box","min":["0"],"max":["1"]}', line)
b1 = bmlab.GridSet.build('{"kind":"box","min":["0"],"max":["2"]}', line)
v = bmlab.check_bm(a1, b1, "1/2", "1", xsq, general=False, measure_refine=1)
check(v.status == "certified_violation", "x^2 density violates the linear inequality")
check(v.violation_margin > 0.3, "margin near the 0.375 oracle")

# Shifted Gaussian balls violate the dimensional inequality.
ball = '{"kind":"ball","center":["0","0"],"radius":"1","mode":"outer"}'
disk = bmlab.GridSet.build(ball, lattice)
far = disk.translate(["6", "0"])
v = bmlab.check_bm(disk, far, "1/2", "1/2", gauss, general=False, measure_refine=2)
check(v.status == "certified_violation", "shifted balls violate")

# A scripted reproduction end to end.
reproduced, report = bmlab.run_repro("x-squared-1d", {"pitch": "1/32"})
check(reproduced and "certified_violation" in report, "repro runs from python")

check("gauss-shifted-balls" in bmlab.REPRO_NAMES, "repro registry exposed")

print(f"bmlab python smoke test: {checks} checks passed")
