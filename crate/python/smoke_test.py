#!/usr/bin/env python3
"""Smoke test for the varlex_py extension module.

Builds nothing itself: expects `cargo build -p varlex-py` (or --release) to
have produced the cdylib, copies it next to a temp dir under the importable
name, and exercises the main surface.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def locate_cdylib() -> Path:
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libvarlex_py.so", "libvarlex_py.dylib", "varlex_py.dll")
    ]
    for c in candidates:
        if c.exists():
            return c
    sys.exit("varlex_py cdylib not found; run `cargo build -p varlex-py` first")


def main() -> None:
    lib = locate_cdylib()
    staging = Path(tempfile.mkdtemp(prefix="varlex_py_"))
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    shutil.copy2(lib, staging / f"varlex_py{suffix}")
    sys.path.insert(0, str(staging))

    import varlex_py as vx

    checks = 0

    def check(name: str, cond: bool) -> None:
        nonlocal checks
        checks += 1
        status = "ok" if cond else "FAIL"
        print(f"[{checks:2d}] {name}: {status}")
        if not cond:
            sys.exit(1)

    log = vx.Exponent.parse("log")
    check("log exponent at 1/e is 2", abs(log.eval(1 / math.e) - 2.0) < 1e-12)
    check("dual exponent at 1/e is 2", abs(log.dual().eval(1 / math.e) - 2.0) < 1e-9)

    p2 = vx.Exponent.constant(2.0)
    chi = vx.Func.indicator(0.0, 0.25)
    n = vx.luxemburg_norm(chi, p2)
    check("||chi_(0,1/4)||_2 = 0.5", abs(n["value"] - 0.5) < 1e-6)

    one = vx.Func.constant(1.0)
    check("theta(1) under log = 1/e", abs(vx.theta(one, log) - 1 / math.e) < 1e-4)

    r = vx.modular(vx.Func.constant(math.e), log)
    check("modular of e under log diverges", r["status"] == "divergent")

    trace = vx.distance_trace(one, log, schedule=[2, 4, 8, 16, 32, 64, 128, 256])
    check(
        "distance trace approaches theta",
        abs(trace["limit_estimate"] - trace["theta"]) < 0.02,
    )

    kz = log.kozv_criterion(20)
    check("kozv verdict true for log family", kz["verdict"] is True)
    kz = p2.kozv_criterion(20)
    check("kozv verdict false for constant exponent", kz["verdict"] is False)

    sp = vx.Exponent.spiked(6, 4.0, 2.0)
    check(
        "theta(1) under spiked = 2^(-1/4)",
        abs(vx.theta(one, sp) - 2 ** (-0.25)) < 1e-4,
    )

    omega = sp.level_set(8)
    measure = sum(hi - lo for lo, hi in omega)
    check("spiked level set has positive measure", 0.0 < measure < 1.0)

    rep = vx.closedness(sp, grid_depth=6, sample_count=8, seed=42)
    check("spiked exponent closes C[0,1]", rep["verdict"] == "closed")
    check("c2 respects the lattice bound", rep["c2_est"] <= 1.0 + 1e-6)

    hc = vx.holder_check(one, one, p2)
    check("holder ratio at most 1", hc["ratio"] <= 1.0)

    rows = vx.run_experiment(
        """
seed = 7
exponent = "constant(2)"

[[ops]]
kind = "norm"
func = "indicator(0, 0.25)"
expect_value = 0.5
"""
    )
    check("experiment runner row passes", rows[0][3] == "pass")

    print(f"all {checks} smoke checks passed")


if __name__ == "__main__":
    main()
