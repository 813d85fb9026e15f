"""Smoke test for the Python bindings.

Build first with `cargo build -p madd-py --release` (or `maturin develop -m
crates/python/Cargo.toml`), then run `python3 python/smoke_test.py`.
"""

import importlib
import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def import_madd():
    try:
        return importlib.import_module("madd")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libmadd.so"
        if lib.exists():
            tmp = pathlib.Path(tempfile.mkdtemp())
            shutil.copy(lib, tmp / "madd.so")
            sys.path.insert(0, str(tmp))
            return importlib.import_module("madd")
    sys.exit("madd extension not found; run `cargo build -p madd-py --release`")


def main():
    madd = import_madd()

    params = json.loads(madd.default_params())
    assert params["theta"] == 0.5 and params["total_steps"] == 72, params

    scenario = madd.synth_scenario("demo", 7)
    digest = madd.validate(scenario)
    assert len(digest) == 64

    control = json.loads(madd.run(scenario))
    early = json.loads(madd.run(scenario, "early", "fact"))
    again = json.loads(madd.run(scenario, "early", "fact"))
    assert control["complete"] and early["complete"]
    assert early == again, "runs with the same seed must match"
    final = early["overall"][-1]
    total = final["sr"] + final["er"]
    assert abs(total - 1.0) < 1e-9, final

    try:
        madd.run(scenario, "early")
    except ValueError:
        pass
    else:
        raise AssertionError("missing strategy must raise ValueError")

    print(f"ok: control IR {control['overall'][-1]['ir']:.4f}, early IR {final['ir']:.4f}")


if __name__ == "__main__":
    main()
