"""Smoke test of the gmc extension module.

Build it first:
    cargo build -p gmc-py --release --features extension-module
    cp target/release/libgmc.so python/gmc.so
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import gmc  # noqa: E402


def main():
    c = gmc.classify_umbilic(1.0, 2.0, 1.0, 0.0)
    assert c["gmc_type"] == "G1" and c["delta_G"] == 81.0, c

    p = gmc.classify_parabolic(1.0, 0.0, 0.0, 0.0, 1.0, big_a=4.0)
    assert p["class"] == "folded_saddle" and p["sigma"] == 1.0, p

    t = gmc.torus_rho(0.5)
    assert abs(t["normalization"] - 2 * math.pi) < 1e-8, t

    e = gmc.ellipsoid(3.0, 2.0, 1.0)
    assert abs(e["rho"] - e["S2"] / e["S1"]) < 1e-12, e

    chart = gmc.Chart.ellipsoid(3.0, 2.0, 1.0, "geographic").oriented(0.3, 0.4)
    g = chart.geometry(0.3, 0.4)
    k = g["curvature"]
    tau = g["directions"]["minimal"]["tau_g"]
    sk = math.sqrt(k["K"])
    assert abs(tau * tau - 2 * sk * (k["H"] - sk)) < 1e-12, g

    line = gmc.trace(chart, 0.3, 0.4, "minimal", max_length=0.5)
    assert abs(line.length - 0.5) < 1e-12 and line.stop == "max_length"
    assert line.to_csv().startswith("s,u,v,x,y,z,tau_g,k_g,K,H")
    rep = gmc.transition(chart, line)
    assert rep["agreement"] < 1e-6, rep

    torus = gmc.Chart.from_json(json.dumps({"kind": "torus", "r": 1, "R": 3}))
    assert len(torus.position(0.0, 0.0)) == 3

    try:
        gmc.trace(chart, 0.3, 0.4, "sideways")
    except ValueError:
        pass
    else:
        raise AssertionError("bad branch accepted")

    print("smoke test passed:", c["gmc_type"], p["class"], f"rho(0.5)={t['rho_numeric']:.6f}",
          f"ellipsoid rho={e['rho']:.6f}", f"transition ln D={rep['ln_derivative_integral']:.6e}")


if __name__ == "__main__":
    main()
