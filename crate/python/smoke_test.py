"""Smoke test for the pyinterlace extension.

Build and install with `pip install --no-build-isolation -e crates/py`, then
run `python3 python/smoke_test.py`.
"""

import json
import math

import pyinterlace as pi


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL: {msg}")
    print(f"ok: {msg}")


g = pi.green_origin(3)
check(1.51637 <= g <= 1.51640, f"green_origin(3) = {g:.6f}")

toy = pi.AffineToy(0.5, 0.3, 1.0, 3.0)
res = pi.solve(toy, 0.5, 0.42)
check(abs(res.lambda_ - 0.05) < 1e-6, f"affine multiplier {res.lambda_:.8f}")
check(abs(res.sup_norm - 0.15) < 1e-5, f"affine sup norm {res.sup_norm:.8f}")
check(res.regime == "small-excess" and not res.failures(), "affine properties pass")
expected = 0.3 + 0.8 * (math.sqrt(3.0) - math.sqrt(0.5))
check(abs(toy.threshold() - expected) < 1e-6, f"threshold {toy.threshold():.6f}")

prof = pi.SmoothedTheta.linear(0.5, 0.5, 0.9, 3.0)
check(prof.checks_pass(), "smoothed profile invariants")
check(abs(prof.theta(0.9) - 1.0) < 1e-12, "theta(u1) = 1")
back = pi.SmoothedTheta.from_json(prof.to_json())
check(back.hash == prof.hash and back.theta(0.7) == prof.theta(0.7), "profile JSON round trip")

base = prof.theta(0.2)
js = [pi.solve(prof, 0.2, base + s).energy for s in (0.002, 0.004, 0.008)]
check(all(b > a > 0 for a, b in zip(js, js[1:])), "energy increases with the target")
check(json.loads(res.to_json())["regime"] == "small-excess", "result JSON")

curve = pi.theta_curve([0.0, 0.5, 1.0], 4, 8, 300, 7)
est = curve["estimates"]
check(all(b >= a for a, b in zip(est, est[1:])), f"coupled theta curve monotone {est}")
check(curve == pi.theta_curve([0.0, 0.5, 1.0], 4, 8, 300, 7), "theta curve reproducible")
print("all smoke checks passed")
