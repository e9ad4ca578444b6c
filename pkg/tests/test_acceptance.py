"""Acceptance suite: one check per criterion, one PASS/FAIL line each.

Run with pytest (the lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.  Tolerances are pinned below.
"""

import math
import os
import sys
import tempfile

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))
from conftest import ACCEPTANCE_LINES, ensemble, quadrature  # noqa: E402

from wigner_opo import cli  # noqa: E402
from wigner_opo.linearized import DomainError, gaussian_logweight, variances, variances_above, variances_below  # noqa: E402
from wigner_opo.model import OpoParams, to_epr  # noqa: E402
from wigner_opo.moments import BASE_KEYS, EPR_KEYS, duan_simon, quadrature_moments  # noqa: E402
from wigner_opo.steady_state import conditional_slice, count_peaks, default_grid, log_weight, marginal, normalize  # noqa: E402

G2 = 0.01
EPS = np.finfo(float).eps

# pinned tolerances
EXACT_ULPS = 4                    # machine precision for closed forms
GAUSS_TOL = 1e-10                 # |log_weight - quadratic form|
VACUUM_TOL = 1e-3                 # second moments at zero pump
VACUUM_S_TOL = 2e-3
BELOW_REL = 0.05                  # 5% of the linearized values
DEV_RATIO = (3.0, 5.0)            # "shrinks about 4x"
THRESHOLD_SWEEP = (0.9, 0.95, 1.0, 1.05, 1.1)
FLOOR_BAND = (0.5, 0.75)
PEAK_REL = 0.05                   # peak location relative to x* = 10
SIGMA = 3.0
BIAS = 0.02                       # full vs reduced allowance
CURL_TOL = cli.CURL_TOL           # 1e-6 with h = 1e-5 at 100 points
RESIDUAL_RATIO = cli.SCALING_BAND  # "shrinks about 16x"
NORM_TOL = 1e-6                   # 96 -> 192 nodes per axis

KEYS = BASE_KEYS + EPR_KEYS + ("S",)
CRITERIA = {}


def criterion(number, title):
    def register(fn):
        CRITERIA[number] = (title, fn)
        return fn
    return register


def _close(a, b):
    return abs(a - b) <= EXACT_ULPS * EPS * max(abs(a), abs(b))


@criterion(1, "linearized baselines exact")
def c01():
    below = variances_below(0.5)
    above = variances_above(1.5, G2)
    ok = all(map(_close, below, (2, 2 / 3, 2 / 3, 2))) and all(map(_close, above, (52, 0.5, 0.5, 52)))
    return ok, f"below(0.5)={below}, above(1.5)={above}"


@criterion(2, "Gaussian-limit identity")
def c02():
    rng = np.random.default_rng(2024)
    pts = rng.uniform(-5, 5, (1000, 4))
    mus = rng.uniform(0, 2, 1000)
    worst = max(abs(float(log_weight(p, OpoParams(mu, 0.0))) - float(gaussian_logweight(to_epr(p), mu)))
                for p, mu in zip(pts, mus))
    return worst < GAUSS_TOL, f"max |delta| = {worst:.3e} over 1000 points (tol {GAUSS_TOL:g})"


@criterion(3, "vacuum moments")
def c03():
    m = quadrature(0.0, G2)
    pure = [m.value(k) for k in ("x1sq", "y1sq", "x2sq", "y2sq")]
    cross = [m.value(k) for k in ("x1x2", "y1y2")]
    s = duan_simon(m).value
    ok = (all(abs(v - 1) < VACUUM_TOL for v in pure) and all(abs(v) < VACUUM_TOL for v in cross)
          and abs(s - 2) < VACUUM_S_TOL)
    return ok, (f"<x1^2>={pure[0]:.6f} <y1^2>={pure[1]:.6f} (tol {VACUUM_TOL:g}), "
                f"S={s:.6f} (tol {VACUUM_S_TOL:g})")


@criterion(4, "below-threshold agreement and O(g^2) deviation")
def c04():
    m = quadrature(0.5, G2)
    m4 = quadrature(0.5, G2 / 4)
    d_p, d_m = m.exp_xpsq - 2, m.exp_xmsq - 2 / 3
    d_p4, d_m4 = m4.exp_xpsq - 2, m4.exp_xmsq - 2 / 3
    rel_ok = abs(d_p) / 2 < BELOW_REL and abs(d_m) / (2 / 3) < BELOW_REL
    r_p, r_m = d_p / d_p4, d_m / d_m4
    ratio_ok = all(DEV_RATIO[0] <= r <= DEV_RATIO[1] for r in (r_p, r_m))
    return rel_ok and ratio_ok, (f"<x+^2>={m.exp_xpsq:.5f} <x-^2>={m.exp_xmsq:.5f}; "
                                 f"deviation ratios {r_p:.2f}, {r_m:.2f} (band {DEV_RATIO})")


@criterion(5, "smooth threshold, linearized divergence")
def c05():
    xp = np.array([quadrature(mu, G2).exp_xpsq for mu in THRESHOLD_SWEEP])
    finite = bool(np.all(np.isfinite(xp)))
    k = int(np.argmax(xp))
    unimodal = (0 < k < len(xp) - 1 and np.all(np.diff(xp[:k + 1]) > 0)
                and np.all(np.diff(xp[k:]) < 0))
    lin = []
    raised = False
    for mu in THRESHOLD_SWEEP:
        try:
            lin.append(variances(mu, G2)[0])
        except DomainError:
            raised = mu == 1.0
            lin.append(math.inf)
    diverges = raised and lin[1] > lin[0] and lin[3] > lin[4]
    return finite and unimodal and diverges, (
        f"quadrature <x+^2> = {np.round(xp, 4).tolist()} (argmax at mu={THRESHOLD_SWEEP[k]}); "
        f"linearized = {[round(v, 2) for v in lin]}")


@criterion(6, "above-threshold squeezing floor")
def c06():
    m = quadrature(1.5, G2)
    s = duan_simon(m)
    ok = FLOOR_BAND[0] < m.exp_xmsq <= FLOOR_BAND[1] and s.entangled
    return ok, f"<x-^2>={m.exp_xmsq:.5f} (band {FLOOR_BAND}), S={s.value:.5f}"


@criterion(7, "peak structure and marginal maxima")
def c07():
    below = count_peaks(conditional_slice(OpoParams(0.5, G2)))
    above = count_peaks(conditional_slice(OpoParams(1.5, G2)))
    x_star = OpoParams(1.5, G2).x_star
    located = above.count == 2 and all(
        np.all(np.abs(np.abs(c) - x_star) <= PEAK_REL * x_star) and np.sign(c[0]) == np.sign(c[1])
        for c in above.coords)
    r = np.linspace(0, 20, 20001)
    r08 = r[np.argmax(marginal(r, 0.0, OpoParams(0.8, G2)))]
    r12 = r[np.argmax(marginal(r, 0.0, OpoParams(1.2, G2)))]
    ok = below.count == 1 and located and r08 == 0.0 and r12 > 0.0
    coords = np.round(above.coords, 3).tolist()
    return ok, (f"peaks {below.count} (mu=0.5), {above.count} at {coords} vs +-({x_star:g},{x_star:g}); "
                f"marginal max r2={r08:g} (mu=0.8), {r12:.3f} (mu=1.2)")


@criterion(8, "SDE cross-validation")
def c08():
    parts = []
    ok = True
    for mu in (0.5, 1.2):
        red = ensemble(mu, "reduced", G2)
        full = ensemble(mu, "full", G2)
        q = quadrature(mu, G2)
        z = max(abs(red.value(k) - q.value(k)) / math.hypot(red.err(k), q.err(k)) for k in KEYS)
        gap = max(abs(full.value(k) - red.value(k))
                  - SIGMA * math.hypot(full.err(k), red.err(k)) - BIAS * abs(red.value(k)) for k in KEYS)
        ok = ok and z < SIGMA and gap <= 0 and red.n_traj >= 200
        parts.append(f"mu={mu}: reduced vs quadrature max z={z:.2f}, full vs reduced excess={gap:+.4f}")
    return ok, "; ".join(parts)


@criterion(9, "structural invariants")
def c09():
    p = OpoParams(0.8, G2)
    curl = cli.curl_defect(p)
    r_hi, r_lo, ratio = cli.residual_scaling(0.8, G2)
    grid = default_grid(p, 96)
    d = abs(normalize(p, grid).log_norm - normalize(p, grid.refined(2)).log_norm)
    ok = (curl < CURL_TOL and RESIDUAL_RATIO[0] <= ratio <= RESIDUAL_RATIO[1] and d < NORM_TOL)
    return ok, (f"curl {curl:.3e} (tol {CURL_TOL:g}); residual ratio {ratio:.2f} (band {RESIDUAL_RATIO}); "
                f"log_norm change {d:.2e} (tol {NORM_TOL:g})")


@criterion(10, "byte-identical sweeps")
def c10():
    argv = ["sweep", "--mu-list", "0.5,1.5", "--method", "linearized,importance,sde",
            "--n-samples", "20000", "--n-traj", "8", "--t-burn", "10", "--t-total", "20", "--seed", "17"]
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(2):
            path = os.path.join(tmp, f"run{i}.csv")
            cli.main(argv + ["--out", path])
            with open(path, "rb") as fh:
                blobs.append(fh.read())
    return blobs[0] == blobs[1] and len(blobs[0]) > 0, f"{len(blobs[0])} bytes per run, identical={blobs[0] == blobs[1]}"


def _run(number):
    title, fn = CRITERIA[number]
    ok, detail = fn()
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok, detail


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion{n:02d}")
def test_acceptance(number):
    ok, detail = _run(number)
    assert ok, detail


if __name__ == "__main__":
    results = [_run(n)[0] for n in sorted(CRITERIA)]
    sys.exit(0 if all(results) else 1)
