"""``wigner-opo`` command line: CSV/JSON tables of fields, sweeps and checks.

Exit codes: 0 success, 1 failed check / every sweep row failed, 2 bad flags,
3 truncation box too small (:class:`~wigner_opo.steady_state.TailTooHeavy`).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from . import moments as mom
from . import steady_state as ss
from .model import OpoParams, drift, potential_gradient
from .sde import IntegratorConfig

SCHEMA = 1
HEADER = f"# wigner-opo v{__version__}, schema {SCHEMA}"
SWEEP_COLUMNS = ["mu", "method", "exp_xpsq", "exp_xmsq", "exp_ypsq", "exp_ymsq", "S_duan",
                 "err_xpsq", "err_xmsq", "err_ypsq", "err_ymsq", "err_S", "error"]


def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return repr(x) if not math.isfinite(x) else format(x, ".17g")


def _write(args, text: str):
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv(header, rows, comments=()) -> str:
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def _json(payload) -> str:
    doc = {"producer": f"wigner-opo v{__version__}", "schema": SCHEMA, **payload}
    return json.dumps(doc, indent=1) + "\n"


def _params(args) -> OpoParams:
    return OpoParams(args.mu, args.g2, args.gamma, args.gamma0_ratio)


def _params_dict(p: OpoParams) -> dict:
    return {"mu": p.mu, "g2": p.g2, "gamma": p.gamma, "gamma0_ratio": p.gamma0_ratio}


def _grid(args, params, points_default=96) -> ss.GridSpec:
    points = args.points or points_default
    if args.bound is None:
        return ss.default_grid(params, points)
    return ss.GridSpec(args.bound, points)


def cmd_slice(args) -> int:
    params = _params(args)
    grid = _grid(args, params, points_default=200)
    field = ss.conditional_slice(params, args.y1, args.y2, grid)
    comment = f"conditional W at y1={fmt(args.y1)}, y2={fmt(args.y2)}; mu={fmt(params.mu)}, g2={fmt(params.g2)}; max-normalized"
    if args.format == "json":
        _write(args, _json({"params": _params_dict(params), "y1": args.y1, "y2": args.y2,
                            "x1": field.xs.tolist(), "x2": field.ys.tolist(),
                            "W": field.values.tolist()}))
        return 0
    rows = ((fmt(a), fmt(b), fmt(v)) for i, a in enumerate(field.xs)
            for b, v in zip(field.ys, field.values[i]))
    _write(args, _csv(["x1", "x2", "W"], rows, [comment]))
    return 0


def cmd_marginal(args) -> int:
    params = _params(args)
    grid = _grid(args, params)
    nw = ss.normalize(params, grid)
    comment = f"mode-2 marginal; mu={fmt(params.mu)}, g2={fmt(params.g2)}; log_norm={fmt(nw.log_norm)}"
    n = args.samples
    if args.grid2d:
        x = np.linspace(-grid.bound, grid.bound, n)
        vals = ss.marginal(x[:, None], x[None, :], params, nw.log_norm)
        if args.format == "json":
            _write(args, _json({"params": _params_dict(params), "log_norm": nw.log_norm,
                                "x2": x.tolist(), "y2": x.tolist(), "W": vals.tolist()}))
            return 0
        rows = ((fmt(a), fmt(b), fmt(v)) for i, a in enumerate(x) for b, v in zip(x, vals[i]))
        _write(args, _csv(["x2", "y2", "W"], rows, [comment]))
        return 0
    r = np.linspace(0.0, grid.bound, n)
    vals = ss.marginal(r, 0.0, params, nw.log_norm)
    if args.format == "json":
        _write(args, _json({"params": _params_dict(params), "log_norm": nw.log_norm,
                            "r2": r.tolist(), "W": vals.tolist()}))
        return 0
    _write(args, _csv(["r2", "W"], ((fmt(a), fmt(b)) for a, b in zip(r, vals)), [comment]))
    return 0


def _mu_values(args) -> list:
    if args.mu_list:
        return [float(v) for v in args.mu_list.split(",") if v.strip()]
    start, stop, num = args.mu_range.split(":")
    return [float(v) for v in np.linspace(float(start), float(stop), int(num))]


def cmd_sweep(args) -> int:
    template = _params(args)
    mus = _mu_values(args)
    methods = [m.strip() for m in args.method.split(",")]
    for m in methods:
        if m not in mom.METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}")
    rows = []
    for method in methods:
        cfg = None
        if method == "sde":
            base = IntegratorConfig.default(template, args.model)
            cfg = IntegratorConfig(
                dt=args.dt if args.dt is not None else base.dt,
                t_burn=args.t_burn if args.t_burn is not None else base.t_burn,
                t_total=args.t_total, n_traj=args.n_traj, seed=args.seed)
        rows += mom.variance_sweep(template, mus, method, grid_points=args.points or 96,
                                   n_samples=args.n_samples, seed=args.seed, cfg=cfg,
                                   model=args.model, bound=args.bound)
    table = []
    for row in rows:
        m = row.moments
        if m is None:
            table.append([fmt(row.mu), row.method] + [""] * 10 + [row.error])
            continue
        vals = [m.exp_xpsq, m.exp_xmsq, m.exp_ypsq, m.exp_ymsq, mom.duan_simon(m).value]
        errs = [m.err(k) for k in ("xpsq", "xmsq", "ypsq", "ymsq", "S")]
        table.append([fmt(row.mu), row.method] + [fmt(v) for v in vals + errs] + [""])
    if args.format == "json":
        recs = [dict(zip(SWEEP_COLUMNS, r)) for r in table]
        for rec in recs:
            for k in SWEEP_COLUMNS[2:-1] + ["mu"]:
                rec[k] = float(rec[k]) if rec[k] != "" else None
            rec["error"] = rec["error"] or None
        _write(args, _json({"params": _params_dict(template), "rows": recs}))
    else:
        comment = f"g2={fmt(template.g2)}, gamma={fmt(template.gamma)}, gamma0_ratio={fmt(template.gamma0_ratio)}, seed={args.seed}"
        _write(args, _csv(SWEEP_COLUMNS, table, [comment]))
    return 1 if all(r.moments is None for r in rows) else 0


# invariant suite -----------------------------------------------------------

CURL_TOL = 1e-6
SCALING_BAND = (12.0, 20.0)
NORM_TOL = 1e-6
CROSS_Z = 4.0  # family-wise bar for the maximum over eleven correlated moments


def _flipped_drift(p, params):
    """Drift with the pump coupling of the first row sign-flipped (mutation hook)."""
    a = drift(p, params)
    a[..., 0] -= 2.0 * params.gamma * params.mu * np.asarray(p, dtype=float)[..., 2]
    return a


def curl_defect(params: OpoParams, n_points=100, seed=0, h=1e-5, drift_fn=drift) -> float:
    """Largest antisymmetric Jacobian entry of ``Z`` over random points in [-3, 3]^4."""
    pts = np.random.default_rng(seed).uniform(-3.0, 3.0, (n_points, 4))
    worst = 0.0
    eye = np.eye(4) * h
    for p in pts:
        stencil = np.concatenate([p + eye, p - eye])
        Z = potential_gradient(stencil, params, drift_fn=drift_fn)
        J = (Z[:4] - Z[4:]).T / (2 * h)  # J[i, j] = dZ_i/dX_j
        worst = max(worst, float(np.abs(J - J.T).max()))
    return worst


def residual_scaling(mu: float, g2: float, n_points=20, seed=0) -> tuple:
    """Median |stationarity residual| at ``g2`` and ``g2/4`` and their ratio."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, (n_points, 4))
    pts *= (3.0 * rng.random(n_points) / np.linalg.norm(pts, axis=1))[:, None]
    med = []
    for g in (g2, g2 / 4):
        p = OpoParams(mu, g)
        med.append(float(np.median([abs(ss.stationarity_residual(q, p)) for q in pts])))
    return med[0], med[1], med[0] / med[1]


def _cross_method(params, points, seed):
    q = mom.quadrature_moments(params, ss.default_grid(params, points))
    s = mom.importance_moments(params, 200_000, seed)
    worst = 0.0
    for k in mom.BASE_KEYS + mom.EPR_KEYS + ("S",):
        sig = math.hypot(q.err(k), s.err(k))
        worst = max(worst, abs(q.value(k) - s.value(k)) / sig)
    return worst


def cmd_check(args) -> int:
    params = _params(args)
    drift_fn = _flipped_drift if args.inject_drift_sign_flip else drift
    checks = []

    def add(name, passed, value, threshold, detail=""):
        checks.append({"name": name, "passed": bool(passed), "value": value,
                       "threshold": threshold, "detail": detail})

    curl = curl_defect(params, drift_fn=drift_fn, seed=args.seed)
    add("curl_symmetry", curl < CURL_TOL, curl, CURL_TOL,
        "max |dZ_i/dX_j - dZ_j/dX_i| over 100 random points, central differences h=1e-5")
    r_hi, r_lo, ratio = residual_scaling(params.mu, params.g2, seed=args.seed)
    add("stationarity_scaling", SCALING_BAND[0] <= ratio <= SCALING_BAND[1], ratio,
        list(SCALING_BAND), f"median residual {r_hi:.3e} at g2, {r_lo:.3e} at g2/4")
    points = args.points or 48
    grid = _grid(args, params, points)
    ln1 = ss.normalize(params, grid).log_norm
    ln2 = ss.normalize(params, grid.refined(2)).log_norm
    add("normalization_stability", abs(ln1 - ln2) < NORM_TOL, abs(ln1 - ln2), NORM_TOL,
        f"log_norm {ln1:.12f} ({grid.points} nodes) vs {ln2:.12f} ({2 * grid.points} nodes)")
    if not args.skip_cross:
        z = _cross_method(params, 96, args.seed)
        add("cross_method_agreement", z < CROSS_Z, z, CROSS_Z,
            "max |quadrature - importance| / combined sigma over all moments")
    report = {"params": _params_dict(params), "mutated_drift": bool(args.inject_drift_sign_flip),
              "checks": checks, "passed": all(c["passed"] for c in checks)}
    _write(args, _json(report))
    return 0 if report["passed"] else 1


# argument parsing ----------------------------------------------------------


def _positive(kind):
    def conv(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {s}")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mu", type=float, default=0.5, help="normalized pump (default 0.5)")
    common.add_argument("--g2", type=float, default=0.01, help="squared coupling g^2 (default 0.01)")
    common.add_argument("--gamma", type=float, default=1.0)
    common.add_argument("--gamma0-ratio", type=float, default=100.0)
    common.add_argument("--bound", type=_positive(float), default=None,
                        help="half-width of the truncation box (default: automatic)")
    common.add_argument("--points", type=int, default=None, help="grid nodes per axis (even)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    parser = argparse.ArgumentParser(prog="wigner-opo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"wigner-opo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("slice", parents=[common], help="conditional W(x1, x2) at fixed y1, y2")
    p.add_argument("--y1", type=float, default=0.0)
    p.add_argument("--y2", type=float, default=0.0)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("marginal", parents=[common], help="single-mode marginal distribution")
    p.add_argument("--samples", type=_positive(int), default=201, help="profile samples")
    p.add_argument("--grid2d", action="store_true", help="emit the (x2, y2) grid instead")
    p.set_defaults(func=cmd_marginal)

    p = sub.add_parser("sweep", parents=[common], help="EPR variances versus pump")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--mu-list", default=None, help="comma separated pump values")
    g.add_argument("--mu-range", default="0.2:1.8:9", help="start:stop:num (default 0.2:1.8:9)")
    p.add_argument("--method", default="quadrature",
                   help=f"comma separated subset of {','.join(mom.METHODS)}")
    p.add_argument("--n-samples", type=int, default=200_000, help="importance samples")
    p.add_argument("--model", choices=("reduced", "full"), default="reduced")
    p.add_argument("--dt", type=_positive(float), default=None)
    p.add_argument("--t-burn", type=float, default=None)
    p.add_argument("--t-total", type=_positive(float), default=200.0)
    p.add_argument("--n-traj", type=_positive(int), default=200)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", parents=[common], help="run the invariant suite (JSON report)")
    p.add_argument("--skip-cross", action="store_true", help="skip quadrature/sampling comparison")
    p.add_argument("--inject-drift-sign-flip", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check, mu=0.8)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _params(args)
        if args.points is not None:
            ss.GridSpec(1.0, args.points)
        if args.command == "sweep":
            _mu_values(args)
    except (ValueError, TypeError) as exc:
        parser.error(str(exc))
    try:
        return args.func(args)
    except ss.TailTooHeavy as exc:
        print(f"wigner-opo: {exc}", file=sys.stderr)
        return 3
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except BrokenPipeError:
        sys.stderr.close()
        return 0


if __name__ == "__main__":
    sys.exit(main())
