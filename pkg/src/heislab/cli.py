"""Command-line front end for batch experiments.

Subcommands: gauge, solve-plate, minimize, excess, decay, torus-ratio,
selftest. Experiment configuration is JSON with a strict schema; unknown
keys are rejected before any computation starts. Bulk numeric tables go
out as CSV, everything else as JSON with sorted keys so reruns are byte
identical.

Stream discipline: the data product goes to the output path when one is
configured, otherwise to stdout. The one-line human summary goes to
stdout when the data went to a file and to stderr when the data went to
stdout, so piped output stays clean. Error text never touches the data
stream.

Exit codes: 0 success, 1 validation error (bad arguments, bad config,
bad input values), 2 numerical failure (non-convergence, ellipticity or
singular-system failure).

Heavy imports happen inside the handlers, after the --threads cap has
been written to the BLAS environment variables, so the flag actually
takes effect.
"""

from __future__ import annotations

import argparse
import json
import os
import pathlib
import sys

from .constants import SCHEMA_VERSION
from .errors import ConfigError

__all__ = ["main"]

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)


def _cap_threads(k: int) -> None:
    for var in _THREAD_VARS:
        os.environ[var] = str(k)


def _emit(text: str, output, summary: str) -> None:
    """Write the data product and the one-line summary to disjoint streams."""
    if not text.endswith("\n"):
        text += "\n"
    if output:
        pathlib.Path(output).write_text(text, encoding="utf-8")
        print(summary)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()
        print(summary, file=sys.stderr)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _load_config(path: str) -> dict:
    if path == "-":
        text = sys.stdin.read()
    else:
        text = pathlib.Path(path).read_text(encoding="utf-8")
    cfg = json.loads(text)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _check_schema(cfg: dict, required, optional, where: str = "config") -> None:
    allowed = set(required) | set(optional)
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(unknown)}")
    missing = sorted(set(required) - set(cfg))
    if missing:
        raise ConfigError(f"missing {where} keys: {', '.join(missing)}")


def _as_int(cfg: dict, key: str, minimum: int) -> int:
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"config key {key!r} must be an integer")
    if v < minimum:
        raise ConfigError(f"config key {key!r} must be >= {minimum}")
    return v


def _as_float(cfg: dict, key: str) -> float:
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number")
    return float(v)


def _boundary_field(cfg: dict, n: int, points: int, extent: float):
    from . import families

    spec = cfg["boundary"]
    if not isinstance(spec, dict):
        raise ConfigError("config key 'boundary' must be an object")
    _check_schema(spec, required=("family",), optional=("params",), where="boundary")
    family = spec["family"]
    if not isinstance(family, str):
        raise ConfigError("boundary family must be a string")
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("boundary params must be an object")
    try:
        return families.make_family(family, n, points, extent, params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for boundary family {family!r}: {exc}") from exc


def _metric(cfg: dict, n: int):
    from . import wedge

    spec = cfg.get("metric", "identity")
    if spec == "identity":
        return wedge.identity_metric(n)
    if isinstance(spec, dict):
        _check_schema(spec, required=("H",), optional=("n",), where="metric")
        return wedge.MetricForm.from_json_dict({"n": spec.get("n", n), "H": spec["H"]})
    raise ConfigError("config key 'metric' must be \"identity\" or an object with key 'H'")


def _grid_config(cfg: dict):
    n = _as_int(cfg, "n", minimum=1)
    points = _as_int(cfg, "points", minimum=3)
    extent = _as_float(cfg, "extent")
    if extent <= 0:
        raise ConfigError("config key 'extent' must be positive")
    return n, points, extent


def _output_path(cfg: dict, args) -> str | None:
    out = getattr(args, "output", None) or cfg.get("output")
    if out is not None and not isinstance(out, str):
        raise ConfigError("config key 'output' must be a string path")
    return out


def _parse_point(text: str):
    import numpy as np

    from . import heis

    try:
        vals = [float(s) for s in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"point must be comma-separated numbers: {exc}") from exc
    if len(vals) < 3 or len(vals) % 2 == 0:
        raise ConfigError("point needs 2n+1 components: x_1..x_n, y_1..y_n, phi")
    n = (len(vals) - 1) // 2
    arr = np.asarray(vals, dtype=float)
    return heis.HeisPoint(arr[:n], arr[n : 2 * n], arr[2 * n])


def _cmd_gauge(args) -> int:
    from . import heis

    p = _parse_point(args.point)
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "gauge",
        "n": int(p.x.shape[-1]),
        "point": args.point,
        "gauge": float(heis.fk_gauge(p)),
    }
    if args.relative_to is not None:
        q = _parse_point(args.relative_to)
        if q.x.shape != p.x.shape:
            raise ConfigError("both points must have the same dimension")
        payload["relative_to"] = args.relative_to
        payload["distance"] = float(heis.fk_dist(q, p))
    summary = f"gauge: tau={payload['gauge']:.12g}"
    if "distance" in payload:
        summary += f" dist={payload['distance']:.12g}"
    _emit(_json_text(payload), args.output, summary)
    return 0


def _cmd_solve_plate(args) -> int:
    from . import plate

    cfg = _load_config(args.config)
    _check_schema(
        cfg,
        required=("n", "points", "extent", "boundary"),
        optional=("metric", "output"),
    )
    n, points, extent = _grid_config(cfg)
    metric = _metric(cfg, n)
    bf = _boundary_field(cfg, n, points, extent)
    coeffs = plate.compute_coefficients(metric, n)
    sol = plate.solve_dirichlet(coeffs, bf)
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "solve-plate",
        "energy": sol.energy,
        "lambda0": sol.lambda0,
        "residual": sol.residual,
        "solver": sol.solver,
        "field": sol.field.to_json_dict(),
    }
    summary = (
        f"solve-plate: grid {points}^{n}, energy={sol.energy:.12g}, "
        f"residual={sol.residual:.3g} ({sol.solver})"
    )
    _emit(_json_text(payload), _output_path(cfg, args), summary)
    return 0


def _cmd_minimize(args) -> int:
    from . import minimize as mz

    cfg = _load_config(args.config)
    _check_schema(
        cfg,
        required=("n", "points", "extent", "boundary"),
        optional=("metric", "max_iterations", "grad_tol", "output"),
    )
    n, points, extent = _grid_config(cfg)
    metric = _metric(cfg, n)
    bf = _boundary_field(cfg, n, points, extent)
    options = {}
    if "max_iterations" in cfg:
        options["max_iterations"] = _as_int(cfg, "max_iterations", minimum=0)
    if "grad_tol" in cfg:
        options["grad_tol"] = _as_float(cfg, "grad_tol")
    result = mz.minimize(mz.MinimizeProblem(metric, bf, **options))
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "minimize",
        **result.to_json_dict(),
        "field": result.v_star.to_json_dict(),
    }
    summary = (
        f"minimize: grid {points}^{n}, area={result.final_area:.12g}, "
        f"stationarity={result.first_variation_norm:.3g}, "
        f"iterations={result.iterations}, converged={result.converged}"
    )
    _emit(_json_text(payload), _output_path(cfg, args), summary)
    return 0 if result.converged else 2


def _excess_field(cfg: dict):
    n, points, extent = _grid_config(cfg)
    return n, _boundary_field(cfg, n, points, extent)


def _cmd_excess(args) -> int:
    import numpy as np

    from . import excess

    cfg = _load_config(args.config)
    _check_schema(
        cfg,
        required=("n", "points", "extent", "boundary", "radius"),
        optional=("plane", "center", "refine", "output"),
    )
    n, v = _excess_field(cfg)
    radius = _as_float(cfg, "radius")
    refine = _as_int(cfg, "refine", minimum=1) if "refine" in cfg else 8
    center = np.zeros(n)
    if "center" in cfg:
        center = np.asarray(cfg["center"], dtype=float)
        if center.shape != (n,):
            raise ConfigError("config key 'center' must list n coordinates")
    plane = None
    if "plane" in cfg:
        plane = np.asarray(cfg["plane"], dtype=float)
    spec = excess.axis_cylinder(v, center, radius, plane=plane)
    breakdown = excess.excess_breakdown(v, spec, refine=refine)
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "excess",
        "radius": radius,
        **{k: float(val) for k, val in breakdown.items()},
    }
    summary = (
        f"excess: r={radius:g}, tilt-form={breakdown['tilt_form']:.6g}, "
        f"discrepancy={breakdown['discrepancy']:.3g}"
    )
    _emit(_json_text(payload), _output_path(cfg, args), summary)
    return 0


def _cmd_decay(args) -> int:
    import numpy as np

    from . import excess

    cfg = _load_config(args.config)
    _check_schema(
        cfg,
        required=("n", "points", "extent", "boundary", "radii"),
        optional=("metric", "minimize", "center", "refine", "output"),
    )
    n, v = _excess_field(cfg)
    radii = cfg["radii"]
    if not isinstance(radii, list) or not radii:
        raise ConfigError("config key 'radii' must be a non-empty list")
    refine = _as_int(cfg, "refine", minimum=1) if "refine" in cfg else 8
    center = None
    if "center" in cfg:
        center = np.asarray(cfg["center"], dtype=float)
        if center.shape != (n,):
            raise ConfigError("config key 'center' must list n coordinates")
    run_minimize = cfg.get("minimize", False)
    if not isinstance(run_minimize, bool):
        raise ConfigError("config key 'minimize' must be a boolean")
    if run_minimize:
        from . import minimize as mz

        metric = _metric(cfg, n)
        result = mz.minimize(mz.MinimizeProblem(metric, v))
        if not result.converged:
            raise mz.ConvergenceError(
                "minimizer did not converge; decay profile not computed"
            )
        v = result.v_star
    report = excess.decay_profile(v, radii, center=center, refine=refine)
    out = _output_path(cfg, args)
    if out is not None and out.endswith(".csv"):
        text = report.to_csv()
    else:
        text = _json_text(
            {
                "schema": SCHEMA_VERSION,
                "command": "decay",
                **report.to_json_dict(),
            }
        )
    summary = (
        f"decay: {len(report.records)} radii, fitted exponent="
        f"{report.fitted_exponent:.4g}, flags={list(report.flags)}"
    )
    _emit(text, out, summary)
    return 0


def _cmd_torus_ratio(args) -> int:
    from . import torus

    try:
        radii = [float(s) for s in args.radii.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--radii must be comma-separated numbers: {exc}") from exc
    records = torus.ratio_profile(args.n, radii, args.samples, args.seed)
    text = torus.records_to_csv(records)
    ratios = ", ".join(f"{rec.ratio:.4g}" for rec in records)
    summary = f"torus-ratio: n={args.n}, ratios [{ratios}]"
    _emit(text, args.output, summary)
    return 0


def _selftest_checks():
    import numpy as np

    from . import excess, fields, graph, heis, minimize as mz, plate, torus, wedge

    rng = np.random.Generator(np.random.Philox(key=20260819))
    checks = []

    def record(name, err, tol):
        checks.append({"name": name, "error": float(err), "tol": tol, "ok": bool(err < tol)})

    n = 2
    batch = 1000
    p = heis.HeisPoint(rng.normal(size=(batch, n)), rng.normal(size=(batch, n)), rng.normal(size=batch))
    q = heis.group_mul(p, heis.group_inv(p))
    record("group-inverse", max(np.max(np.abs(q.x)), np.max(np.abs(q.y)), np.max(np.abs(q.phi))), 1e-12)

    e = heis.identity(n, (batch,))
    r = heis.group_mul(p, e)
    record("group-identity", max(np.max(np.abs(r.x - p.x)), np.max(np.abs(r.phi - p.phi))), 1e-12)

    tau2 = heis.fk_gauge(heis.dilate(2.0, p))
    record("gauge-dilation", np.max(np.abs(tau2 - 2.0 * heis.fk_gauge(p))), 1e-10)

    frame = heis.horizontal_frame(p)
    record("contact-frame", np.max(np.abs(heis.contact_eval(p, frame))), 1e-12)

    lift1 = torus.torus_lift(np.array([[2.0 * np.pi]]))
    err1 = max(
        float(np.max(np.abs(lift1.x))),
        float(np.max(np.abs(lift1.y))),
        float(np.max(np.abs(lift1.phi - np.pi))),
    )
    lift2 = torus.torus_lift(np.array([[np.pi, 0.0]]))
    expect = np.array([-2.0, 0.0, 0.0, 0.0, np.pi / 2.0])
    got = np.concatenate([lift2.x[0], lift2.y[0], np.atleast_1d(lift2.phi)[0:1]])
    record("torus-lift-points", max(err1, float(np.max(np.abs(got - expect)))), 1e-12)

    record("torus-residual", torus.legendrian_residual_torus(2, 2000, seed=1), 1e-12)

    bf = fields.ScalarField(np.zeros(17), spacing=2.0 / 16.0, origin=np.array([0.0]))
    result = mz.minimize(mz.MinimizeProblem(wedge.identity_metric(1), bf))
    expected_area = 15.0 * (2.0 / 16.0)
    record(
        "zero-minimize",
        abs(result.final_area - expected_area) + result.iterations,
        1e-12,
    )

    xs = np.linspace(-1.0, 1.0, 17)
    cubic = fields.ScalarField(xs**3, spacing=2.0 / 16.0, origin=np.array([0.0]))
    coeffs = plate.compute_coefficients(wedge.identity_metric(1), 1)
    sol = plate.solve_dirichlet(coeffs, cubic)
    record("plate-cubic", np.max(np.abs(sol.field.values - cubic.values)), 1e-9)

    f = fields.ScalarField(rng.normal(size=(9, 9)), spacing=0.25, origin=np.array([0.5, -0.25]))
    record(
        "field-roundtrip",
        0.0 if fields.ScalarField.from_json(f.to_json()) == f else 1.0,
        0.5,
    )

    H = wedge.random_symmetric(rng, n, scale=0.3)
    A = wedge.random_symmetric(rng, n, scale=0.3)
    J = graph.jacobian(H[None])[0]
    JA = graph.jacobian(A[None])[0]
    tilt = graph.tilt_batch(H[None], A)[0]
    lhs = 0.5 * tilt * J
    rhs = J - np.linalg.det(np.eye(n) + H @ A) / JA
    record("excess-pointwise", abs(lhs - rhs), 1e-12)

    flat = fields.ScalarField(np.zeros((33, 33)), spacing=0.125, origin=np.zeros(2))
    spec = excess.axis_cylinder(flat, np.zeros(2), 0.5)
    record("flat-excess", abs(excess.cylindrical_excess(flat, spec, refine=4)), 1e-13)

    return checks


def _cmd_selftest(args) -> int:
    checks = _selftest_checks()
    passed = sum(1 for c in checks if c["ok"])
    payload = {
        "schema": SCHEMA_VERSION,
        "command": "selftest",
        "checks": checks,
        "passed": passed,
        "failed": len(checks) - passed,
    }
    summary = f"selftest: {passed}/{len(checks)} checks passed"
    _emit(_json_text(payload), args.output, summary)
    return 0 if passed == len(checks) else 2


def _build_parser() -> argparse.ArgumentParser:
    from . import __version__

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        metavar="K",
        help="cap BLAS/OpenMP thread pools at K threads",
    )
    common.add_argument(
        "--output",
        default=None,
        metavar="PATH",
        help="write the data product here instead of stdout",
    )

    parser = argparse.ArgumentParser(
        prog="heislab",
        description="Desk-scale laboratory for Legendrian graphs over the horizontal plane.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__} (schema {SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gauge", parents=[common], help="evaluate the homogeneous gauge")
    g.add_argument("--point", required=True, help="2n+1 comma-separated coordinates")
    g.add_argument("--relative-to", default=None, help="base point for the gauge distance")

    for name, helptext in (
        ("solve-plate", "solve the clamped fourth-order model problem"),
        ("minimize", "run the damped Newton area minimizer"),
        ("excess", "evaluate the cylindrical excess of a potential"),
        ("decay", "excess decay profile over shrinking radii"),
    ):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--config", required=True, help="JSON config path, or - for stdin")

    t = sub.add_parser("torus-ratio", parents=[common], help="Monte Carlo ball-volume ratios for the lifted torus")
    t.add_argument("--n", type=int, required=True, help="torus dimension")
    t.add_argument("--radii", required=True, help="comma-separated gauge radii")
    t.add_argument("--samples", type=int, required=True, help="Monte Carlo samples per radius")
    t.add_argument("--seed", type=int, required=True, help="RNG seed")

    sub.add_parser("selftest", parents=[common], help="run the quick built-in example checks")

    return parser


_HANDLERS = {
    "gauge": _cmd_gauge,
    "solve-plate": _cmd_solve_plate,
    "minimize": _cmd_minimize,
    "excess": _cmd_excess,
    "decay": _cmd_decay,
    "torus-ratio": _cmd_torus_ratio,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be at least 1", file=sys.stderr)
            return 1
        _cap_threads(args.threads)
    try:
        return _HANDLERS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
