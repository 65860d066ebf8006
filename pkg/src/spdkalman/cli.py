"""Command line interface.

Two subcommands:

* ``run``   simulate the benchmark plant and write per-step metrics to CSV
* ``check`` run the Gramian diagnostics and the numerical invariant suite

Errors exit nonzero after printing a single machine-readable line
``error {json}`` to stderr. A config file holds ``key = value`` lines
mirroring the flags; explicit flags override the file.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .simulation import (
    BENCHMARK_Q,
    BENCHMARK_R,
    ExperimentConfig,
    benchmark_model,
    emit_csv,
    run_experiment,
    simulate,
)
from .mda import check_uniform_bounds, coeff_window, residual
from .validation import ContractError

_RUN_KEYS = {
    "method": str,
    "steps": int,
    "tau": int,
    "m": int,
    "lags": int,
    "eps": float,
    "seed": int,
    "seeds": str,
    "out": str,
}


def _fail(code, message, exit_code=1):
    print("error " + json.dumps({"code": code, "message": message},
                                sort_keys=True), file=sys.stderr)
    raise SystemExit(exit_code)


def _parse_config_file(path):
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        _fail("config-unreadable", str(exc))
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            _fail("config-syntax",
                  f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _RUN_KEYS:
            _fail("config-key", f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _RUN_KEYS[key](value)
        except ValueError:
            _fail("config-value",
                  f"{path}:{lineno}: cannot parse {value!r} for {key!r}")
    return values


def _seed_list(settings):
    if settings.get("seeds") is not None:
        try:
            return [int(s) for s in str(settings["seeds"]).split(",") if s.strip()]
        except ValueError:
            _fail("bad-seeds", f"cannot parse seed list {settings['seeds']!r}")
    return [int(settings.get("seed", 0))]


def _out_path(base, seed, multi):
    base = Path(base)
    if not multi:
        return base
    return base.with_name(f"{base.stem}_seed{seed}{base.suffix or '.csv'}")


def _cmd_run(args):
    settings = {"method": "rtr", "steps": None, "tau": 10_000, "m": 3,
                "lags": None, "eps": 0.1, "seed": 0, "seeds": None, "out": None}
    if args.config is not None:
        settings.update(_parse_config_file(args.config))
    for key in _RUN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if settings["method"] not in ("rtr", "rls"):
        _fail("bad-method", f"method must be rtr or rls, got {settings['method']!r}")
    if settings["out"] is None:
        _fail("missing-out", "an output CSV path is required (--out)")
    seeds = _seed_list(settings)

    config = ExperimentConfig(
        method=settings["method"],
        steps=settings["steps"],
        tau=int(settings["tau"]),
        m=int(settings["m"]),
        lags=settings["lags"],
        eps=float(settings["eps"]),
        seed=seeds[0],
    )
    try:
        for seed in seeds:
            rows, _ = run_experiment(replace(config, seed=seed))
            path = _out_path(settings["out"], seed, multi=len(seeds) > 1)
            emit_csv(rows, path)
            print(f"wrote {path} rows={len(rows)} method={settings['method']} "
                  f"seed={seed}")
    except (ContractError, OSError) as exc:
        _fail(type(exc).__name__, str(exc))
    return 0


def _check_annihilation(model, steps):
    traj = simulate(model, BENCHMARK_Q, BENCHMARK_R, steps, seed=7,
                    noise_scale=0.0)
    worst = 0.0
    scale = 1.0 + float(np.max(np.abs(traj.y)))
    for k in range(model.m, steps):
        cw = coeff_window(model, k)
        z = residual(cw, traj.y[k - model.m:k + 1], traj.u[k - model.m:k])
        worst = max(worst, float(np.linalg.norm(z)))
    return worst <= 1e-8 * scale, f"max residual {worst:.3e} on noise-free data"


def _check_vec_identities(n_draws=50):
    from .symvec import kron_h, kron_u, sel_matrix, uvec, unvech, vech

    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(n_draws):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        x = rng.standard_normal((n, n))
        x = (x + x.T) / 2
        a = rng.standard_normal((m, n))
        b = rng.standard_normal((n, m))
        worst = max(worst, float(np.max(np.abs(unvech(vech(x)) - x))))
        worst = max(worst, float(np.max(np.abs(
            kron_h(a) @ vech(x) - vech(a @ x @ a.T)))))
        worst = max(worst, float(np.max(np.abs(
            kron_u(b.T, a) @ vech(x) - uvec(a @ x @ b)))))
        worst = max(worst, float(np.max(np.abs(
            sel_matrix(n) @ uvec(x) - vech(x)))))
    return worst <= 1e-10, f"max identity residual {worst:.3e}"


def _check_geometry(n_draws=25):
    from .spd import SpdMatrix, geodesic, retract

    rng = np.random.default_rng(321)
    try:
        for _ in range(n_draws):
            n = int(rng.integers(1, 5))
            a = rng.standard_normal((n, n))
            x = SpdMatrix(a @ a.T + n * np.eye(n))
            v = rng.standard_normal((n, n))
            v = (v + v.T) / 2
            for s in (-2.0, -1.0, 1.0, 2.0):
                retract(x, v, s)  # constructor validates positivity
            b = rng.standard_normal((n, n))
            y = SpdMatrix(b @ b.T + n * np.eye(n))
            end = geodesic(x, y, 1.0)
            if float(np.max(np.abs(end.data - y.data))) > 1e-8:
                return False, "geodesic endpoint mismatch"
    except Exception as exc:  # any SPD rejection is a failure here
        return False, f"geometry check raised {exc!r}"
    return True, "retractions SPD, geodesic endpoints match"


def _check_scalar_oracles():
    from .kalman import FilterState, akf_step
    from .mda import SystemModel
    from .rls import ThetaEstimate, rls_update
    from .mda import RegressorSample
    from .spd import SpdMatrix

    scalar = SystemModel(
        f=lambda k: np.eye(1), g=lambda k: np.eye(1), h=lambda k: np.eye(1),
        n=1, p=1, q=1, m=1,
    )
    step = akf_step(FilterState(np.zeros(1), np.eye(1), 0), scalar, 1,
                    np.zeros(1), np.zeros(1), np.eye(1), np.eye(1))
    ok = abs(step.state.p[0, 0] - 2.0 / 3.0) < 1e-12

    est = rls_update(
        ThetaEstimate(np.zeros(1), SpdMatrix(np.eye(1))),
        RegressorSample(d=np.eye(1), b=np.array([2.0]), k=0, lags=0),
        SpdMatrix(np.eye(1)),
    )
    ok = ok and abs(est.theta[0] - 1.0) < 1e-12
    ok = ok and abs(est.psi.data[0, 0] - 0.5) < 1e-12
    return ok, "scalar filter and least-squares updates match hand values"


def _cmd_check(args):
    model = benchmark_model(args.tau, args.m)
    steps = args.steps
    bounds = check_uniform_bounds(model, range(steps), args.m - 1, BENCHMARK_Q)
    print(f"gramian observability eig range [{bounds.alpha1:.6g}, "
          f"{bounds.alpha2:.6g}]")
    print(f"gramian controllability eig range [{bounds.beta1:.6g}, "
          f"{bounds.beta2:.6g}]")
    checks = [
        ("uniform bounds positive", bounds.ok,
         "both Gramian spectra bounded away from zero"),
        ("vectorization identities", *_check_vec_identities()),
        ("spd geometry", *_check_geometry()),
        ("noise-free annihilation", *_check_annihilation(model, min(steps, 500))),
        ("scalar oracles", *_check_scalar_oracles()),
    ]
    failed = False
    for row in checks:
        name, ok, detail = row[0], row[1], row[2]
        print(f"{'ok' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            failed = True
    if failed:
        _fail("check-failed", "one or more invariant checks failed")
    print("all checks passed")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spdkalman",
        description="Adaptive Kalman filtering with SPD-guaranteed noise "
                    "covariance estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate the benchmark and write metrics CSV")
    run.add_argument("--method", choices=["rtr", "rls"], default=None)
    run.add_argument("--steps", type=int, default=None)
    run.add_argument("--tau", type=int, default=None)
    run.add_argument("--m", type=int, default=None)
    run.add_argument("--lags", type=int, default=None)
    run.add_argument("--eps", type=float, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--seeds", type=str, default=None,
                     help="comma separated list; one CSV per seed")
    run.add_argument("--out", type=str, default=None)
    run.add_argument("--config", type=str, default=None,
                     help="key = value file mirroring the flags above")
    run.set_defaults(func=_cmd_run)

    check = sub.add_parser("check", help="run Gramian diagnostics and invariants")
    check.add_argument("--tau", type=int, default=10_000)
    check.add_argument("--m", type=int, default=3)
    check.add_argument("--steps", type=int, default=2000,
                       help="time steps to sweep in the diagnostics")
    check.set_defaults(func=_cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except Exception as exc:  # fail loudly but machine-readably
        _fail(type(exc).__name__, str(exc), exit_code=2)


if __name__ == "__main__":
    sys.exit(main())
