"""``mtnls`` command line: simulate | fdsim | stationary | yudovich | check.

Exit codes: 0 ok, 2 validation, 3 numerical overflow, 4 property-check failure.
Outputs land in ``<out>/{manifest.json, observables.ndjson, snapshots/, reports/}``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, parse_config
from .exceptions import AmplitudeOverflowError, EnsembleError, MTNLSError, NumericalError
from .io import NDJSONWriter, dumps, read_snapshot, write_csv, write_snapshot

EXIT_OK, EXIT_VALIDATION, EXIT_OVERFLOW, EXIT_CHECK = 0, 2, 3, 4
COMMANDS = ("simulate", "fdsim", "stationary", "yudovich", "check")


class Outputs:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.reports = self.root / "reports"
        self.snapshots = self.root / "snapshots"
        self.reports.mkdir(exist_ok=True)
        self.snapshots.mkdir(exist_ok=True)
        self.observables = self.root / "observables.ndjson"
        self.manifest = self.root / "manifest.json"

    def digests(self) -> dict:
        out = {}
        for p in sorted(self.root.rglob("*")):
            if p.is_file() and p.name not in ("manifest.json", "error.json"):
                out[str(p.relative_to(self.root))] = hashlib.sha256(p.read_bytes()).hexdigest()
        return out


def _datum(cfg: RunConfig, basis, params):
    from .dynamics import constant_field_solution, single_mode_solution
    from .yudovich import default_datum

    e = cfg.experiment
    kind = e.get("datum", "random")
    amp = e.get("amplitude")
    if kind == "single-mode":
        k = tuple(int(x) for x in e.get("mode", (1, 0)))
        return single_mode_solution(basis, k, complex(amp if amp is not None else 1.0), params.beta, 0.0)
    if kind == "constant":
        return constant_field_solution(basis, complex(amp if amp is not None else 0.3), params.beta, 0.0)
    if kind == "snapshot":
        return read_snapshot(e["snapshot"], basis)
    return default_datum(basis, amplitude=amp if amp is not None else 0.3, seed=cfg.dynamics["seed"])


def _ensemble_spec(cfg: RunConfig, noise, n_default: int, burn_default: float):
    from .measure import EnsembleSpec

    e = cfg.experiment
    sampler = e.get("sampler", "gaussian")
    kwargs = dict(
        n_traj=e.get("n_traj", n_default),
        T=cfg.dynamics["T"],
        burn_in=e.get("burn_in", burn_default),
        stride=cfg.dynamics["stride"],
        sampler=sampler,
        n_batches=e.get("n_batches", 20),
    )
    if sampler == "gaussian":
        kwargs["sigma"] = e.get("sigma_scale", 1.0) * noise.coeffs
    elif sampler == "snapshot":
        kwargs["snapshot"] = e.get("snapshot")
    return EnsembleSpec(**kwargs)


def cmd_simulate(cfg: RunConfig, out: Outputs) -> dict:
    from .dynamics import default_observer, deterministic_evolve

    basis, params = cfg.build_basis(), cfg.build_params()
    u0 = _datum(cfg, basis, params)
    snap_every = cfg.experiment.get("snapshot_stride", 0)
    count = [0]

    def observer(u, p):
        if snap_every and count[0] % snap_every == 0:
            write_snapshot(out.snapshots / f"snap_{count[0]:06d}.bin", u)
        count[0] += 1
        return default_observer(u, p)

    uT, records = deterministic_evolve(u0, cfg.dynamics["T"], cfg.build_stepper(), params, observer)
    with NDJSONWriter(out.observables) as w:
        for r in records:
            w.write(r.to_json())
    write_snapshot(out.snapshots / "final.bin", uT)
    m = [r.values["M"] for r in records]
    return {"samples": len(records), "mass_drift": float(abs(m[-1] - m[0]) / max(m[0], 1e-300))}


def cmd_fdsim(cfg: RunConfig, out: Outputs) -> dict:
    from .measure import EnsembleStats, run_ensemble

    basis, params = cfg.build_basis(), cfg.build_params()
    noise = cfg.build_noise(basis)
    spec = _ensemble_spec(cfg, noise, 1, 0.0)
    obs = tuple(cfg.experiment.get("observables", ("M", "E", "Mtot", "V", "K", "H1")))
    run = run_ensemble(spec, params, noise, cfg.build_stepper(), obs, workers=cfg.workers)
    with NDJSONWriter(out.observables) as w:
        for i, t in enumerate(run.times):
            rec = {"t": float(t)}
            for k in obs:
                x = run.values[k][i]
                rec[k] = float(np.mean(x))
                if spec.n_traj > 1:
                    rec[k + "_se"] = EnsembleStats.from_samples({"x": x}, spec.n_batches).stderr("x")
            w.write(rec)
    return {"n_traj": spec.n_traj, "A0": noise.A0, "A_half": noise.A_half, "A1": noise.A1}


def cmd_stationary(cfg: RunConfig, out: Outputs) -> dict:
    from .measure import noise_scaling_experiment

    basis, params = cfg.build_basis(), cfg.build_params()
    noise = cfg.build_noise(basis)
    spec = _ensemble_spec(cfg, noise, 200, 0.2 * cfg.dynamics["T"])
    scales = cfg.experiment.get("scales", [1.0])
    rep = noise_scaling_experiment(spec, params, noise, cfg.build_stepper(), scales, workers=cfg.workers)
    with NDJSONWriter(out.reports / "stationary.ndjson") as w:
        for lam, a0, r in zip(rep.scales, rep.A0, rep.reports):
            rec = {"scale": lam, "A0": a0}
            rec.update(r.to_record() if r is not None else {"failed": True})
            w.write(rec)
    lines = [f"{'scale':>8} {'A0':>14} {'E[Mtot]':>14} {'stderr':>10} {'ratio':>8} {'equil':>6}"]
    for lam, a0, r in zip(rep.scales, rep.A0, rep.reports):
        if r is None:
            lines.append(f"{lam:>8g} {a0:>14.6g} {'failed':>14}")
        else:
            lines.append(f"{lam:>8g} {a0:>14.6g} {r.mean_Mtot:>14.6g} {r.stderr:>10.3g} {r.ratio:>8.4f} {str(r.equilibrated):>6}")
    (out.reports / "summary.txt").write_text("\n".join(lines) + "\n")
    with NDJSONWriter(out.observables) as w:
        for lam, r in zip(rep.scales, rep.reports):
            if r is not None:
                w.write({"t": cfg.dynamics["T"], "scale": lam, "Mtot": r.mean_Mtot, "Mtot_se": r.stderr, "ratio": r.ratio})
    base = rep.A0[0] / rep.scales[0] ** 2
    return {
        "scales": rep.scales,
        "A0": rep.A0,
        "A0_ratio_to_unit": [a / base for a in rep.A0],
        "A0_exact": rep.A0_exact,
        "monotone": rep.monotone,
        "failures": rep.failures,
    }


def cmd_yudovich(cfg: RunConfig, out: Outputs) -> dict:
    from .yudovich import (
        LAMBDA_GRID,
        LemmaTable,
        default_direction,
        divergence_experiment,
        lemma_integrability_check,
        record_trajectory,
    )

    basis, params = cfg.build_basis(), cfg.build_params()
    e = cfg.experiment
    u0 = _datum(cfg, basis, params)
    phi = default_direction(basis, seed=cfg.dynamics["seed"] + 1)
    eps_list = e.get("eps_list", [1e-2, 1e-3])
    lambdas = tuple(e.get("lambdas", LAMBDA_GRID))
    beta_plus = e.get("beta_plus", 1.05 * params.beta)
    stepper = cfg.build_stepper()
    reports = divergence_experiment(u0, phi, eps_list, cfg.dynamics["T"], stepper, params, beta_plus, lambdas)
    summaries = []
    with NDJSONWriter(out.reports / "yudovich.ndjson") as w:
        for rep in reports:
            header, rows = rep.rows()
            write_csv(out.reports / f"yudovich_eps_{rep.eps:.3e}.csv", header, rows)
            s = rep.summary()
            summaries.append(s)
            w.write(s)
    r0 = reports[0]
    with NDJSONWriter(out.observables) as w:
        for i, t in enumerate(r0.times):
            w.write({"t": float(t), "eps": r0.eps, "z": r0.z[i], "gradz": r0.gradz[i], "g": r0.g[i], "G": r0.G[i]})
    (out.reports / "lemma_table.txt").write_text(LemmaTable().render() + "\n")
    lemma = None
    if params.gamma > 2 * beta_plus:
        lemma = lemma_integrability_check(record_trajectory(u0, cfg.dynamics["T"], stepper, params), beta_plus, params.gamma)
        (out.reports / "lemma_check.json").write_text(dumps(lemma.to_record()) + "\n")
    return {"eps": [s["eps"] for s in summaries], "z0": [s["z0"] for s in summaries], "lemma_holds": None if lemma is None else lemma.holds}


def cmd_check(cfg: RunConfig, out: Outputs) -> dict:
    from .checks import run_checks

    results = run_checks()
    with NDJSONWriter(out.reports / "checks.ndjson") as w:
        for r in results:
            w.write(r.to_record())
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name:<30} value={r.value:.3g} tol={r.tolerance:.3g}" for r in results]
    (out.reports / "summary.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return {"checks": len(results), "failed": [r.name for r in results if not r.passed]}


HANDLERS = {
    "simulate": cmd_simulate,
    "fdsim": cmd_fdsim,
    "stationary": cmd_stationary,
    "yudovich": cmd_yudovich,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtnls", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("config", nargs="?", help="INI config file (optional for 'check')")
    ap.add_argument("--seed", type=int, default=None, help="override dynamics.seed")
    ap.add_argument("--out", default="mtnls-out", help="output directory")
    ap.add_argument("--workers", type=int, default=1, help="cap on parallel ensemble workers")
    return ap


def _error(out_dir, code, exc, **extra):
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    rec.update({k: v for k, v in extra.items() if v is not None})
    text = dumps(rec)
    print(text, file=sys.stderr)
    try:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "error.json").write_text(text + "\n")
    except OSError:
        pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is None and args.command != "check":
            from .exceptions import ConfigurationError

            raise ConfigurationError(f"'{args.command}' needs a config file")
        text = Path(args.config).read_text() if args.config else None
        cfg = parse_config(text, args.command, seed=args.seed, workers=args.workers, source=args.config)
    except (MTNLSError, ValueError, OSError) as exc:
        return _error(args.out, EXIT_VALIDATION, exc)
    out = Outputs(args.out)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result = HANDLERS[args.command](cfg, out)
    except EnsembleError as exc:
        return _error(args.out, EXIT_OVERFLOW, exc, failed_seeds=list(exc.failed_seeds))
    except AmplitudeOverflowError as exc:
        return _error(args.out, EXIT_OVERFLOW, exc, time=exc.time, max_amplitude=exc.max_amplitude)
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        return _error(args.out, EXIT_OVERFLOW, exc)
    except (MTNLSError, ValueError) as exc:
        return _error(args.out, EXIT_VALIDATION, exc)
    basis = cfg.build_basis()
    noise = cfg.build_noise(basis)
    manifest = {
        "command": cfg.command,
        "config_hash": cfg.digest(),
        "config": cfg.echo(),
        "code_version": __version__,
        "seed": cfg.dynamics["seed"],
        "workers": cfg.workers,
        "basis": basis.descriptor(),
        "noise_hash": noise.digest(),
        "A0": noise.A0,
        "scheme": cfg.dynamics["scheme"],
        "h": cfg.dynamics["h"],
        "T": cfg.dynamics["T"],
        "n_traj": cfg.experiment.get("n_traj"),
        "started": started,
        "wall_seconds": round(time.perf_counter() - t0, 3),
        "warnings": cfg.extras.get("warnings", []),
        "result": result,
        "digests": out.digests(),
    }
    out.manifest.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")
    if args.command == "check" and result["failed"]:
        return EXIT_CHECK
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and math.isnan(x):
        return None
    raise TypeError(f"not JSON serialisable: {type(x)}")


if __name__ == "__main__":
    sys.exit(main())
