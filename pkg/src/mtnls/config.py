"""INI run configuration: ``[basis]``, ``[params]``, ``[noise]``, ``[dynamics]``, ``[experiment]``.

All cross-field validation happens in :func:`parse_config`, before any compute.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import NoiseSpec, StepperConfig
from .exceptions import ConfigurationError
from .functionals import ModelParams, SeriesPolicy
from .spectral import make_basis

REQUIRED = {
    "simulate": [("basis", "K"), ("dynamics", "h"), ("dynamics", "T")],
    "fdsim": [("basis", "K"), ("dynamics", "h"), ("dynamics", "T")],
    "stationary": [("basis", "K"), ("dynamics", "h"), ("dynamics", "T")],
    "yudovich": [("basis", "K"), ("dynamics", "h"), ("dynamics", "T")],
    "check": [],
}

# the default small system used by the stationary experiments
SMALL_SYSTEM = {
    "basis": {"kind": "torus-fourier", "K": 2, "q": 2},
    "noise": {"a0": 0.1, "r": 1.5},
    "dynamics": {"scheme": "exp-euler-maruyama", "h": 2.5e-4},
    "experiment": {"burn_in": 0.2, "sigma_scale": 0.1},
}

KNOWN = {
    "basis": {"kind", "K", "q"},
    "params": {"beta", "gamma", "delta", "alpha", "C", "C1", "C2", "p_max", "tail_tol"},
    "noise": {"a0", "r", "scale", "overrides"},
    "dynamics": {"scheme", "substep", "h", "T", "stride", "seed"},
    "experiment": {
        "datum", "mode", "amplitude", "snapshot", "snapshot_stride",
        "n_traj", "sampler", "sigma_scale", "burn_in", "scales",
        "eps_list", "lambdas", "beta_plus", "n_batches", "drift", "observables",
    },
}


@dataclass
class RunConfig:
    command: str
    basis: dict
    params: dict
    noise: dict
    dynamics: dict
    experiment: dict
    workers: int = 1
    source: str | None = None
    extras: dict = field(default_factory=dict)

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("source")
        d.pop("extras")
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()

    # -- builders ---------------------------------------------------------------

    def build_basis(self):
        b = self.basis
        return make_basis(b["kind"], b["K"], b["q"])

    def build_params(self) -> ModelParams:
        p = {k: v for k, v in self.params.items() if k not in ("p_max", "tail_tol")}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return ModelParams(**p)

    def build_policy(self) -> SeriesPolicy:
        return SeriesPolicy(self.params.get("p_max", 64), self.params.get("tail_tol", 1e-14))

    def build_noise(self, basis) -> NoiseSpec:
        n = self.noise
        return NoiseSpec.from_profile(basis, n["a0"], n["r"], n["scale"], n.get("overrides") or None)

    def build_stepper(self) -> StepperConfig:
        d = self.dynamics
        return StepperConfig(d["scheme"], d["h"], d["seed"], d["stride"], self.experiment.get("drift", "full"), d["substep"])


def _floats(s):
    return [float(x) for x in str(s).replace(",", " ").split()]


def _overrides(s):
    out = {}
    for item in filter(None, (x.strip() for x in str(s).split(";"))):
        try:
            k, v = item.split(":")
            k1, k2 = (int(x) for x in k.split(","))
            out[(k1, k2)] = float(v)
        except ValueError as exc:
            raise ConfigurationError(f"noise.overrides: cannot parse {item!r} (want 'k1,k2:value')") from exc
    return out


def _get(cp, section, key, conv, default, required=False):
    if cp.has_option(section, key):
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"{section}.{key}: cannot parse {raw!r}") from exc
    if required:
        raise ConfigurationError(f"missing required field {section}.{key}")
    return default


def parse_config(text: str | None, command: str, seed=None, workers: int = 1, source=None) -> RunConfig:
    """Parse and validate; raises :class:`ConfigurationError` naming the offending field."""
    if command not in REQUIRED:
        raise ConfigurationError(f"unknown command {command!r}")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if text:
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigurationError(f"config syntax: {exc}") from exc
    for sec in cp.sections():
        if sec not in KNOWN:
            raise ConfigurationError(f"unknown config block [{sec}]")
        for key in cp[sec]:
            if key not in KNOWN[sec]:
                raise ConfigurationError(f"unknown field {sec}.{key}")
    req = set(REQUIRED[command])
    small = command == "stationary"

    def g(sec, key, conv, default):
        if small and key in SMALL_SYSTEM.get(sec, {}):
            default = SMALL_SYSTEM[sec][key]
        return _get(cp, sec, key, conv, default, (sec, key) in req)

    defaults = ModelParams()
    basis = {"kind": g("basis", "kind", str, "torus-fourier"), "K": g("basis", "K", int, 8), "q": g("basis", "q", int, 2)}
    params = {
        "beta": g("params", "beta", float, defaults.beta),
        "gamma": g("params", "gamma", float, defaults.gamma),
        "delta": g("params", "delta", float, defaults.delta),
        "alpha": g("params", "alpha", float, defaults.alpha),
        "C": g("params", "C", float, defaults.C),
        "C1": g("params", "C1", float, defaults.C1),
        "C2": g("params", "C2", float, defaults.C2),
        "p_max": g("params", "p_max", int, 64),
        "tail_tol": g("params", "tail_tol", float, 1e-14),
    }
    noise = {
        "a0": g("noise", "a0", float, 1.0),
        "r": g("noise", "r", float, 1.5),
        "scale": g("noise", "scale", float, 1.0),
        "overrides": {f"{k[0]},{k[1]}": v for k, v in g("noise", "overrides", _overrides, {}).items()},
    }
    default_scheme = "strang-split" if command in ("simulate", "yudovich") else "exp-euler-maruyama"
    dyn = {
        "scheme": g("dynamics", "scheme", str, default_scheme),
        "substep": g("dynamics", "substep", str, "projected-rk4"),
        "h": g("dynamics", "h", float, 1e-3),
        "T": g("dynamics", "T", float, 1.0),
        "stride": g("dynamics", "stride", int, 10),
        "seed": g("dynamics", "seed", int, 0),
    }
    if seed is not None:
        dyn["seed"] = int(seed)
    exp = {}
    for key, conv in (
        ("datum", str), ("amplitude", float), ("snapshot", str), ("snapshot_stride", int),
        ("n_traj", int), ("sampler", str), ("sigma_scale", float), ("burn_in", float),
        ("n_batches", int), ("drift", str), ("beta_plus", float),
    ):
        v = g("experiment", key, conv, None)
        if v is not None:
            exp[key] = v
    for key in ("mode", "scales", "eps_list", "lambdas"):
        v = g("experiment", key, _floats, None)
        if v is not None:
            exp[key] = v
    obs = g("experiment", "observables", lambda s: [x for x in s.replace(",", " ").split()], None)
    if obs is not None:
        exp["observables"] = obs
    cfg = RunConfig(command, basis, params, noise, dyn, exp, int(workers), source)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Cross-field checks; builds every object once so errors surface before compute."""
    if cfg.workers < 1:
        raise ConfigurationError("--workers must be >= 1")
    if cfg.basis["q"] < 2:
        raise ConfigurationError(f"basis.q must be >= 2, got {cfg.basis['q']}")
    p = cfg.params
    if not p["gamma"] > 2 * p["beta"]:
        raise ConfigurationError(f"params.gamma must exceed 2*beta (gamma={p['gamma']}, beta={p['beta']})")
    if p["gamma"] <= 4 * p["beta"]:
        cfg.extras.setdefault("warnings", []).append(
            f"params.gamma={p['gamma']} <= 4*beta: the continuity estimates need gamma > 4 beta"
        )
    if cfg.dynamics["h"] <= 0:
        raise ConfigurationError(f"dynamics.h must be > 0, got {cfg.dynamics['h']}")
    if cfg.command != "check" and cfg.dynamics["T"] == 0:
        raise ConfigurationError("dynamics.T must be nonzero")
    if cfg.command in ("fdsim", "stationary", "yudovich") and cfg.dynamics["T"] < 0:
        raise ConfigurationError(f"dynamics.T must be > 0 for {cfg.command}")
    if cfg.command in ("fdsim", "stationary") and cfg.dynamics["scheme"] != "exp-euler-maruyama":
        raise ConfigurationError("dynamics.scheme must be exp-euler-maruyama for stochastic runs")
    e = cfg.experiment
    if "n_traj" in e and e["n_traj"] < 1:
        raise ConfigurationError("experiment.n_traj must be >= 1")
    if "burn_in" in e and not 0 <= e["burn_in"] < cfg.dynamics["T"]:
        raise ConfigurationError("experiment.burn_in must lie in [0, T)")
    if any(s <= 0 for s in e.get("scales", [])):
        raise ConfigurationError("experiment.scales must be > 0")
    if any(not 0 < lam < 1 for lam in e.get("lambdas", [])):
        raise ConfigurationError("experiment.lambdas must lie in (0, 1)")
    if any(x < 0 for x in e.get("eps_list", [])):
        raise ConfigurationError("experiment.eps_list must be >= 0")
    if "mode" in e and len(e["mode"]) != 2:
        raise ConfigurationError("experiment.mode must be 'k1, k2'")
    if e.get("datum", "random") not in ("random", "single-mode", "constant", "snapshot"):
        raise ConfigurationError(f"experiment.datum: unknown datum {e['datum']!r}")
    try:
        basis = cfg.build_basis()
        cfg.build_params()
        cfg.build_policy()
        noise = cfg.build_noise(basis)
        cfg.build_stepper()
    except ConfigurationError:
        raise
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    if not np.isfinite(noise.A1):
        raise ConfigurationError("noise.A1 must be finite")
