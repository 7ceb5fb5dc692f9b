"""Scenario files, unit conversion at the boundary, and named presets.

A scenario is a flat mapping of user-facing parameters (powers in dBm, SI
attenuation and the SI cap in dB, densities per km^2).  It is converted once
into a :class:`~fdmimo.se.NetworkConfig`.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .mgf import ArrayDims
from .powerctl import PowerControlParams, RicianSI
from .se import NetworkConfig, db_to_lin, dbm_to_mw, noise_mw

POLICIES = ("sia", "fractional", "fixed")
MODES = ("analytic", "mc", "both", "fd_vs_hd", "validate")

DEFAULTS = {
    "lambda_d": 4.0 / math.pi,
    "n_t": 1,
    "n_r": 1,
    "users": 1,
    "p_d_dbm": 43.0,
    "p_max_dbm": 23.0,
    "p0_dbm": -80.0,
    "psi": 1.0,
    "i_si_to_noise_db": None,
    "omega_db": -80.0,
    "k_factor": 1.0,
    "omega_bs_db": None,
    "k_factor_bs": None,
    "beta": 4.0,
    "bandwidth_hz": 20e6,
    "noise_figure_db": 10.0,
    "policy": "fractional",
    "perfect_si": False,
    "interference_limited": False,
}

RUN_DEFAULTS = {
    "mode": "analytic",
    "seed": 0,
    "trials": 10_000,
    "rel_tol": 1e-6,
    "units": "bits",
    "region_radius_km": 20.0,
    "power_coupling": "iid",
}

_INT_FIELDS = ("n_t", "n_r", "users")
_BOOL_FIELDS = ("perfect_si", "interference_limited")
_TABLE_AXES = {"siso_optimum": "x", "nlcf_table": "n"}
_OPTIONAL_FIELDS = ("p0_dbm", "p_max_dbm", "i_si_to_noise_db", "omega_bs_db", "k_factor_bs")


class ConfigError(ValueError):
    """Invalid scenario; the message names the offending field."""


def _number(name, value, optional=False):
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{name}: value required")
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    if math.isnan(out):
        raise ConfigError(f"{name}: NaN is not allowed")
    return out


def normalize(params: dict) -> dict:
    """Merge with defaults and check types; unknown keys are rejected."""
    unknown = set(params) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown parameter")
    out = dict(DEFAULTS)
    out.update(params)
    for key in DEFAULTS:
        if key in _INT_FIELDS:
            v = _number(key, out[key])
            if v != int(v):
                raise ConfigError(f"{key}: expected an integer, got {out[key]!r}")
            out[key] = int(v)
        elif key in _BOOL_FIELDS:
            if not isinstance(out[key], bool):
                raise ConfigError(f"{key}: expected true or false, got {out[key]!r}")
        elif key == "policy":
            if out[key] not in POLICIES:
                raise ConfigError(f"policy: expected one of {', '.join(POLICIES)}, got {out[key]!r}")
        else:
            out[key] = _number(key, out[key], optional=key in _OPTIONAL_FIELDS)
    return out


def build_network(params: dict) -> NetworkConfig:
    """Convert boundary units (dBm, dB, per km^2) into a NetworkConfig.

    ``policy`` selects the MT power rule: ``fixed`` (always p_max),
    ``fractional`` (distance compensation with cap) or ``sia`` (additionally
    capped by the SI level ``i_si_to_noise_db`` above the noise power).
    """
    p = normalize(params)
    inf = math.inf
    try:
        dims = ArrayDims(p["n_t"], p["n_r"], p["users"])
        p_max = inf if p["p_max_dbm"] is None else dbm_to_mw(p["p_max_dbm"])
        p0 = inf if p["p0_dbm"] is None else dbm_to_mw(p["p0_dbm"])
        sigma2 = noise_mw(p["bandwidth_hz"], p["noise_figure_db"])
        i_si = inf if p["i_si_to_noise_db"] is None else sigma2 * db_to_lin(p["i_si_to_noise_db"])
        if p["policy"] == "fixed":
            p0, i_si = inf, inf
        elif p["policy"] == "fractional":
            i_si = inf
        elif math.isinf(i_si):
            raise ConfigError("i_si_to_noise_db: required by the sia policy")
        pc = PowerControlParams(p0=p0, psi=p["psi"], i_si=i_si, p_max=p_max)
        si_mt = RicianSI(p["k_factor"], db_to_lin(p["omega_db"]))
        si_bs = None
        if p["omega_bs_db"] is not None or p["k_factor_bs"] is not None:
            k_bs = p["k_factor"] if p["k_factor_bs"] is None else p["k_factor_bs"]
            om_bs = p["omega_db"] if p["omega_bs_db"] is None else p["omega_bs_db"]
            si_bs = RicianSI(k_bs, db_to_lin(om_bs))
        return NetworkConfig(
            lambda_d=p["lambda_d"], dims=dims, p_d=dbm_to_mw(p["p_d_dbm"]), pc=pc, si_mt=si_mt,
            si_bs=si_bs, beta=p["beta"], bandwidth_hz=p["bandwidth_hz"],
            noise_figure_db=p["noise_figure_db"], perfect_si=p["perfect_si"],
            interference_limited=p["interference_limited"])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def derived_summary(cfg: NetworkConfig) -> dict:
    """Converted values of a NetworkConfig (mW, linear ratios, per m^2)."""

    def num(v):
        return "inf" if math.isinf(v) else float(v)

    return {
        "lambda_d_per_m2": cfg.lam,
        "p_d_mw": cfg.p_d,
        "p0": num(cfg.pc.p0),
        "p_max_mw": num(cfg.pc.p_max),
        "i_si_mw": num(cfg.pc.i_si),
        "omega_mt": cfg.si_mt.omega,
        "omega_bs": cfg.bs_si.omega,
        "noise_dl_mw": cfg.sigma2_dl,
        "noise_ul_mw": cfg.sigma2_ul,
        "d_dl": cfg.dims.d_dl,
        "d_dl_plain": cfg.dims.d_dl_plain,
        "d_ul": cfg.dims.d_ul,
        "zf_sin": cfg.dims.zf_sin,
    }


def parse_sweep(text: str, kind: str = "network") -> tuple[str, list[float]]:
    """Parse ``field=start:stop:step`` (stop inclusive) or ``field=v1,v2,...``."""
    if "=" not in text:
        raise ConfigError(f"sweep: expected field=values, got {text!r}")
    name, spec = (s.strip() for s in text.split("=", 1))
    if kind in _TABLE_AXES:
        if name != _TABLE_AXES[kind]:
            raise ConfigError(f"sweep: the {kind} table sweeps {_TABLE_AXES[kind]!r}")
    elif name not in DEFAULTS or name in _BOOL_FIELDS or name == "policy":
        raise ConfigError(f"sweep: {name!r} is not a numeric scenario parameter")
    try:
        if ":" in spec:
            start, stop, step = (float(s) for s in spec.split(":"))
        else:
            values = [float(s) for s in spec.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"sweep: cannot parse {spec!r}") from None
    if ":" in spec:
        if step == 0 or (stop - start) / step < 0:
            raise ConfigError(f"sweep: empty range {spec!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + i * step, 12) for i in range(n)]
    if not values:
        raise ConfigError("sweep: no values")
    return name, values


@dataclass
class RunManifest:
    """Everything a run needs: base scenario, variants, sweep and run options."""

    params: dict
    variants: dict = field(default_factory=lambda: {"base": {}})
    sweep: tuple | None = None
    run: dict = field(default_factory=lambda: dict(RUN_DEFAULTS))
    kind: str = "network"
    name: str = "custom"

    def __post_init__(self):
        self.run = {**RUN_DEFAULTS, **self.run}
        unknown = set(self.run) - set(RUN_DEFAULTS)
        if unknown:
            raise ConfigError(f"run.{sorted(unknown)[0]}: unknown option")
        if self.run["mode"] not in MODES:
            raise ConfigError(f"run.mode: expected one of {', '.join(MODES)}")
        if self.run["units"] not in ("bits", "nats"):
            raise ConfigError("run.units: expected bits or nats")
        if self.run["power_coupling"] not in ("iid", "common"):
            raise ConfigError("run.power_coupling: expected iid or common")
        for key in ("seed", "trials"):
            v = self.run[key]
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ConfigError(f"run.{key}: expected a non-negative integer")
        if self.run["trials"] < 1:
            raise ConfigError("run.trials: must be >= 1")
        self.run["rel_tol"] = _number("run.rel_tol", self.run["rel_tol"])
        if not self.run["rel_tol"] > 0:
            raise ConfigError("run.rel_tol: must be positive")
        if self.kind not in _TABLE_AXES and self.kind != "network":
            raise ConfigError(f"kind: unknown value {self.kind!r}")
        if self.sweep is not None:
            name, values = self.sweep
            try:
                self.sweep = (name, [float(v) for v in values])
            except (TypeError, ValueError):
                raise ConfigError("sweep: values must be numbers") from None
        if self.kind in _TABLE_AXES:
            # comparison tables: only their own axes are meaningful
            axis = _TABLE_AXES[self.kind]
            if self.sweep is None or self.sweep[0] != axis:
                raise ConfigError(f"sweep: the {self.kind} table needs a sweep over {axis!r}")
            for over in self.variants.values():
                if set(over) - {"users"}:
                    raise ConfigError("variants: table variants may only set users")
            return
        self.params = normalize(self.params)
        for over in self.variants.values():
            normalize({**self.params, **over})
        if self.sweep is not None and self.sweep[0] not in DEFAULTS:
            raise ConfigError(f"sweep: {self.sweep[0]!r} is not a scenario parameter")

    def points(self):
        """(variant, sweep field, sweep value, params) in deterministic order."""
        for vname, over in self.variants.items():
            base = {**self.params, **over}
            if self.sweep is None:
                yield vname, "", None, base
            else:
                name, values = self.sweep
                for v in values:
                    yield vname, name, v, {**base, name: int(v) if name in _INT_FIELDS else v}

    def to_dict(self) -> dict:
        """Plain mapping that :func:`manifest_from_dict` reads back unchanged."""
        out = {
            "name": self.name,
            "kind": self.kind,
            "scenario": copy.deepcopy(self.params),
            "variants": copy.deepcopy(self.variants),
            "run": dict(self.run),
        }
        if self.sweep is not None:
            out["sweep"] = {"field": self.sweep[0], "values": list(self.sweep[1])}
        return out


def manifest_from_dict(data: dict) -> RunManifest:
    """Build a manifest from a parsed scenario file."""
    if not isinstance(data, dict):
        raise ConfigError("config: expected a mapping at the top level")
    allowed = {"name", "kind", "scenario", "variants", "run", "sweep", "resolved"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    sweep = data.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or "field" not in sweep or "values" not in sweep:
            raise ConfigError("sweep: expected a mapping with field and values")
        sweep = (sweep["field"], list(sweep["values"]))
    variants = data.get("variants") or {"base": {}}
    kind = data.get("kind", "network")
    return RunManifest(dict(data.get("scenario") or {}), dict(variants), sweep,
                       dict(data.get("run") or {}), kind, data.get("name", "custom"))


def load_config(path: str | Path) -> RunManifest:
    """Read a YAML scenario file."""
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML ({exc})") from None
    return manifest_from_dict(data or {})


def dump_resolved(manifest: RunManifest) -> str:
    """YAML echo of the manifest plus the converted values of each variant.

    The ``resolved`` section is informational and ignored when read back;
    swept variants are resolved at the first sweep value.
    """
    data = manifest.to_dict()
    if manifest.kind == "network":
        resolved = {}
        first = {manifest.sweep[0]: manifest.sweep[1][0]} if manifest.sweep else {}
        for vname, over in manifest.variants.items():
            resolved[vname] = derived_summary(build_network({**manifest.params, **over, **first}))
        data["resolved"] = resolved
    return yaml.safe_dump(data, sort_keys=False)


# ---------------------------------------------------------------------------
# named scenarios
# ---------------------------------------------------------------------------

_FIG_BASE = {"lambda_d": 4.0 / math.pi, "p_max_dbm": 23.0, "p0_dbm": -80.0, "psi": 1.0,
             "bandwidth_hz": 20e6, "noise_figure_db": 10.0, "beta": 4.0}


def _grid(start, stop, step):
    return list(np.round(np.arange(start, stop + 0.5 * step, step), 12))


PRESETS = {
    "fig1": dict(
        params={**_FIG_BASE, "omega_db": -80.0, "k_factor": 1.0},
        variants={"massive": {"n_t": 80, "n_r": 20, "users": 8, "p_d_dbm": 30.0},
                  "siso": {"n_t": 1, "n_r": 1, "users": 1, "p_d_dbm": 43.0}},
        sweep=("beta", [3.0, 3.5, 4.0, 4.5, 5.0]),
        run={"mode": "both"}),
    "fig2": dict(
        params={**_FIG_BASE, "n_t": 350, "n_r": 50, "p_d_dbm": 30.0, "k_factor": 1.0},
        variants={"U1": {"users": 1}, "U4": {"users": 4}, "U8": {"users": 8}},
        sweep=("omega_db", _grid(-110.0, -50.0, 5.0)),
        run={"mode": "fd_vs_hd"}),
    "fig3": dict(
        params={**_FIG_BASE, "users": 5, "p_d_dbm": 30.0, "omega_db": -90.0, "k_factor": 2.0},
        variants={"Nr20": {"n_r": 20}, "Nr50": {"n_r": 50}},
        sweep=("n_t", _grid(100.0, 400.0, 50.0)),
        run={"mode": "fd_vs_hd"}),
    "fig4": dict(
        params={**_FIG_BASE, "n_t": 150, "n_r": 50, "users": 4, "omega_db": -100.0,
                "k_factor": 0.0},
        variants={"pmax13": {"p_max_dbm": 13.0}, "pmax23": {"p_max_dbm": 23.0}},
        sweep=("p_d_dbm", _grid(20.0, 45.0, 5.0)),
        run={"mode": "fd_vs_hd"}),
    "fig5": dict(
        params={**_FIG_BASE, "n_t": 150, "n_r": 50, "users": 4, "p_d_dbm": 30.0,
                "i_si_to_noise_db": 25.0, "k_factor": 0.0},
        variants={"fixed": {"policy": "fixed"}, "fractional": {"policy": "fractional"},
                  "sia": {"policy": "sia"}},
        sweep=("omega_db", _grid(-110.0, -50.0, 10.0)),
        run={"mode": "analytic"}),
    "siso_optimum": dict(
        params={}, kind="siso_optimum",
        sweep=("x", [float(v) for v in np.round(np.logspace(-1, 1, 21), 12)]),
        run={"mode": "fd_vs_hd"}),
    "nlcf_table": dict(
        params={}, kind="nlcf_table",
        variants={f"U{u}": {"users": u} for u in (1, 2, 4, 8)},
        sweep=("n", [64.0, 128.0, 256.0, 512.0]),
        run={"mode": "fd_vs_hd"}),
}


def preset(name: str) -> RunManifest:
    """Manifest of a named network scenario or comparison table."""
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown name {name!r}; valid: {', '.join(PRESETS)}")
    spec = copy.deepcopy(PRESETS[name])
    return RunManifest(spec["params"], spec.get("variants", {"base": {}}), spec.get("sweep"),
                       spec.get("run", {}), spec.get("kind", "network"), name)
