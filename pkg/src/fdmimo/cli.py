"""Command-line scenario runner.

Examples
--------
fdmimo --preset fig2 --out results/fig2
fdmimo --config scenario.yaml --mode both --sweep omega_db=-110:-50:10
fdmimo --mode validate --out results/validate
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import mcsim, se
from .config import (ConfigError, RunManifest, build_network, dump_resolved, load_config,
                     parse_sweep, preset, PRESETS)
from .powerctl import PowerControlParams, RicianSI, atom_at_pmax, power_expectation
from .specfun import QuadSpec

COLUMNS = [
    "variant", "sweep_field", "sweep_value", "mode", "units",
    "se_dl", "se_ul", "se_dl_hd", "se_ul_hd", "sum_fd", "sum_hd",
    "gain", "gain_dl", "gain_ul", "reference",
    "mc_se_dl", "mc_se_ul", "mc_ci_dl", "mc_ci_ul",
    "err_dl", "err_ul", "err_dl_hd", "err_ul_hd", "converged", "note",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def _network_row(mode: str, run: dict, params: dict) -> dict:
    cfg = build_network(params)
    units = run["units"]
    spec = QuadSpec(rel_tol=run["rel_tol"])
    row = {}
    if mode in ("analytic", "both", "fd_vs_hd"):
        dl, ul = se.se_dl(cfg, spec, "fd", units), se.se_ul(cfg, spec, "fd", units)
        row.update(se_dl=dl.value, se_ul=ul.value, err_dl=dl.error, err_ul=ul.error)
        converged = dl.converged and ul.converged
        if mode == "fd_vs_hd":
            dlh, ulh = se.se_dl(cfg, spec, "hd", units), se.se_ul(cfg, spec, "hd", units)
            rep = se.SEReport(dl.value, ul.value, dlh.value, ulh.value, units)
            row.update(se_dl_hd=dlh.value, se_ul_hd=ulh.value, err_dl_hd=dlh.error,
                       err_ul_hd=ulh.error, sum_fd=rep.sum_fd, sum_hd=rep.sum_hd,
                       gain=rep.gain, gain_dl=rep.gain_dl, gain_ul=rep.gain_ul)
            converged = converged and dlh.converged and ulh.converged
        row["converged"] = converged
        if not converged:
            row["note"] = "quadrature tolerance not met"
    if mode in ("mc", "both"):
        scen = mcsim.Scenario(cfg, run["region_radius_km"], run["trials"], run["seed"],
                              power_coupling=run["power_coupling"])
        res = mcsim.estimate_se(scen)
        scale = 1.0 if units == "bits" else math.log(2.0)
        row.update(mc_se_dl=res.mean_se_dl * scale, mc_se_ul=res.mean_se_ul * scale,
                   mc_ci_dl=res.ci_half_width_dl * scale, mc_ci_ul=res.ci_half_width_ul * scale)
        row.setdefault("converged", True)
    return row


def _table_row(kind: str, run: dict, variant: dict, value: float) -> dict:
    scale = se.LOG2E if run["units"] == "bits" else 1.0
    if kind == "siso_optimum":
        c = se.fd_hd_siso(value)
        return dict(sum_fd=c.s_fd * scale, sum_hd=c.s_hd * scale, gain=c.s_fd / c.s_hd,
                    reference=c.s_fd_bounded / c.s_hd_bounded if c.bounds_valid else None,
                    converged=True, note="" if c.bounds_valid else "outside bound window")
    c = se.fd_hd_mimo(int(value), int(variant["users"]))
    return dict(sum_fd=c.s_fd * scale, sum_hd=c.s_hd * scale, gain=c.gain,
                reference=se.nlcf_gain(int(value), int(variant["users"])), converged=True)


def _evaluate(job):
    kind, mode, run, vname, field, value, params = job
    row = {"variant": vname, "sweep_field": field, "sweep_value": value, "mode": mode,
           "units": run["units"]}
    try:
        if kind == "network":
            row.update(_network_row(mode, run, params))
        else:
            row.update(_table_row(kind, run, params, value))
    except (ArithmeticError, ValueError) as exc:
        row.update(converged=False, note=f"{type(exc).__name__}: {exc}")
    return row


def _jobs(manifest: RunManifest):
    mode = manifest.run["mode"]
    if manifest.kind == "network":
        for vname, field, value, params in manifest.points():
            yield manifest.kind, mode, manifest.run, vname, field, value, params
    else:
        field, values = manifest.sweep
        for vname, over in manifest.variants.items():
            for v in values:
                yield manifest.kind, mode, manifest.run, vname, field, v, over


def _extra_rows(manifest: RunManifest) -> list[dict]:
    if manifest.kind != "siso_optimum":
        return []
    opt = se.optimize_power_ratio()
    return [{"variant": "optimum", "sweep_field": "x", "sweep_value": opt.x_star_exact,
             "mode": manifest.run["mode"], "units": manifest.run["units"],
             "gain": opt.gain_star_exact, "reference": opt.gain_star, "converged": opt.unimodal,
             "note": f"bounded maximizer x={opt.x_star:.9g}"}]


def write_results(rows: list[dict], path: Path) -> None:
    """CSV with the fixed column set; missing cells are empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in COLUMNS])


def run_manifest(manifest: RunManifest, out: Path, jobs: int = 1) -> int:
    """Evaluate every point and write results.csv and resolved_config.yaml."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.yaml").write_text(dump_resolved(manifest))
    if manifest.run["mode"] == "validate":
        report = validation_suite(manifest.run["seed"])
        (out / "validation_report.json").write_text(json.dumps(report, indent=2))
        return 0 if report["passed"] else 1
    work = list(_jobs(manifest))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            rows = list(pool.map(_evaluate, work))
    else:
        rows = [_evaluate(j) for j in work]
    rows += _extra_rows(manifest)
    write_results(rows, out / "results.csv")
    return 0


def validation_suite(seed: int = 0, samples: int = 100_000) -> dict:
    """ZF-SIN / ZF structure checks and power-law normalization checks."""
    rng = np.random.default_rng(seed)
    zf = [mcsim.validate_zf_sin(8, 2, 2, samples, rng),
          mcsim.validate_zf_sin(8, 4, 2, samples, rng)]
    norm = []
    lam = 4.0 / math.pi * 1e-6
    for _ in range(20):
        p0 = 10 ** rng.uniform(-10, -7) if rng.random() < 0.8 else math.inf
        i_si = 10 ** rng.uniform(-8, -5) if rng.random() < 0.7 else math.inf
        p_max = 10 ** rng.uniform(1, 3) if rng.random() < 0.8 else math.inf
        if math.isinf(p0) and math.isinf(i_si):
            continue
        pc = PowerControlParams(p0, float(rng.uniform(0.5, 1.0)), i_si, p_max)
        si = RicianSI(float(rng.uniform(0, 3)), 10 ** rng.uniform(-11, -7))
        mass, _ = power_expectation(lambda p: np.ones_like(p), pc, lam, si, 4.0,
                                    QuadSpec(rel_tol=1e-12), tail=1e-14)
        norm.append({"p0": pc.p0, "psi": pc.psi, "i_si": pc.i_si, "p_max": pc.p_max,
                     "k_factor": si.k_factor, "omega": si.omega, "atom": atom_at_pmax(pc, lam, si),
                     "mass": mass, "passed": abs(mass - 1.0) < 1e-9})
    return {"zf_sin": zf, "normalization": norm,
            "passed": all(r["passed"] for r in zf) and all(r["passed"] for r in norm)}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdmimo", description="FD massive-MIMO network SE runner")
    p.add_argument("--config", type=Path, help="YAML scenario file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named scenario")
    p.add_argument("--mode", choices=["analytic", "mc", "both", "fd_vs_hd", "validate"])
    p.add_argument("--sweep", help="field=start:stop:step or field=v1,v2,...")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p.add_argument("--seed", type=int, help="root seed (u64)")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials")
    p.add_argument("--rel-tol", type=float, help="quadrature relative tolerance")
    p.add_argument("--units", choices=["bits", "nats"])
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return p


def manifest_from_args(args) -> RunManifest:
    if args.config and args.preset:
        raise ConfigError("--config and --preset are mutually exclusive")
    if args.config:
        manifest = load_config(args.config)
    elif args.preset:
        manifest = preset(args.preset)
    else:
        manifest = RunManifest({})
    run = dict(manifest.run)
    for key, val in (("mode", args.mode), ("seed", args.seed), ("trials", args.trials),
                     ("rel_tol", args.rel_tol), ("units", args.units)):
        if val is not None:
            run[key] = val
    sweep = parse_sweep(args.sweep, manifest.kind) if args.sweep else manifest.sweep
    return RunManifest(manifest.params, manifest.variants, sweep, run, manifest.kind, manifest.name)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = manifest_from_args(args)
    except (ConfigError, OSError) as exc:
        print(f"fdmimo: error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("fdmimo: error: --seed must be a 64-bit unsigned integer", file=sys.stderr)
        return 2
    return run_manifest(manifest, args.out, max(1, args.jobs))


if __name__ == "__main__":
    sys.exit(main())
