"""Experiment runner: extend / classify / boundary / modulus / report.

Each subcommand reads a JSON config (strictly validated, unknown keys
rejected), merges flag overrides, runs the pipeline and writes CSV and
JSON outputs.  Reports echo the fully resolved config so runs are
reproducible; identical config and seed give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .boundary import duality_check, make_domain, three_point_envelope
from .circle_homeo import CircleHomeo, build_model_homeo, rho
from .control import ControlFunction, make_control, thm51_condition
from .distortion import (
    classify_from_rho,
    fit_radial_exponent,
    integrability_report,
    nested_annuli,
    p_range_from_three_point,
    radial_profile,
)
from .modulus import RingProblem, ring_modulus
from .welding import extend_welding, field_grid, verify_scalewise_bound


def _check_keys(config: dict, allowed: set, where: str) -> None:
    unknown = set(config) - allowed
    if unknown:
        raise ValueError(f"unknown config keys in {where}: {sorted(unknown)}")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _homeo_from_config(cfg: dict) -> CircleHomeo:
    _check_keys(cfg, {"family", "params"}, "welding")
    return build_model_homeo(cfg.get("family", "identity"), cfg.get("params", []))


def _control_from_config(cfg: dict) -> ControlFunction:
    _check_keys(cfg, {"family", "params"}, "psi")
    return make_control(cfg.get("family", "linear"), **cfg.get("params", {}))


def cmd_extend(config: dict, out: Path, seed: int, grid: int) -> dict:
    _check_keys(config, {"welding", "quad_order", "grid", "radii_exponents",
                         "theta_samples"}, "extend")
    homeo = _homeo_from_config(config.get("welding", {}))
    quad_order = int(config.get("quad_order", 64))
    n = int(config.get("grid", grid))
    theta_samples = int(config.get("theta_samples", 512))
    exps = config.get("radii_exponents", list(range(3, 11)))

    F = extend_welding(homeo, quad_order=quad_order)
    z, image, kvals = field_grid(F, n_r=n, n_theta=n)
    _write_csv(out / "field.csv", ["re", "im", "G_re", "G_im", "K"],
               [[f"{a:.12g}" for a in row]
                for row in zip(z.real, z.imag, image.real, image.imag, kvals)])

    radii = [1.0 + 2.0 ** -k for k in exps]
    report = verify_scalewise_bound(F, radii, theta_samples)
    report["config"] = {
        "welding": {"family": homeo.family, "params": list(homeo.params)},
        "quad_order": quad_order, "grid": n,
        "radii_exponents": list(exps), "theta_samples": theta_samples,
        "seed": seed,
    }
    _write_json(out / "scalewise_report.json", report)
    return report


def cmd_classify(config: dict, out: Path, seed: int) -> dict:
    _check_keys(config, {"psi", "r_grid", "s"}, "classify")
    psi = _control_from_config(config.get("psi", {}))
    r_grid = config.get("r_grid")
    cond = thm51_condition(psi, np.asarray(r_grid) if r_grid else None)

    report: dict = {"thm51": cond, "psi": json.loads(psi.to_json())}
    if cond["verdict"] == "bounded":
        report["classification"] = "generalized quasidisk (exp-integrable)"
    elif psi.family == "power":
        s = psi.params[0]
        lo, hi = p_range_from_three_point(s)
        report["classification"] = f"p-integrable for p < {hi:.12g}"
        report["p_range"] = [lo, hi]
    else:
        report["classification"] = "condition fails"
    if "s" in config:
        lo, hi = p_range_from_three_point(float(config["s"]))
        report["p_range_from_s"] = [lo, hi]
    report["config"] = {"psi": json.loads(psi.to_json()), "seed": seed}
    _write_json(out / "classify_report.json", report)
    return report


def cmd_boundary(config: dict, out: Path, seed: int, grid: int) -> dict:
    _check_keys(config, {"domain", "pair_samples", "duality", "grid_res",
                         "probe_count"}, "boundary")
    dom_cfg = config.get("domain", {})
    _check_keys(dom_cfg, {"family", "params", "n_vertices"}, "domain")
    curve = make_domain(dom_cfg.get("family", "disk"),
                        int(dom_cfg.get("n_vertices", 512)),
                        dom_cfg.get("params", []))
    pair_samples = int(config.get("pair_samples", 4000))
    env = three_point_envelope(curve, pair_samples, seed=seed)
    _write_csv(out / "envelope.csv", ["d", "m"],
               [[f"{d:.12g}", f"{m:.12g}"] for d, m in zip(env.bin_d, env.bin_m)])

    report = {
        "fit_family": env.fit_family,
        "fit_params": env.fit_params,
        "fit_residual": env.fit_residual,
        "max_ratio": env.max_ratio,
        "config": {"domain": {"family": dom_cfg.get("family", "disk"),
                              "params": list(dom_cfg.get("params", [])),
                              "n_vertices": int(dom_cfg.get("n_vertices", 512))},
                   "pair_samples": pair_samples, "seed": seed},
    }
    if config.get("duality"):
        dual_cfg = config["duality"]
        _check_keys(dual_cfg, {"psi"}, "duality")
        psi = _control_from_config(dual_cfg.get("psi", {}))
        report["duality"] = duality_check(
            curve, psi, pair_samples=min(pair_samples, 4000),
            grid_res=int(config.get("grid_res", grid)),
            probe_count=int(config.get("probe_count", 120)), seed=seed)
    _write_json(out / "boundary_report.json", report)
    return report


def cmd_modulus(config: dict, out: Path, seed: int, grid: int) -> dict:
    _check_keys(config, {"inner", "outer", "grid_res"}, "modulus")

    def curve_from(cfg, default_radius):
        _check_keys(cfg, {"family", "params", "n_vertices", "radius", "center"},
                    "modulus curve")
        base = make_domain(cfg.get("family", "disk"), int(cfg.get("n_vertices", 512)),
                           cfg.get("params", []))
        verts = base.vertices * float(cfg.get("radius", default_radius))
        center = cfg.get("center", [0.0, 0.0])
        verts = verts + np.asarray(center, dtype=float)
        from .boundary import JordanCurve

        return JordanCurve(verts, features=base.features)

    inner = curve_from(config.get("inner", {}), 1.0)
    outer = curve_from(config.get("outer", {}), math.e)
    problem = RingProblem(inner, outer, int(config.get("grid_res", grid)))
    rep = ring_modulus(problem)
    report = {
        "modulus_connecting": rep["modulus_connecting"],
        "modulus_separating": rep["modulus_separating"],
        "duality_product": rep["duality_product"],
        "residual": rep["residual"],
        "grid": rep["grid"],
        "config": {"grid_res": problem.grid_res, "seed": seed},
    }
    _write_json(out / "modulus_report.json", report)
    return report


def cmd_report(config: dict, out: Path, seed: int, grid: int) -> dict:
    """Battery run: scalewise table, classification table, modulus table."""
    _check_keys(config, {"lifts", "psis", "annulus_ratios"}, "report")
    lifts = config.get("lifts", [{"family": "power", "params": [a]} for a in (1.5, 2.0, 3.0)])
    psis = config.get("psis", [
        {"family": "log_power", "params": {"C": 1.0, "beta": 0.5}},
        {"family": "log_power", "params": {"C": 1.0, "beta": 1.1}},
        {"family": "power", "params": {"s": math.sqrt(0.5)}},
    ])

    scalewise_rows = []
    for cfg in lifts:
        homeo = _homeo_from_config(cfg)
        F = extend_welding(homeo)
        radii = [1.0 + 2.0 ** -k for k in range(3, 11)]
        rep = verify_scalewise_bound(F, radii, 512)
        prof = radial_profile(F, 1.0 + np.geomspace(2.0 ** -3, 2.0 ** -11, 12), 512)
        fit = fit_radial_exponent(prof)
        scalewise_rows.append([
            homeo.family, json.dumps(list(homeo.params)),
            f"{rep['spread']:.6g}", f"{fit.alpha:.6g}",
        ])
    _write_csv(out / "scalewise_table.csv",
               ["family", "params", "ratio_spread", "alpha_fit"], scalewise_rows)

    classify_rows = []
    for cfg in psis:
        psi = make_control(cfg.get("family", "linear"), **cfg.get("params", {}))
        cond = thm51_condition(psi)
        classify_rows.append([psi.family, json.dumps(cfg.get("params", {})),
                              cond["verdict"], f"{cond['limsup_estimate']:.6g}"])
    _write_csv(out / "classify_table.csv",
               ["family", "params", "thm51_verdict", "limsup_estimate"], classify_rows)

    report = {"scalewise": scalewise_rows, "classify": classify_rows,
              "config": {"seed": seed, "grid": grid}}
    _write_json(out / "report.json", report)
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="weldlab",
        description="conformal welding extensions, distortion fields, boundary geometry",
    )
    parser.add_argument("--config", type=str, default=None, help="JSON config path")
    parser.add_argument("--out", type=str, default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--grid", type=int, default=512)
    parser.add_argument("command", choices=["extend", "classify", "boundary",
                                            "modulus", "report"])
    args = parser.parse_args(argv)

    out = Path(args.out)
    try:
        config = _load_config(args.config)
        if args.command == "extend":
            cmd_extend(config, out, args.seed, args.grid)
        elif args.command == "classify":
            cmd_classify(config, out, args.seed)
        elif args.command == "boundary":
            cmd_boundary(config, out, args.seed, args.grid)
        elif args.command == "modulus":
            cmd_modulus(config, out, args.seed, args.grid)
        else:
            cmd_report(config, out, args.seed, args.grid)
    except (ValueError, RuntimeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
