"""Command-line front end: ``rirtool rir-fixed | rir-param | simulate``.

Each subcommand writes a JSON report plus CSV data into the output directory.
Exit codes: 0 success, 2 configuration error, 3 analysis error, 4 divergence.
Logs go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import __version__, models, rir_fixed, rir_param
from .errors import Divergence, RirError
from .tf import RationalTF, parse_tf, static_gain

log = logging.getLogger("rirtool")

EXIT_OK, EXIT_CONFIG, EXIT_ANALYSIS, EXIT_DIVERGENCE = 0, 2, 3, 4
OUT_DIR_ENV = "RIRTOOL_OUT_DIR"

_num_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_grid = {
    "oneOf": [
        _num_list,
        {
            "type": "object",
            "properties": {"lo": {"type": "number"}, "hi": {"type": "number"},
                           "n": {"type": "integer", "minimum": 2}},
            "required": ["lo", "hi", "n"],
            "additionalProperties": False,
        },
    ]
}
_tf_arrays = {
    "type": "object",
    "properties": {"num": _num_list, "den": _num_list},
    "required": ["num", "den"],
    "additionalProperties": False,
}
_delta = {
    "oneOf": [
        {"type": "null"},
        _tf_arrays,
        {
            "type": "object",
            "properties": {"e": {"type": "number"}, "eps": {"type": "number"},
                           "xi": {"type": "number", "exclusiveMinimum": 0},
                           "verify": {"type": "boolean"}},
            "required": ["e"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "tf": {"oneOf": [{"type": "string"}, _tf_arrays]},
        "family": {
            "type": "object",
            "properties": {k: _num_list for k in ("zeta", "k", "p", "q", "ell")},
            "required": ["k", "p", "q", "ell"],
            "additionalProperties": False,
        },
        "omega_grid": _grid,
        "model": {"enum": ["repressilator", "fhn"]},
        "params": {"type": "object"},
        "domain": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "e_grid": _grid,
        "eps": {"type": "number"},
        "xi_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "plot_script": {"type": "boolean"},
        "delta": _delta,
        "x0": _num_list,
        "t_final": {"type": "number", "exclusiveMinimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "tail_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "tau_osc": {"type": "number", "exclusiveMinimum": 0},
        "out_dir": {"type": "string"},
    },
    "additionalProperties": False,
}

_PARAM_SCHEMAS = {
    "repressilator": {
        "type": "object",
        "properties": {k: {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
                       for k in ("alpha", "beta", "K", "nu")},
        "additionalProperties": False,
    },
    "fhn": {
        "type": "object",
        "properties": {k: {"type": "number"} for k in ("c", "tau", "alpha", "beta")},
        "required": ["c", "tau", "alpha", "beta"],
        "additionalProperties": False,
    },
}

DEFAULT_FHN = {"c": 1.0, "tau": 1.0, "alpha": 0.067, "beta": 0.8}


class ConfigError(Exception):
    pass


# config handling --------------------------------------------------------------------


def _parse_grid_flag(text: str) -> dict:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError("--e-grid expects 'lo,hi,n'")
    try:
        return {"lo": float(parts[0]), "hi": float(parts[1]), "n": int(parts[2])}
    except ValueError as exc:
        raise ConfigError(f"bad --e-grid value: {exc}") from exc


def load_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    overrides = {
        "tf": args.tf,
        "model": args.model,
        "e_grid": _parse_grid_flag(args.e_grid) if args.e_grid else None,
        "t_final": args.t_final,
        "dt": args.dt,
        "out_dir": args.out_dir,
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
        if "params" in cfg:
            jsonschema.validate(cfg["params"], _PARAM_SCHEMAS[cfg.get("model", "repressilator")])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    return cfg


def config_hash(cfg: dict) -> str:
    """SHA-256 of the analysis inputs; the output location does not change results."""
    inputs = {k: v for k, v in cfg.items() if k != "out_dir"}
    return hashlib.sha256(json.dumps(inputs, sort_keys=True).encode()).hexdigest()


def _grid_values(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(spec["lo"], spec["hi"], spec["n"])
    return np.asarray(spec, dtype=float)


def _model_params(cfg: dict):
    model = cfg.get("model", "repressilator")
    try:
        if model == "repressilator":
            base = models.RepressilatorParams.nominal().to_dict()
            base.update(cfg.get("params", {}))
            return model, models.RepressilatorParams(**base)
        return model, models.FhnParams(**{**DEFAULT_FHN, **cfg.get("params", {})})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _table_family(tables: dict, domain: tuple[float, float]) -> rir_param.ParamFamily:
    """g_e = (zeta(e) s - k(e)) / (s^3 + p(e) s^2 + q(e) s + ell(e)), each coefficient polynomial in e."""
    P = np.polynomial.polynomial
    coef = {name: np.asarray(tables.get(name, [0.0]), dtype=float) for name in ("zeta", "k", "p", "q", "ell")}

    def gen(e):
        v = {name: float(P.polyval(e, c)) for name, c in coef.items()}
        return RationalTF([-v["k"], v["zeta"]], [v["ell"], v["q"], v["p"], 1.0])

    return rir_param.ParamFamily(gen, domain, name="table")


def _family(cfg: dict):
    if "family" in cfg:
        if "domain" not in cfg:
            raise ConfigError("a coefficient-table family needs 'domain'")
        return "table", None, _table_family(cfg["family"], tuple(cfg["domain"]))
    if "tf" in cfg:
        domain = tuple(cfg.get("domain", (-1.0, 1.0)))
        return "constant", None, rir_param.constant_family(_parse_tf(cfg["tf"]), domain)
    model, params = _model_params(cfg)
    domain = tuple(cfg["domain"]) if "domain" in cfg else None
    if model == "repressilator":
        return model, params, models.repressilator_family(params, domain)
    return model, params, models.fhn_family(params, domain)


def _parse_tf(spec) -> RationalTF:
    try:
        if isinstance(spec, dict):
            return RationalTF(spec["num"], spec["den"])
        return parse_tf(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg.get("out_dir") or os.environ.get(OUT_DIR_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _write_report(out: Path, name: str, command: str, cfg: dict, results: dict, t0: float) -> Path:
    report = {
        "command": command,
        "version": __version__,
        "config_hash": config_hash(cfg),
        "inputs": cfg,
        "results": _jsonable(results),
        "wall_time_s": time.perf_counter() - t0,
    }
    path = out / name
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s", path)
    return path


# commands ---------------------------------------------------------------------------


def cmd_rir_fixed(cfg: dict) -> dict:
    t0 = time.perf_counter()
    if "tf" not in cfg:
        raise ConfigError("rir-fixed needs 'tf'")
    g = _parse_tf(cfg["tf"])
    grid = _grid_values(cfg["omega_grid"]) if "omega_grid" in cfg else None
    res = rir_fixed.sweep_upper_bound(g, grid)
    third = rir_fixed.third_order_exact(g)
    if third is not None and (not res.exact or third.rho_upper < res.rho_upper):
        res = third
    cert_ok = None
    if res.certificate is not None:
        cert_ok = rir_fixed.omega_c_stability(g, res.certificate.tf, res.certificate.omega_c).ok
    results = {**res.to_dict(), "certificate_verified": cert_ok}
    out = _out_dir(cfg)
    if res.sweep:
        with open(out / "rir_fixed_sweep.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["omega_c", "abs_b", "omega_c_stable"])
            for w, b, ok in res.sweep:
                wr.writerow([repr(w), repr(b), int(ok)])
    _write_report(out, "rir_fixed_report.json", "rir-fixed", cfg, results, t0)
    return results


def _plot_script(csv_name: str) -> str:
    return "\n".join([
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 'e'",
        "set ylabel 'gain'",
        f"plot '{csv_name}' using 1:2 with lines title 'rho_p(e)', \\",
        f"     '{csv_name}' using 1:3 with lines title '|e|'",
        "",
    ])


def cmd_rir_param(cfg: dict) -> dict:
    t0 = time.perf_counter()
    model, _, fam = _family(cfg)
    grid = _grid_values(cfg["e_grid"]) if "e_grid" in cfg else None
    if grid is not None and not np.any(grid == 0.0):
        grid = np.sort(np.append(grid, 0.0))  # E* is grown outward from e = 0
    kw = {"eps": cfg.get("eps", 0.05)}
    if "xi_grid" in cfg:
        kw["xi_grid"] = tuple(cfg["xi_grid"])
    res = rir_param.mu_star(fam, grid, **kw)
    results = {"family": model, "domain": list(fam.domain), **res.to_dict()}
    out = _out_dir(cfg)
    with open(out / "rir_param_family.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["e", "rho_p", "abs_e", "cond_a", "cond_b"])
        for s in res.samples:
            wr.writerow([repr(float(s.e)), repr(float(s.rho_p)), repr(abs(float(s.e))), int(s.cond_a), int(s.cond_b)])
    if cfg.get("plot_script", True):
        (out / "rir_param_plot.gp").write_text(_plot_script("rir_param_family.csv"))
    _write_report(out, "rir_param_report.json", "rir-param", cfg, results, t0)
    return results


def _delta_tf(spec, model: str, params) -> Optional[RationalTF]:
    if spec is None:
        return None
    if "num" in spec:
        return RationalTF(spec["num"], spec["den"])
    fam = models.repressilator_family(params) if model == "repressilator" else models.fhn_family(params)
    eps = spec.get("eps", 0.05)
    xi = (spec["xi"],) if "xi" in spec else rir_param.XI_GRID
    verify = spec.get("verify", eps > 0)
    return rir_param.construct_delta_e(fam, spec["e"], eps=eps, xi_grid=xi, verify=verify).tf


def cmd_simulate(cfg: dict) -> dict:
    t0 = time.perf_counter()
    model, params = _model_params(cfg)
    d = _delta_tf(cfg.get("delta"), model, params)
    ss = models.realize(d) if d is not None else None
    e = static_gain(d) if d is not None else 0.0
    t_final = cfg.get("t_final", 200.0)
    dt = cfg.get("dt", 1e-3)
    tr = models.simulate(model, params, ss, cfg.get("x0"), t_final=t_final, dt=dt)
    osc, amp = models.detect_oscillation(tr, cfg.get("tail_fraction", 0.5), cfg.get("tau_osc", models.TAU_OSC))
    xe = models.model_equilibrium(model, params, e)
    final = tr.x[-1]
    results = {
        "oscillating": osc,
        "tail_amplitude": amp,
        "final_state": final,
        "equilibrium_at_delta0": xe,
        "delta0": e,
        "distance_to_equilibrium": float(np.max(np.abs(final - xe))),
        "positivity_violated": tr.positivity_violated,
        "delta": None if d is None else d.to_dict(),
        "rows": int(tr.t.size),
    }
    out = _out_dir(cfg)
    units = "t [hr]; x [nM]; z, w [nM/hr]" if model == "repressilator" else "model units"
    tr.to_csv(out / "simulate_trajectory.csv", units=units)
    _write_report(out, "simulate_report.json", "simulate", cfg, results, t0)
    return results


COMMANDS = {"rir-fixed": cmd_rir_fixed, "rir-param": cmd_rir_param, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rirtool", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rirtool {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--tf", help="transfer function 'num: c0,c1,...; den: d0,d1,...' (ascending powers)")
        sp.add_argument("--model", choices=["repressilator", "fhn"])
        sp.add_argument("--e-grid", help="parameter grid 'lo,hi,n'")
        sp.add_argument("--t-final", type=float)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or cwd)")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args)
        results = COMMANDS[args.command](cfg)
    except (ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except Divergence as exc:
        log.error("simulation diverged: %s", exc)
        return EXIT_DIVERGENCE
    except RirError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ANALYSIS
    print(json.dumps(_jsonable(results), sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
