"""Command-line front end.

Every subcommand reads its parameters from flags, optionally layered over
a TOML or JSON config file (flags win), writes its reports and data files
into an output directory and finishes with ``manifest.json`` listing each
file with its SHA-256 hash.

Exit status: 0 when every check of the run passes, 2 when a certificate
or assertion fails, 1 on usage or configuration errors.
"""

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from eqyamabe import __version__
from eqyamabe.errors import EqYamabeError, NonConvergenceError
from eqyamabe.geometry.io import write_csv, write_json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["main", "run", "COMMANDS", "ConfigError", "OUTPUT_ENV"]

logger = logging.getLogger("eqyamabe.cli")

OUTPUT_ENV = "EQYAMABE_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class ConfigError(ValueError):
    """Invalid configuration value; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------- parameter tables
#
# name -> (kind, default, help). Kinds: pos (> 0), nonneg (>= 0), float,
# res (int >= 4), int (>= 0), tol (in (0, 1)), bool, list (positive
# floats), flist (any floats), str, path, or a tuple of allowed strings.

MODELS = ("sphere", "torus", "clifford")

COMMON = {
    "seed": ("int", 0, "seed recorded in the manifest (all commands are deterministic)"),
}

COMMANDS = {
    "curvature": {
        "model": (MODELS, "sphere", "model metric"),
        "n": ("int", 3, "dimension"),
        "radius": ("pos", 1.0, "sphere radius"),
        "eps": ("float", 0.0, "warp perturbation of the clifford model"),
        "resolution": ("res", 64, "samples per open axis"),
        "pole_band": ("nonneg", 0.4, "excluded margin at polar singularities"),
        "lower_bound": ("float", None, "report points with scalar curvature below this"),
        "rtol": ("tol", None, "fail when the sup relative error against the exact value exceeds this"),
    },
    "quotient": {
        "model": (MODELS, "sphere", "model metric"),
        "n": ("int", 3, "dimension"),
        "radius": ("pos", 1.0, "sphere radius"),
        "eps": ("float", 0.0, "warp perturbation of the clifford model"),
        "resolution": ("res", 64, "samples per open axis"),
        "pole_band": ("nonneg", 0.0, "excluded margin at polar singularities"),
        "amplitude": ("float", 0.0, "test function 1 + amplitude * cos(mode * x_0)"),
        "mode": ("int", 1, "frequency of the test function"),
    },
    "bend": {
        "q": ("int", 3, "codimension, at least 3"),
        "theta0": ("pos", 0.1, "initial bending angle"),
        "r0": ("pos", 20.0, "tube radius where bending starts"),
        "eps2": ("tol", 1e-3, "allowed curvature defect on step 1"),
        "mu": ("pos", 1.0, "shrink factor in (0, 1]"),
        "s_g_lower": ("float", 0.0, "lower bound of the ambient scalar curvature"),
    },
    "homotopy": {
        "q": ("int", 3, "codimension"),
        "radii": ("list", [0.2, 0.1, 0.05], "sphere radii of the sweep"),
        "mu": ("list", [1.0, 0.5, 0.25], "collar shrink factors"),
        "pi": ("flist", [0.5, -0.3, 0.0], "second fundamental form of the core circle, one value per normal"),
        "gamma": ("flist", [0.5, 0.4], "normal connection, upper-triangle entries of the antisymmetric block"),
        "sphere_resolution": ("res", 64, "samples per polar angle"),
        "band": ("pos", 0.7, "polar margin of the curvature measurement"),
    },
    "reduce": {
        "model": (("s3", "sphere", "clifford", "rotational", "cylinder", "csv"), "s3", "orbit-space model"),
        "n": ("int", 3, "dimension of sphere or cylinder models"),
        "eps": ("float", 0.0, "warp perturbation (clifford, rotational)"),
        "length": ("pos", 2.0, "cylinder length"),
        "profile": ("path", None, "(t, w, s) table for model csv"),
        "endpoints": (("cap-cap", "cap-boundary", "boundary-cap", "boundary-boundary"), "boundary-boundary", "endpoint kinds of a csv profile"),
        "resolution": ("res", 400, "cells on the orbit space"),
        "tol": ("tol", 1e-8, "solver tolerance"),
        "max_iter": ("int", 50000, "iteration budget per stage"),
        "continuation": ("bool", False, "solve a subcritical exponent ladder first"),
        "init_amplitude": ("float", 0.3, "initial function 1 + amplitude * cos(pi (t - t0) / (t1 - t0))"),
    },
    "surgery-demo": {
        "n": ("int", 5, "dimension of the spheres"),
        "q": ("int", 3, "codimension of the surgery"),
        "l": ("int", 0, "extra S^(n-q+1) x S^(q-1) summands"),
        "m": ("int", 0, "extra S^n summands"),
        "theta0": ("pos", 0.1, "bending angle"),
        "r0": ("pos", 20.0, "tube radius where bending starts"),
        "eps2": ("tol", 1e-3, "allowed curvature defect on step 1"),
        "delta": ("tol", 0.5, "neck parameter delta"),
        "eps": ("list", [1.0, 0.5, 0.25], "neck parameters epsilon of the volume sweep"),
        "volume_sweep": ("bool", True, "assemble the neck for each epsilon (codimension 3 and 4)"),
    },
    "invariants": {
        "action": (("lambda", "hebey-vaugon", "kobayashi", "disjoint-union", "surgery-bound", "section4"), None, "formula"),
        "n": ("int", 3, "dimension"),
        "orbit": ("float", 1.0, "minimal orbit cardinality (inf allowed)"),
        "s_min": ("float", -1.0, "minimum scalar curvature"),
        "s_max": ("float", -1.0, "maximum scalar curvature"),
        "vol": ("pos", 1.0, "volume"),
        "y1": ("float", 0.0, "first Yamabe constant"),
        "y2": ("float", 0.0, "second Yamabe constant"),
        "y0": ("float", 0.0, "Yamabe constant before surgery"),
        "q": ("int", 3, "codimension"),
        "l": ("int", 0, "extra S^(n-q+1) x S^(q-1) summands"),
        "m": ("int", 0, "extra S^n summands"),
    },
    "continuity": {
        "kmax": ("int", 4, "amplitudes 2^-k for k = 0..kmax"),
        "resolution": ("res", 400, "cells on the orbit space"),
        "tol": ("tol", 1e-8, "solver tolerance"),
        "min_ratio": ("pos", 1.5, "required shrink factor of successive gaps"),
        "continuation": ("bool", True, "subcritical exponent ladder"),
    },
}


def _validate(name, kind, value):
    if value is None:
        return None
    try:
        if isinstance(kind, tuple):
            if value not in kind:
                raise ConfigError(name, f"must be one of {', '.join(kind)}, got {value!r}")
            return value
        if kind == "bool":
            if isinstance(value, str):
                low = value.lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ConfigError(name, f"not a boolean: {value!r}")
                return low in ("true", "1", "yes")
            return bool(value)
        if kind in ("str", "path"):
            return str(value)
        if kind in ("list", "flist"):
            vals = [float(v) for v in (value if isinstance(value, (list, tuple)) else [value])]
            if not vals:
                raise ConfigError(name, "needs at least one value")
            if kind == "list" and not all(v > 0 and math.isfinite(v) for v in vals):
                raise ConfigError(name, "values must be positive")
            return vals
        if kind in ("res", "int"):
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise ConfigError(name, f"must be an integer, got {value!r}")
            v = int(float(value))
            if kind == "res" and v < 4:
                raise ConfigError(name, f"resolution must be at least 4, got {v}")
            if v < 0:
                raise ConfigError(name, f"must be nonnegative, got {v}")
            return v
        v = float(value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(name, f"cannot parse {value!r}") from None
    if math.isnan(v):
        raise ConfigError(name, "is NaN")
    if kind == "pos" and not v > 0:
        raise ConfigError(name, f"must be positive, got {v}")
    if kind == "nonneg" and not v >= 0:
        raise ConfigError(name, f"must be nonnegative, got {v}")
    if kind == "tol" and not 0 < v < 1:
        raise ConfigError(name, f"must lie in (0, 1), got {v}")
    return v


def load_config(path):
    """Read a TOML (``.toml``) or JSON config file into a flat dict.

    Parameters may sit at the top level or under a ``parameters`` table.
    """
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text.decode("utf-8"))
        else:
            data = tomllib.loads(text.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a table")
    flat = {k: v for k, v in data.items() if k != "parameters"}
    flat.update(data.get("parameters", {}) or {})
    return {k.replace("-", "_"): v for k, v in flat.items()}


def resolve(command, flags, config=None):
    """Merge defaults, config values and flags, then validate.

    Returns
    -------
    dict
        ``command``, ``parameters``, ``output_dir`` and ``format``.
    """
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    table = {**COMMANDS[command], **COMMON}
    config = dict(config or {})
    cfg_command = config.pop("command", None)
    if cfg_command is not None and cfg_command != command:
        raise ConfigError("command", f"config is for {cfg_command!r}, not {command!r}")
    out_dir = flags.pop("output_dir", None) or config.pop("output_dir", None)
    fmt = flags.pop("format", None) or config.pop("format", None) or "json"
    if fmt not in ("json", "csv"):
        raise ConfigError("format", f"must be json or csv, got {fmt!r}")
    unknown = sorted(set(config) - set(table))
    if unknown:
        raise ConfigError(unknown[0], f"unknown parameter for {command}")
    params = {}
    for name, (kind, default, _) in table.items():
        value = flags.get(name)
        if value is None:
            value = config.get(name, default)
        params[name] = _validate(name, kind, value)
    if command == "invariants" and params["action"] is None:
        raise ConfigError("action", "choose a formula")
    if out_dir is None:
        out_dir = os.environ.get(OUTPUT_ENV) or str(Path("eqyamabe-out") / command)
    return {"command": command, "parameters": params, "output_dir": str(out_dir), "format": fmt}


# ---------------------------------------------------------------- run context


class _Outputs:
    def __init__(self, root, fmt):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.fmt = fmt
        self.files = []

    def json(self, name, payload):
        path = write_json(self.root / name, payload)
        self.files.append(path)
        if self.fmt == "csv":
            flat = _flatten(payload)
            csv_path = write_csv(self.root / (Path(name).stem + ".csv"), ["key", "value"],
                                 [list(flat), [_scalar(v) for v in flat.values()]])
            self.files.append(csv_path)
        return path

    def csv(self, name, columns):
        path = write_csv(self.root / name, list(columns), [np.asarray(c) for c in columns.values()])
        self.files.append(path)
        return path


def _scalar(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return str(v)


def _flatten(obj, prefix=""):
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, (list, tuple)) and obj and isinstance(obj[0], (dict, list, tuple)):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out[prefix[:-1]] = " ".join(str(_scalar(v)) for v in np.ravel(obj))
    else:
        out[prefix[:-1]] = obj
    return out


def _sha256(path):
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out, config, status, wall, summary):
    files = [
        {"path": p.relative_to(out.root).as_posix(), "sha256": _sha256(p), "bytes": p.stat().st_size}
        for p in out.files
    ]
    payload = {
        "command": config["command"],
        "parameters": config["parameters"],
        "format": config["format"],
        "version": __version__,
        "wall_time_s": wall,
        "exit_status": status,
        "summary": summary,
        "files": files,
    }
    return write_json(out.root / "manifest.json", payload)


# ---------------------------------------------------------------- commands


def _model_metric(p):
    from eqyamabe.geometry.models import flat_torus, round_sphere, warped_product
    from eqyamabe.reduction.profile import clifford_spec

    if p["model"] == "sphere":
        if p["n"] < 2:
            raise ConfigError("n", "sphere needs n >= 2")
        band = p["pole_band"]
        metric = round_sphere(p["n"], p["radius"], p["resolution"], 8, band)
        return metric, p["n"] * (p["n"] - 1) / p["radius"] ** 2
    if p["model"] == "torus":
        if p["n"] < 1:
            raise ConfigError("n", "torus needs n >= 1")
        return flat_torus([2.0 * math.pi] * p["n"], p["resolution"]), 0.0
    metric = warped_product(clifford_spec(p["eps"]), p["resolution"], 8, base_band=p["pole_band"] or None)
    return metric, (6.0 if p["eps"] == 0 else None)


def cmd_curvature(p, out):
    from eqyamabe.geometry.curvature import curvature_report, scalar_curvature

    metric, exact = _model_metric(p)
    s = scalar_curvature(metric)
    report = curvature_report(metric, s, p["lower_bound"])
    m = metric.chart.interior_mask
    ok = True
    if exact is not None:
        err = float(np.max(np.abs(s[m] - exact))) / max(abs(exact), 1.0)
        report["exact"] = exact
        report["sup_rel_error"] = err
        if p["rtol"] is not None:
            report["rtol"] = p["rtol"]
            ok &= err <= p["rtol"]
    if p["lower_bound"] is not None:
        ok &= report["violation_count"] == 0
    report["passed"] = bool(ok)
    x0 = metric.chart.axes[0]
    masked = np.where(m, s, np.nan)
    other = tuple(range(1, s.ndim))
    rows = np.any(m, axis=other) if other else m
    kept = masked[rows]
    smin = np.nanmin(kept, axis=other) if other else kept
    smax = np.nanmax(kept, axis=other) if other else kept
    out.json("curvature.json", report)
    out.csv("scalar_profile.csv", {metric.chart.labels[0]: x0[rows], "s_min": smin, "s_max": smax})
    return ok, {"min": report["min"], "max": report["max"], "passed": report["passed"]}


def cmd_quotient(p, out):
    from eqyamabe.geometry.integrals import yamabe_quotient
    from eqyamabe.reduction.averaging import evaluate_constant

    metric, _ = _model_metric(p)
    if metric.dim < 3:
        raise ConfigError("n", "the Yamabe quotient needs dimension >= 3")
    x0 = metric.chart.mesh()[0]
    lo, hi = metric.chart.bounds[0]
    phi = 1.0 + p["amplitude"] * np.cos(p["mode"] * 2.0 * math.pi * (x0 - lo) / (hi - lo))
    q = yamabe_quotient(metric, phi)
    report = {"model": metric.name, "quotient": q, "constant_quotient": evaluate_constant(metric)}
    out.json("quotient.json", report)
    return True, {"quotient": q}


def cmd_bend(p, out):
    from eqyamabe.neck.bend import build_bend_curve, certify_bend, shrink_curve

    if p["q"] < 3:
        raise ConfigError("q", "bending needs codimension q >= 3")
    if p["mu"] > 1:
        raise ConfigError("mu", "shrink factor must lie in (0, 1]")
    curve = build_bend_curve(p["q"], p["theta0"], p["r0"], p["eps2"])
    curve = shrink_curve(curve, p["mu"])
    rep = certify_bend(curve, s_g_lower=p["s_g_lower"], raise_on_failure=False)
    out.csv("bend_curve.csv", curve.to_columns())
    out.json("bend_certificate.json", rep)
    return bool(rep["passed"]), {"passed": rep["passed"], "bump_count": rep["bump_count"]}


def _homotopy_spec(q, pi, gamma, r, sphere_resolution):
    from eqyamabe.geometry.chart import GridChart
    from eqyamabe.geometry.metric import MetricField
    from eqyamabe.neck.homotopy import HomotopyRegionSpec, tube_boundary_perturbation

    if len(pi) != q:
        raise ConfigError("pi", f"needs {q} values, got {len(pi)}")
    iu = np.triu_indices(q, 1)
    if len(gamma) > len(iu[0]):
        raise ConfigError("gamma", f"at most {len(iu[0])} values for q={q}")
    Pi = np.zeros((q, 1, 1))
    Pi[:, 0, 0] = pi
    Ga = np.zeros((1, q, q))
    for (i, j), v in zip(zip(*iu), gamma):
        Ga[0, i, j], Ga[0, j, i] = v, -v
    chart = GridChart(((0.0, 2 * math.pi),), (4,), (True,), labels=("x",))
    gW = MetricField.from_function(chart, lambda x: np.ones(np.shape(x) + (1, 1)), name="S^1(1)")
    pert = tube_boundary_perturbation(
        lambda x: np.broadcast_to(Pi, np.shape(x) + Pi.shape), lambda x: np.broadcast_to(Ga, np.shape(x) + Ga.shape)
    )
    return HomotopyRegionSpec(gW, q, r, pert, sphere_resolution=sphere_resolution, label="S^1 core")


def cmd_homotopy(p, out):
    from eqyamabe.neck.homotopy import certify_homotopy

    if p["q"] < 3:
        raise ConfigError("q", "needs q >= 3")
    if any(m > 1 for m in p["mu"]):
        raise ConfigError("mu", "shrink factors must lie in (0, 1]")
    spec = _homotopy_spec(p["q"], p["pi"], p["gamma"], p["radii"][-1], p["sphere_resolution"])
    rep = certify_homotopy(spec, p["radii"], tuple(p["mu"]), band=p["band"])
    out.json("homotopy.json", rep)
    rows = rep["sweep"]
    out.csv("homotopy_sweep.csv", {"r": [r["r"] for r in rows], "nu": [r["nu"] for r in rows],
                                   "min_s_r2": [r["min_s_r2"] for r in rows]})
    return bool(rep["passed"]), {"passed": rep["passed"], "per_radius_min": rep["per_radius_min"]}


def _reduce_profile(p):
    from eqyamabe.geometry.models import FiberSpec, WarpedProductSpec
    from eqyamabe.reduction.profile import (
        OrbitProfile,
        clifford_spec,
        cylinder_spec,
        reduce_cohomogeneity_one,
        sphere_spec,
    )

    model = p["model"]
    if model == "csv":
        if not p["profile"]:
            raise ConfigError("profile", "model csv needs a profile table")
        kinds = tuple("smooth-cap" if k == "cap" else "boundary" for k in p["endpoints"].split("-"))
        try:
            return OrbitProfile.from_csv(p["profile"], p["n"], kinds)
        except OSError as exc:
            raise ConfigError("profile", f"cannot read {p['profile']}: {exc.strerror}") from None
    if p["n"] < 3:
        raise ConfigError("n", "needs n >= 3")
    if model == "s3":
        spec = sphere_spec(3)
    elif model == "sphere":
        spec = sphere_spec(p["n"])
    elif model == "clifford":
        spec = clifford_spec(p["eps"])
    elif model == "cylinder":
        spec = cylinder_spec(p["n"], p["length"])
    else:
        eps = p["eps"]
        spec = WarpedProductSpec(
            interval=(0.0, math.pi),
            warps=(lambda t: np.sin(t) * (1.0 + eps * np.sin(t) ** 2),),
            fibers=(FiberSpec("sphere", 2),),
            endpoint_kind=("smooth-cap", "smooth-cap"),
            name=f"rotational(eps={eps:g})",
        )
    return reduce_cohomogeneity_one(spec, p["resolution"])


def cmd_reduce(p, out):
    from eqyamabe.invariants import lambda_n
    from eqyamabe.reduction.minimize import minimize_reduced

    profile = _reduce_profile(p)
    out.csv("profile.csv", {"t": profile.t, "w": profile.weight, "s": profile.scalar})
    t0, t1 = profile.interval
    amp = p["init_amplitude"]
    if abs(amp) >= 1:
        raise ConfigError("init_amplitude", "must lie in (-1, 1) to keep the initial function positive")
    init = 1.0 + amp * np.cos(math.pi * (profile.t - t0) / (t1 - t0))
    try:
        est = minimize_reduced(profile, init, p["tol"], p["max_iter"], p["continuation"] or None)
    except NonConvergenceError as exc:
        out.csv("history.csv", {"iteration": np.arange(len(exc.history)), "value": exc.history})
        out.json("estimate.json", {"converged": False, "error": str(exc), "model": profile.name})
        return False, {"converged": False}
    rep = est.to_dict()
    rep.update({"model": profile.name, "n": profile.n, "converged": True, "lambda_n": lambda_n(profile.n)})
    out.json("estimate.json", rep)
    out.csv("minimizer.csv", {"t": est.t, "phi": est.minimizer})
    return True, {"value": est.value, "residual": est.residual}


def cmd_surgery_demo(p, out):
    from eqyamabe.invariants import section4_examples
    from eqyamabe.neck.assembly import assemble_surgered_metric
    from eqyamabe.neck.bend import build_bend_curve, certify_bend
    from eqyamabe.geometry.models import flat_torus

    chain = section4_examples(p["n"], p["q"], p["l"], p["m"])
    summary = {"value": chain["value"], "chain_valid": chain["valid"]}
    ok = bool(chain["valid"])
    report = {"chain": chain}
    if p["q"] >= 3:
        curve = build_bend_curve(p["q"], p["theta0"], p["r0"], p["eps2"])
        cert = certify_bend(curve, raise_on_failure=False)
        report["bend"] = cert
        out.csv("bend_curve.csv", curve.to_columns())
        ok &= bool(cert["passed"])
        summary["bend_passed"] = cert["passed"]
        if p["volume_sweep"] and p["q"] in (3, 4):
            q = p["q"]
            spec = _homotopy_spec(q, [0.01] + [0.0] * (q - 1), [0.01], 0.1, 32 if q == 3 else 12)
            outer = flat_torus((1.0,) * 4, 4)
            vols = []
            for e in p["eps"]:
                asm = assemble_surgered_metric(outer, curve, spec, p["delta"], e, check_outer_curvature=False)
                vols.append(asm.volumes)
            eps = np.array(p["eps"])
            vs = np.array([v["S"] for v in vols])
            slope = float(np.polyfit(np.log(eps), np.log(vs), 1)[0]) if len(eps) > 1 else None
            report["volume_sweep"] = {"model": "core S^1(1) in a flat 4-torus", "eps": eps, "volumes": vols,
                                      "fitted_exponent": slope}
            out.csv("volume_sweep.csv", {"eps": eps, "vol_S": vs, "vol_T": [v["T"] for v in vols],
                                         "vol_N": [v["N"] for v in vols]})
            summary["fitted_exponent"] = slope
    out.json("surgery_demo.json", report)
    return ok, summary


def cmd_invariants(p, out):
    from eqyamabe import invariants as inv

    a, n = p["action"], p["n"]
    ok = True
    try:
        if a == "lambda":
            res = {"n": n, "value": inv.lambda_n(n)}
        elif a == "hebey-vaugon":
            k = p["orbit"]
            res = inv.hebey_vaugon_bound(n, math.inf if math.isinf(k) else int(k)).to_dict()
        elif a == "kobayashi":
            lo, hi = inv.kobayashi_interval(p["s_min"], p["s_max"], p["vol"], n)
            res = {"n": n, "lower": lo, "upper": hi}
        elif a == "disjoint-union":
            res = {"n": n, "value": inv.disjoint_union_yamabe(p["y1"], p["y2"], n)}
        elif a == "surgery-bound":
            res = inv.surgery_lower_bound(p["y0"], p["q"], n).to_dict()
            ok = res["valid"]
        else:
            res = inv.section4_examples(n, p["q"], p["l"], p["m"])
            ok = res["valid"]
    except ValueError as exc:
        raise ConfigError(a, str(exc)) from None
    res["action"] = a
    out.json("invariants.json", res)
    return bool(ok), {k: v for k, v in res.items() if k in ("value", "valid", "lower", "upper")}


def cmd_continuity(p, out):
    from eqyamabe.reduction.continuity import clifford_family, continuity_experiment

    profiles, limit = clifford_family(p["kmax"], p["resolution"])
    rep = continuity_experiment(profiles, limit, tol=p["tol"], continuation=p["continuation"])
    passed = rep["monotone"] and (rep["min_ratio"] is None or rep["min_ratio"] >= p["min_ratio"])
    rep["passed"] = bool(passed)
    rep["required_ratio"] = p["min_ratio"]
    out.json("continuity.json", rep)
    k = np.arange(p["kmax"] + 1)
    out.csv("continuity.csv", {"k": k, "amplitude": 2.0**-k, "value": rep["values"], "gap": rep["gaps"]})
    return bool(passed), {"passed": passed, "min_ratio": rep["min_ratio"]}


HANDLERS = {
    "curvature": cmd_curvature,
    "quotient": cmd_quotient,
    "bend": cmd_bend,
    "homotopy": cmd_homotopy,
    "reduce": cmd_reduce,
    "surgery-demo": cmd_surgery_demo,
    "invariants": cmd_invariants,
    "continuity": cmd_continuity,
}


def run(config):
    """Execute a resolved config and write its artifacts.

    Returns
    -------
    int
        Exit status.
    """
    out = _Outputs(config["output_dir"], config["format"])
    start = time.perf_counter()
    try:
        ok, summary = HANDLERS[config["command"]](config["parameters"], out)
    except ConfigError:
        raise
    except EqYamabeError as exc:
        ok, summary = False, {"error": f"{type(exc).__name__}: {exc}"}
        report = getattr(exc, "report", None)
        out.json("error.json", {"error": summary["error"], "report": report})
    status = EXIT_OK if ok else EXIT_FAILED
    manifest = _write_manifest(out, config, status, time.perf_counter() - start, summary)
    print(json.dumps({"command": config["command"], "status": status, "summary": _jsonable(summary),
                      "manifest": str(manifest)}, sort_keys=True))
    if status:
        print(f"check failed; see {out.root}", file=sys.stderr)
    return status


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="eqyamabe", description="Equivariant Yamabe toolkit experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, table in COMMANDS.items():
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        if name == "invariants":
            sp.add_argument("action", nargs="?", choices=table["action"][0], default=None)
        sp.add_argument("--config", help="TOML or JSON file with parameters; flags override it")
        sp.add_argument("--output-dir", help=f"output directory (default: ${OUTPUT_ENV} or ./eqyamabe-out/<command>)")
        sp.add_argument("--format", choices=("json", "csv"), help="report format (data files are always CSV)")
        sp.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        for pname, (kind, default, help_) in {**table, **COMMON}.items():
            if name == "invariants" and pname == "action":
                continue
            flag = "--" + pname.replace("_", "-")
            hint = f"{help_} (default: {default})"
            if kind == "bool":
                sp.add_argument(flag, dest=pname, action=argparse.BooleanOptionalAction, default=None, help=hint)
            elif kind in ("list", "flist"):
                sp.add_argument(flag, dest=pname, nargs="+", default=None, help=hint)
            elif isinstance(kind, tuple):
                sp.add_argument(flag, dest=pname, choices=kind, default=None, help=hint)
            else:
                sp.add_argument(flag, dest=pname, default=None, help=hint)
    return parser


def main(argv=None):
    """Console entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = vars(args)
    command = flags.pop("command")
    verbose = flags.pop("verbose", False)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    cfg_path = flags.pop("config", None)
    try:
        config = load_config(cfg_path) if cfg_path else {}
        resolved = resolve(command, flags, config)
        return run(resolved)
    except ConfigError as exc:
        print(f"eqyamabe {command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
