"""Command-line front end.

Each job is described by one JSON config.  Effective settings are resolved in
this order, later entries winning: built-in defaults, the ``--config`` file,
``--set key=value`` overrides (dotted keys address nested objects, values are
parsed as JSON when possible), then the dedicated flags (``--f``, ``--cutoff``,
``--tau``, ``--seed``).  Output paths (``out``, ``csv``) are excluded from the
config hash, so relocating outputs does not change it.

Exit codes: 0 success, 1 numerical failure, 2 input error.  Failures print a
JSON object ``{"error": {...}}`` on stderr.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys

import numpy as np

from . import __version__
from .errors import ExprError, InputError, NumericError
from .groups import GroupElement, GroupSpec, sample_element
from .integrate import g_grid
from .irreps import InvariantOperator, basis_offset, enumerate_irreps
from .measures import (NormalizationTable, build_tame_measure, lemma_check, measure_from_json,
                       verify_admissible)
from .spectral import class_expand, evolve, evolve_check, time_series_csv
from .transform import FourierData, default_resolution, fourier, invert, orthogonality_report
from .validation import check_cutoff, check_group, check_holofn

DEFAULTS = {
    "group": ["torus"],
    "measure": {"kind": "gaussian", "tau": 1.0},
    "cutoff": 8,
    "grid": {},
    "seed": 0,
}
OUTPUT_KEYS = ("out", "csv")


class CliArgumentError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliArgumentError(message)


def _set_dotted(cfg: dict, key: str, value):
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            node[p] = {}
        node = node[p]
    node[parts[-1]] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InputError("config must be a JSON object")
        cfg.update(loaded)
    for item in args.set or []:
        if "=" not in item:
            raise InputError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        _set_dotted(cfg, key.strip(), _parse_value(value))
    if args.f is not None:
        cfg["f"] = args.f
    if args.cutoff is not None:
        cfg["cutoff"] = args.cutoff
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.tau is not None:
        cfg["measure"] = {"kind": "gaussian", "tau": args.tau}
    if args.out is not None:
        cfg["out"] = args.out
    if args.csv is not None:
        cfg["csv"] = args.csv
    return cfg


def config_hash(cfg: dict) -> str:
    core = {k: v for k, v in cfg.items() if k not in OUTPUT_KEYS}
    text = json.dumps(core, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# config interpretation -----------------------------------------------------------

def _spec(cfg) -> GroupSpec:
    return check_group(cfg["group"])


def _measure(cfg, spec):
    m = cfg.get("measure")
    if isinstance(m, dict) and "file" in m:
        with open(m["file"], encoding="utf-8") as fh:
            doc = json.load(fh)
        m = doc.get("result", doc).get("measure", doc)
    if not isinstance(m, dict):
        raise InputError("measure must be a JSON object")
    return measure_from_json(spec, m)


def _grid(cfg, spec, measure, cutoff):
    g = cfg.get("grid") or {}
    unknown = set(g) - {"resolution", "radial_cut", "radial_nodes"}
    if unknown:
        raise InputError(f"unknown grid keys {sorted(unknown)}")
    res = g.get("resolution", default_resolution(spec, cutoff))
    if np.any(np.asarray(res) < 2) or g.get("radial_nodes", 32) < 2:
        raise InputError("grid resolutions must be >= 2")
    return g_grid(spec, measure, radial_cut=g.get("radial_cut"), resolution=res,
                  radial_nodes=g.get("radial_nodes", 32), max_weight=cutoff)


def _function(cfg, spec, key="f"):
    if key not in cfg or not isinstance(cfg[key], str):
        raise InputError(f"config key {key!r} must be an expression string")
    return check_holofn(cfg[key], spec)


def _points(cfg, spec):
    pts = cfg.get("points", {"random": 10, "radius": 1.0})
    if isinstance(pts, dict) and "random" in pts:
        return sample_element(spec, int(cfg.get("seed", 0)), float(pts.get("radius", 1.0)),
                              size=int(pts["random"]))
    if isinstance(pts, list) and pts:
        return GroupElement.from_json(spec, pts)
    raise InputError("points must be a nonempty list of elements or {'random': n}")


def _operator(cfg, spec):
    op = cfg.get("operator")
    if op == "casimir":
        kinds = [k.value for k in spec.factors]
        if "sl2" not in kinds:
            raise InputError("casimir needs an SL2 factor")
        return InvariantOperator.casimir(spec, kinds.index("sl2"))
    if op == "laplacian":
        terms = tuple((1.0, (basis_offset(spec, i),) * 2)
                      for i, k in enumerate(spec.factors) if k.value == "torus")
        return InvariantOperator(spec, terms)
    if isinstance(op, dict):
        return InvariantOperator.from_json(spec, op)
    raise InputError("operator must be 'casimir', 'laplacian' or {'side', 'terms'}")


def _cx(v) -> list:
    v = complex(v)
    return [v.real, v.imag]


# commands ------------------------------------------------------------------------------

def cmd_transform(cfg):
    spec = _spec(cfg)
    cutoff = check_cutoff(cfg["cutoff"])
    measure = _measure(cfg, spec)
    f = _function(cfg, spec)
    F = fourier(f, measure, cutoff, _grid(cfg, spec, measure, cutoff))
    return {"fourier": F.to_json()}, F.decay_csv()


def _load_fourier(cfg) -> FourierData:
    path = cfg.get("fourier")
    if not path:
        raise InputError("invert needs config key 'fourier' (path to a transform output)")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    if "result" in doc:
        doc = doc["result"]
    return FourierData.from_json(doc.get("fourier", doc))


def cmd_invert(cfg):
    F = _load_fourier(cfg)
    pts = _points(cfg, F.spec)
    values, tail = invert(F, pts)
    values = np.atleast_1d(values)
    rows = [{"point": i, "value": _cx(v)} for i, v in enumerate(values)]
    csv_text = "point_id,re,im\n" + "".join(f"{i},{v.real!r},{v.imag!r}\n" for i, v in enumerate(values))
    return {"values": rows, "tail_estimate": None if not np.isfinite(tail) else tail}, csv_text


def cmd_plancherel(cfg):
    spec = _spec(cfg)
    cutoff = check_cutoff(cfg["cutoff"])
    measure = _measure(cfg, spec)
    f = _function(cfg, spec)
    F = fourier(f, measure, cutoff, _grid(cfg, spec, measure, cutoff))
    from .transform import plancherel_eval
    series = plancherel_eval(F)
    direct = complex(f(GroupElement.identity(spec)))
    return {"plancherel": _cx(series), "direct": _cx(direct), "abs_error": abs(series - direct),
            "tail_estimate": None if not np.isfinite(F.tail_estimate) else F.tail_estimate}, None


def cmd_ortho_check(cfg):
    spec = _spec(cfg)
    cutoff = check_cutoff(cfg["cutoff"])
    measure = _measure(cfg, spec)
    g = cfg.get("grid") or {}
    grid = g_grid(spec, measure, radial_cut=g.get("radial_cut"),
                  resolution=g.get("resolution", default_resolution(spec, cutoff)),
                  radial_nodes=g.get("radial_nodes", 64), max_weight=cutoff)
    rep = orthogonality_report(measure, cutoff, grid)
    out = rep.to_json()
    out["tol"] = cfg.get("tol", 1e-4)
    out["passed"] = bool(rep.max_offdiag <= out["tol"] and rep.max_diag_error <= out["tol"])
    return out, None


def cmd_class_expand(cfg):
    spec = _spec(cfg)
    cutoff = check_cutoff(cfg["cutoff"])
    measure = _measure(cfg, spec)
    f = _function(cfg, spec)
    exp = class_expand(f, measure, cutoff, _grid(cfg, spec, measure, cutoff), tol=cfg.get("tol", 1e-6))
    return {"expansion": exp.to_json()}, None


def cmd_evolve(cfg):
    spec = _spec(cfg)
    cutoff = check_cutoff(cfg["cutoff"])
    measure = _measure(cfg, spec)
    f = _function(cfg, spec)
    D = _operator(cfg, spec)
    times = [float(t) for t in cfg.get("times", [0.0])]
    state = evolve(f, D, times, measure, cutoff, _grid(cfg, spec, measure, cutoff))
    pts = _points(cfg, spec)
    series = []
    for t in times:
        vals = np.atleast_1d(state.evaluate(pts, t))
        res = np.atleast_1d(evolve_check(state, pts, t))
        series.append({"t": t, "values": [_cx(v) for v in vals],
                       "max_residual": float(np.max(res))})
    return {"operator": D.to_json(), "series": series}, time_series_csv(state, pts)


def cmd_measure_build(cfg):
    spec = _spec(cfg)
    family = cfg.get("family")
    if not isinstance(family, list) or not family:
        raise InputError("measure build needs a nonempty 'family' list of expressions")
    fns = [check_holofn(src, spec) for src in family]
    m = build_tame_measure(spec, fns, int(cfg.get("horizon", 6)), h=float(cfg.get("h", 1.0)),
                           resolution=int(cfg.get("resolution", 6)))
    table = NormalizationTable(m)
    cutoff = check_cutoff(cfg.get("cutoff", 2))
    for label in enumerate_irreps(spec, cutoff):
        table.entry(label)
    return {"measure": m.to_json(), "lemma": lemma_check(m), "construction": m.info}, table.to_csv()


def cmd_measure_verify(cfg):
    spec = _spec(cfg)
    cutoff = check_cutoff(cfg["cutoff"])
    measure = _measure(cfg, spec)
    rep = verify_admissible(measure, spec, cutoff, tol=float(cfg.get("tol", 1e-8)))
    return rep.to_json(), None


COMMANDS = {
    "transform": cmd_transform,
    "invert": cmd_invert,
    "plancherel": cmd_plancherel,
    "ortho-check": cmd_ortho_check,
    "class-expand": cmd_class_expand,
    "evolve": cmd_evolve,
    "measure build": cmd_measure_build,
    "measure verify": cmd_measure_verify,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holofourier", description="Holomorphic Fourier analysis on complex reductive groups.")
    parser.add_argument("--version", action="version", version=f"holofourier {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON job file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--f", help="function expression")
        p.add_argument("--cutoff", type=int)
        p.add_argument("--tau", type=float, help="use a Gaussian radial measure with this width")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="JSON report path (default: stdout)")
        p.add_argument("--csv", help="CSV side output path")

    for name in ("transform", "invert", "plancherel", "ortho-check", "class-expand", "evolve"):
        common(sub.add_parser(name))
    measure = sub.add_parser("measure")
    msub = measure.add_subparsers(dest="action", required=True, parser_class=_Parser)
    common(msub.add_parser("build"))
    common(msub.add_parser("verify"))
    return parser


def _error_payload(exc, code):
    err = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ExprError) and exc.position is not None:
        err["position"] = exc.position
    return {"error": err, "version": __version__}


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        name = args.command if args.command != "measure" else f"measure {args.action}"
        cfg = resolve_config(args)
        result, csv_text = COMMANDS[name](cfg)
        report = {"tool": "holofourier", "version": __version__, "command": name,
                  "config_hash": config_hash(cfg),
                  "config": {k: v for k, v in cfg.items() if k not in OUTPUT_KEYS},
                  "result": _jsonable(result)}
        text = json.dumps(report, indent=2) + "\n"
        if cfg.get("out"):
            _write(cfg["out"], text)
        else:
            sys.stdout.write(text)
        if csv_text is not None and cfg.get("csv"):
            header = f"# holofourier {__version__} config_hash={report['config_hash']}\n"
            _write(cfg["csv"], header + csv_text)
        if name == "measure verify" and not result["passed"]:
            return 1
        if name == "ortho-check" and not result["passed"]:
            return 1
        return 0
    except InputError as exc:
        sys.stderr.write(json.dumps(_error_payload(exc, 2)) + "\n")
        return 2
    except NumericError as exc:
        sys.stderr.write(json.dumps(_error_payload(exc, 1)) + "\n")
        return 1
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        sys.stderr.write(json.dumps(_error_payload(exc, 2)) + "\n")
        return 2
    except ArithmeticError as exc:
        sys.stderr.write(json.dumps(_error_payload(exc, 1)) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
