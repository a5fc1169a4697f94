"""Command-line front end.

    cca <subcommand> --config <path> [--out <path>] [--format csv|json]

Configs are flat ``key = value`` files with ``#`` comments. Sites are
1-based on the command line and in all outputs. Errors are written to
stderr as a one-line JSON record; the exit status is 2 for config errors,
1 for library errors and 0 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import experiments
from .dynamics import TimeGrid, average_fidelity, evolve_amplitude
from .errors import CcaError, ConfigError
from .jch import JchSpec, atomic_transfer, polariton_transfer, solve
from .lattice import ModularSpec, StaggeredSpec, UniformBulkSpec, build_field
from .spectral import (
    band_gap,
    diagonalize,
    identify_bound_pair,
    perturbative_bound_pair,
    perturbative_bound_states,
)

COMMANDS = ("spectrum", "bound-states", "dynamics", "jch-dynamics", "sweep")
FORMATS = ("csv", "json")
PRESETS = ("fig3", "fig4", "fig5", "fig6", "fig7")
TOPOLOGIES = ("staggered", "uniform_bulk", "modular")

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _scalar(text: str):
    if _NUMBER.match(text):
        if re.match(r"^[+-]?\d+$", text):
            return int(text)
        return float(text)
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "+inf", "-inf", "nan"):
        return float(low)
    return text


def _typed(text: str):
    if "," in text:
        return [_scalar(p.strip()) for p in text.split(",") if p.strip() != ""]
    return _scalar(text)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


# key -> (kind, check, description); kind is int, float, str or a tuple of choices
def _in(lo, hi):
    return lambda x: lo <= x <= hi


def _ge(lo):
    return lambda x: x >= lo


def _gt(lo):
    return lambda x: x > lo


_KEYS = {
    "topology": (TOPOLOGIES, None, ""),
    "n": (int, _ge(2), "an integer >= 2"),
    "eta": (float, _in(-1.0, 1.0), "in [-1, 1]"),
    "j": (float, _gt(0.0), "> 0"),
    "j1": (float, _ge(0.0), ">= 0"),
    "j2": (float, _ge(0.0), ">= 0"),
    "m": ("int_list", _ge(1), "integers >= 1"),
    "j_mod": ("float_list", _ge(0.0), ">= 0"),
    "source": (int, _ge(1), "a site >= 1"),
    "target": (int, _ge(1), "a site >= 1"),
    "t_start": (float, _ge(0.0), ">= 0"),
    "t_end": (float, _gt(0.0), "> 0"),
    "n_points": (int, _ge(2), "an integer >= 2"),
    "g": (float, _ge(0.0), ">= 0"),
    "omega_a": ("omega", None, "a number, 'even' or 'odd'"),
    "protocol": (("atomic", "polariton"), None, ""),
    "parity": (int, lambda x: x in (1, -1), "+1 or -1"),
    "preset": (PRESETS, None, ""),
    "ratios": ("float_list", lambda x: 0 < x <= 1, "in (0, 1]"),
    "sizes": ("int_list", _ge(2), "integers >= 2"),
    "model": (("staggered", "uniform_bulk"), None, ""),
    "length": (int, _ge(2), "an integer >= 2"),
    "budget": (int, _ge(1000), "an integer >= 1000"),
}

_FIELD_KEYS = {"topology", "n", "eta", "j", "j1", "j2", "m", "j_mod"}
_TIME_KEYS = {"t_start", "t_end", "n_points"}
_ALLOWED = {
    "spectrum": _FIELD_KEYS,
    "bound-states": _FIELD_KEYS,
    "dynamics": _FIELD_KEYS | _TIME_KEYS | {"source", "target"},
    "jch-dynamics": _FIELD_KEYS | _TIME_KEYS | {"g", "omega_a", "protocol", "parity"},
    "sweep": set(_KEYS),
}


def _coerce(key: str, value, line: int):
    kind, check, desc = _KEYS[key]

    def bad(msg, code="out_of_range"):
        return ConfigError(f"{key}: {msg}", line, key, code)

    if isinstance(kind, tuple):
        if value not in kind:
            raise bad(f"expected one of {', '.join(kind)}, got {value!r}", "invalid_value")
        return value
    if kind == "omega":
        if value in ("even", "odd"):
            return value
        if not _is_num(value) or not math.isfinite(value):
            raise bad(f"expected {desc}, got {value!r}", "invalid_value")
        return float(value)
    if kind in ("int_list", "float_list"):
        items = value if isinstance(value, list) else [value]
        out = []
        for v in items:
            if not _is_num(v) or (kind == "int_list" and not float(v).is_integer()):
                raise bad(f"expected {desc}, got {v!r}", "invalid_value")
            v = int(v) if kind == "int_list" else float(v)
            if not check(v):
                raise bad(f"must be {desc}, got {v}")
            out.append(v)
        if not out:
            raise bad("empty list", "invalid_value")
        return out if isinstance(value, list) else out[0]
    if isinstance(value, list) or not _is_num(value):
        raise bad(f"expected a number, got {value!r}", "invalid_value")
    if kind is int:
        if not float(value).is_integer():
            raise bad(f"expected an integer, got {value!r}", "invalid_value")
        value = int(value)
    else:
        value = float(value)
        if not math.isfinite(value):
            raise bad(f"must be finite, got {value}")
    if not check(value):
        raise bad(f"must be {desc}, got {value}")
    return value


@dataclass
class RunConfig:
    command: str | None
    params: dict
    lines: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "csv"

    def get(self, key, default=None):
        return self.params.get(key, default)

    def require(self, key):
        if key not in self.params:
            raise ConfigError(f"missing required key {key!r}", None, key, "missing_key")
        return self.params[key]

    def error(self, key, message, code="invalid_value") -> ConfigError:
        return ConfigError(message, self.lines.get(key), key, code)


def parse_config(text: str, command: str | None = None) -> RunConfig:
    """Parse ``key = value`` lines into a typed :class:`RunConfig`.

    Range and type checks run per key; cross-key checks (N parity against
    the topology) and, when ``command`` is given, the allowed-key schema run
    afterwards. Every failure names the line and key.
    """
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", None, None, "unknown_command")
    params, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno, None, "syntax")
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno, key or None,
                              "syntax")
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, key, "unknown_key")
        if key in params:
            raise ConfigError(f"duplicate key {key!r}", lineno, key, "duplicate_key")
        params[key] = _coerce(key, _typed(value), lineno)
        lines[key] = lineno
    cfg = RunConfig(command, params, lines)
    if command is not None:
        for key in params:
            if key not in _ALLOWED[command]:
                raise cfg.error(key, f"key {key!r} is not used by {command}", "unknown_key")
    topology = params.get("topology", "staggered")
    if topology in ("staggered", "modular") and "n" in params and params["n"] % 2:
        raise cfg.error("n", f"n must be even for a {topology} array, got {params['n']}",
                        "invalid_parity")
    if topology == "uniform_bulk" and "n" in params and params["n"] < 3:
        raise cfg.error("n", "uniform_bulk needs n >= 3", "invalid_size")
    return cfg


# ---------------------------------------------------------------------------
# config -> library objects
# ---------------------------------------------------------------------------

def _scalar_param(cfg: RunConfig, key: str):
    v = cfg.get(key)
    if isinstance(v, list):
        raise cfg.error(key, f"{key} must be a single value here")
    return v


def _staggered(cfg: RunConfig, n: int) -> StaggeredSpec:
    has_eta = "eta" in cfg.params
    has_pair = "j1" in cfg.params or "j2" in cfg.params
    if has_eta and has_pair:
        raise cfg.error("eta", "give either eta (with optional j) or j1 and j2, not both")
    if has_pair:
        if "j" in cfg.params:
            raise cfg.error("j", "j is implied by j1 and j2")
        j1, j2 = cfg.require("j1"), cfg.require("j2")
        if j1 + j2 <= 0:
            raise cfg.error("j1", "j1 and j2 cannot both be zero", "out_of_range")
        return StaggeredSpec.from_couplings(n, j1, j2)
    return StaggeredSpec(n, cfg.require("eta"), cfg.get("j", 1.0))


def field_spec(cfg: RunConfig):
    topology = cfg.get("topology", "staggered")
    n = cfg.require("n")
    if topology == "staggered":
        return _staggered(cfg, n)
    if topology == "uniform_bulk":
        for key in ("eta", "j"):
            if key in cfg.params:
                raise cfg.error(key, f"{key} does not apply to uniform_bulk (use j1, j2)")
        return UniformBulkSpec(n, cfg.require("j1"), cfg.get("j2", 1.0))
    m = _scalar_param(cfg, "m")
    j_mod = _scalar_param(cfg, "j_mod")
    if m is None:
        cfg.require("m")
    if j_mod is None:
        cfg.require("j_mod")
    return ModularSpec(_staggered(cfg, n), m, j_mod)


def _time_grid(cfg: RunConfig, d, default_end: float | None = None) -> TimeGrid:
    t_start = cfg.get("t_start", 0.0)
    t_end = cfg.get("t_end", default_end)
    if t_end is None:
        t_end = cfg.require("t_end")
    if t_end <= t_start:
        raise cfg.error("t_end", f"t_end must exceed t_start ({t_start})", "invalid_grid")
    if "n_points" in cfg.params:
        return TimeGrid(t_start, t_end, cfg.params["n_points"])
    return TimeGrid.resolved(d, t_end, t_start)


# ---------------------------------------------------------------------------
# commands; each returns (header, rows, metadata)
# ---------------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig):
    d = diagonalize(build_field(field_spec(cfg)))
    try:
        pair = identify_bound_pair(d)
        bound = {pair.index_minus, pair.index_plus}
        meta = {"bound_pair_found": True, "delta_omega": pair.gap,
                "weak_localization": pair.weak_localization}
    except CcaError:
        bound, meta = set(), {"bound_pair_found": False}
    v = d.eigenvectors
    rows = []
    for j, w in enumerate(d.eigenvalues):
        par = int(d.parity[j]) if d.parity is not None else 0
        ew = float(v[0, j] ** 2 + v[-1, j] ** 2)
        rows.append([j + 1, float(w), par, ew, float(v[0, j] * v[-1, j]), int(j in bound)])
    header = ["index", "eigenvalue", "parity", "edge_weight", "end_to_end", "bound"]
    return header, rows, meta


def cmd_bound_states(cfg: RunConfig):
    spec = field_spec(cfg)
    d = diagonalize(build_field(spec))
    pair = identify_bound_pair(d)
    rows = [
        ["omega_minus", 0, pair.omega_minus],
        ["omega_plus", 0, pair.omega_plus],
        ["delta_omega", 0, pair.gap],
    ]
    try:
        rows.append(["band_gap", 0, band_gap(d, pair)])
    except CcaError:
        rows.append(["band_gap", 0, float("nan")])
    for k, (ete, ew) in enumerate(zip(pair.end_to_end, pair.edge_weight), start=1):
        rows.append(["end_to_end", k, ete])
        rows.append(["edge_weight", k, ew])
    for name, state in zip(("state_minus", "state_plus"), pair.states):
        rows += [[name, x, float(a)] for x, a in enumerate(state, start=1)]
    meta = {"weak_localization": pair.weak_localization}
    if isinstance(spec, StaggeredSpec) and spec.parity_analytic_valid and 0 < abs(spec.eta) < 1:
        wp, wm, dw = perturbative_bound_pair(spec.n_sites, spec.eta, spec.j_scale)
        bp, bm = perturbative_bound_states(spec.n_sites, spec.eta, spec.j_scale)
        even = pair.states[0] if pair.even_index == pair.index_minus else pair.states[1]
        odd = pair.states[1] if pair.even_index == pair.index_minus else pair.states[0]
        rows += [
            ["perturbative_omega_b_plus", 0, wp],
            ["perturbative_omega_b_minus", 0, wm],
            ["perturbative_delta_omega", 0, dw],
            ["perturbative_relative_error", 0, abs(dw - pair.gap) / pair.gap],
            ["perturbative_overlap", 1, abs(float(bp @ even))],
            ["perturbative_overlap", 2, abs(float(bm @ odd))],
        ]
        meta["perturbative"] = True
    return ["quantity", "index", "value"], rows, meta


def _series_rows(grid, values):
    a = np.minimum(np.abs(values), 1.0)
    fid = average_fidelity(a)
    return [[float(t), float(v.real), float(v.imag), float(x), float(f)]
            for t, v, x, f in zip(grid.points, values, a, fid)]


SERIES_HEADER = ["t", "re_f", "im_f", "abs_f", "fidelity"]


def cmd_dynamics(cfg: RunConfig):
    spec = field_spec(cfg)
    h = build_field(spec)
    d = diagonalize(h)
    source = cfg.get("source", 1)
    target = cfg.get("target", h.dim)
    for key, site in (("source", source), ("target", target)):
        if site > h.dim:
            raise cfg.error(key, f"{key} = {site} exceeds n = {h.dim}", "index_out_of_range")
    grid = _time_grid(cfg, d)
    series = evolve_amplitude(d, source - 1, target - 1, grid)
    meta = {"source": source, "target": target, "n_points": grid.n_points}
    return SERIES_HEADER, _series_rows(grid, series.values), meta


def cmd_jch_dynamics(cfg: RunConfig):
    fspec = field_spec(cfg)
    omega_a = cfg.get("omega_a", 0.0)
    if isinstance(omega_a, str):
        pair = identify_bound_pair(diagonalize(build_field(fspec)))
        omega_a = pair.omega_even if omega_a == "even" else pair.omega_odd
    spec = JchSpec(fspec, cfg.require("g"), omega_a)
    _, d = solve(spec)
    grid = _time_grid(cfg, d)
    if cfg.get("protocol", "atomic") == "atomic":
        series = atomic_transfer(spec, grid, d)
    else:
        series = polariton_transfer(spec, cfg.get("parity", 1), grid, d)
    meta = {"omega_a": omega_a, "g": spec.g, "protocol": cfg.get("protocol", "atomic"),
            "n_points": grid.n_points}
    return SERIES_HEADER, _series_rows(grid, series.values), meta


def _as_list(v):
    return v if isinstance(v, list) else [v]


def cmd_sweep(cfg: RunConfig):
    preset = cfg.require("preset")
    if preset == "fig3":
        res = experiments.fig3_end_to_end(cfg.require("ratios"), _as_list(cfg.require("sizes")),
                                          cfg.get("model", "staggered"))
    elif preset == "fig4":
        module = _staggered(cfg, cfg.require("n"))
        cfg.require("m")
        res = experiments.fig4_modular_tradeoff(_as_list(cfg.require("j_mod")),
                                                _scalar_param(cfg, "m"), module)
    elif preset == "fig5":
        kw = {"budget": cfg.get("budget", 400_000)}
        if "eta" in cfg.params:
            kw.update(eta=cfg.params["eta"], j_scale=cfg.get("j", 1.0))
        else:
            kw.update(j1=cfg.require("j1"), j2=cfg.require("j2"))
        res = experiments.fig5_modular_fidelity(
            cfg.require("length"), _as_list(cfg.require("m")),
            _as_list(cfg.get("j_mod", [0.0])), **kw)
    elif preset == "fig6":
        res = experiments.fig6_atomic_dynamics(
            cfg.require("n"), cfg.require("eta"), cfg.require("g"), j_scale=cfg.get("j", 1.0),
            t_end=cfg.get("t_end"), n_points=cfg.get("n_points", 2001))
    else:
        omega_a = cfg.get("omega_a", 0.0)
        if isinstance(omega_a, str):
            raise cfg.error("omega_a", "fig7 takes a numeric omega_a")
        res = experiments.fig7_polariton_dynamics(
            cfg.require("n"), cfg.require("eta"), cfg.require("g"),
            n_modules=_scalar_param(cfg, "m") or 1, j_mod=_scalar_param(cfg, "j_mod") or 0.0,
            j_scale=cfg.get("j", 1.0), omega_a=omega_a, parity=cfg.get("parity", 1),
            t_end=cfg.get("t_end"), n_points=cfg.get("n_points", 4001))
    meta = dict(res.metadata)
    meta["preset"] = preset
    return res.header, list(res.rows()), meta


HANDLERS = {
    "spectrum": cmd_spectrum,
    "bound-states": cmd_bound_states,
    "dynamics": cmd_dynamics,
    "jch-dynamics": cmd_jch_dynamics,
    "sweep": cmd_sweep,
}


def run(cfg: RunConfig):
    if cfg.command not in HANDLERS:
        raise ConfigError(f"unknown command {cfg.command!r}", None, None, "unknown_command")
    return HANDLERS[cfg.command](cfg)


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def to_json(command, header, rows, metadata) -> str:
    doc = {"command": command, "columns": list(header), "rows": rows, "metadata": metadata}
    return json.dumps(_jsonable(doc), allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _emit_error(err: CcaError) -> None:
    sys.stderr.write(json.dumps(_jsonable(err.record())) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cca", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out")
    parser.add_argument("--format", choices=FORMATS, default="csv")
    args = parser.parse_args(argv)
    try:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", None, None, "config_unreadable")
        cfg = parse_config(text, args.command)
        cfg.out, cfg.format = args.out, args.format
        header, rows, meta = run(cfg)
        payload = (to_csv(header, rows) if cfg.format == "csv"
                   else to_json(cfg.command, header, rows, meta))
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(payload)
        else:
            sys.stdout.write(payload)
    except ConfigError as err:
        _emit_error(err)
        return 2
    except CcaError as err:
        _emit_error(err)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
