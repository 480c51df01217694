"""Declarative refinement studies: YAML configs in, ``.dat`` tables out.

A config is a YAML mapping::

    name: rk2u2-cfl
    description: free text
    problem:    {kind: advect1d, a: 0.5, a_y: 0.0, nu: 0.0, t_end: 2}
    scheme: RK2U2                      # BW | RK2U2
    max_cfl: 0.5                       # optional stability gate override
    refinement:
      mode: constant-cfl               # time-only | constant-cfl | constant-diffusion
      ratio: "1/2"                     # exact num/den string
      base_segments: 8
      base_dt: "1/8"                   # defaults to 1 / base_segments
      levels: 10
      protocol: single                 # single | two-tier
      global_levels: 5                 # two-tier only
    orders: {preset: [2, 3], quantum: 1, tolerance: 0.1, max_iterations: 5}
    beta: 0.01
    midas: off
    midas_policy: two-level            # two-level | finest-pair
    output: out/rk2u2-cfl
    sweep:                             # optional variants, each run separately
      - {label: r2-3, ratio: "2/3", base_segments: 4}

In the ``two-tier`` protocol each ladder has ``levels`` levels with the
local ``ratio``; ``global_levels`` copies of it are generated, the g-th
starting from ``base_segments * 2**g``.
"""
import hashlib
import json
import math
import os
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .errors import ConfigError, InsufficientWindows, LadderError, PoemError, UnstableParameters
from .estimator import (DEFAULT_BETA, DEFAULT_TOLERANCE, PresetOrders, build_report,
                        check_orders, iterate_orders, level_error_table, poem_windows)
from .grid import build_ladder
from .midas import run_midas
from .schemes import SCHEMES, ProblemSpec, check_stability, exact_field, solve_ladder
from .tables import emit_dat

MODES = {"time-only": "time", "constant-cfl": 1, "constant-diffusion": 2}
PROTOCOLS = ("single", "two-tier")
POLICIES = ("two-level", "finest-pair")
REFERENCE_SPEEDUP = 4.55

_SCHEMA = {
    "": {"name", "description", "problem", "scheme", "max_cfl", "refinement", "orders",
         "beta", "midas", "midas_policy", "output", "sweep"},
    "problem": {"kind", "a", "a_y", "nu", "t_end"},
    "refinement": {"mode", "ratio", "base_segments", "base_dt", "levels", "protocol",
                   "global_levels"},
    "orders": {"preset", "quantum", "tolerance", "max_iterations"},
}
_SWEEP_KEYS = {"label", "ratio", "base_segments", "base_dt", "levels", "global_levels", "protocol",
               "preset"}


class StageError(PoemError):
    """A study failed after its config was accepted."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage} stage failed: {type(cause).__name__}: {cause}")


@contextmanager
def stage(name):
    try:
        yield
    except (ConfigError, StageError):
        raise
    except (PoemError, ValueError, ArithmeticError, OSError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


# ---------------------------------------------------------------------------
# parsing


def _line_map(node, path="", out=None):
    """1-based source line of every key path in a composed YAML tree."""
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            sub = f"{path}.{k.value}" if path else str(k.value)
            _line_map(v, sub, out)
            out[sub] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, f"{path}[{i}]", out)
    return out


def parse_yaml(text):
    """``(data, lines)`` for a config text; malformed YAML is a ConfigError."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        msg = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"malformed YAML: {msg}",
                          line=None if mark is None else mark.line + 1) from exc
    if data is None:
        raise ConfigError("config is empty", field="name")
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of fields", line=1)
    return data, _line_map(node)


class _Fields:
    """Typed lookups into the raw config that raise field/line-precise errors."""

    def __init__(self, data, lines, override_paths=()):
        self.data = data
        self.lines = lines
        self.override_paths = dict(override_paths)

    def line(self, path):
        if path in self.override_paths:
            return self.lines.get(self.override_paths[path])
        while path and path not in self.lines:
            path = path.rpartition(".")[0]
        return self.lines.get(path)

    def error(self, path, message):
        return ConfigError(message, field=path, line=self.line(path))

    def get(self, path, default=KeyError):
        node = self.data
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node or node[part] is None:
                if default is KeyError:
                    raise self.error(path, "required field is missing")
                return default
            node = node[part]
        return node

    def number(self, path, default=KeyError, positive=False):
        v = self.get(path, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            try:
                v = float(Fraction(str(v)))
            except (ValueError, ZeroDivisionError):
                raise self.error(path, f"expected a number, got {v!r}") from None
        if positive and not v > 0:
            raise self.error(path, f"must be positive, got {v}")
        return float(v)

    def integer(self, path, default=KeyError, minimum=1):
        v = self.get(path, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.error(path, f"expected an integer, got {v!r}")
        if v < minimum:
            raise self.error(path, f"must be at least {minimum}, got {v}")
        return v

    def rational(self, path, default=KeyError, string_only=False):
        v = self.get(path, default)
        if string_only and not isinstance(v, str):
            raise self.error(path, f"must be an exact 'num/den' string, got {v!r}")
        if isinstance(v, bool):
            raise self.error(path, f"expected a rational number, got {v!r}")
        try:
            return v if isinstance(v, Fraction) else Fraction(v if not isinstance(v, float)
                                                              else repr(v))
        except (ValueError, ZeroDivisionError, TypeError):
            raise self.error(path, f"cannot read {v!r} as a rational number") from None

    def choice(self, path, options, default=KeyError):
        v = self.get(path, default)
        if v not in options:
            raise self.error(path, f"{v!r} is not one of {sorted(map(str, options))}")
        return v


@dataclass(frozen=True)
class StudyConfig:
    name: str
    problem: ProblemSpec
    scheme: str
    mode: str
    ratio: Fraction
    base_segments: int
    base_dt: Fraction
    levels: int
    orders: PresetOrders
    tolerance: float = DEFAULT_TOLERANCE
    max_iterations: int = 5
    beta: float = DEFAULT_BETA
    midas: bool = False
    midas_policy: str = "two-level"
    protocol: str = "single"
    global_levels: int = 1
    max_cfl: Optional[float] = None
    output: str = "out"
    label: Optional[str] = None
    description: str = ""
    sha: str = ""

    @property
    def path_exponent(self):
        return MODES[self.mode]

    @property
    def title(self):
        return self.name if self.label is None else f"{self.name}/{self.label}"

    @property
    def output_dir(self):
        return self.output if self.label is None else os.path.join(self.output, self.label)

    def ladders(self):
        """Refinement ladders of the study: one, or one per global level."""
        if self.protocol == "single":
            return [build_ladder(self.base_segments, self.ratio, self.levels,
                                 self.path_exponent, self.base_dt, self.problem.t_end,
                                 self.problem.dims)]
        s = 1 if self.mode == "time-only" else self.path_exponent
        return [build_ladder(self.base_segments * 2 ** g, self.ratio, self.levels,
                             self.path_exponent, self.base_dt / 2 ** (g * s),
                             self.problem.t_end, self.problem.dims)
                for g in range(self.global_levels)]

    def stamp(self):
        return f"poemkit {__version__} study={self.title} config-sha256={self.sha[:16]}"


def _build(f, name, sha, label=None):
    for section, allowed in _SCHEMA.items():
        node = f.data if not section else f.get(section, {})
        if not isinstance(node, dict):
            raise f.error(section, "expected a mapping")
        for key in node:
            if key not in allowed:
                path = f"{section}.{key}" if section else str(key)
                raise f.error(path, f"unknown field; expected one of {sorted(allowed)}")

    kind = f.choice("problem.kind", ("advect1d", "advdiff1d", "advect2d"))
    try:
        problem = ProblemSpec(kind, a=f.number("problem.a", 0.5),
                              a_y=f.number("problem.a_y", 0.0),
                              nu=f.number("problem.nu", 0.0),
                              t_end=f.rational("problem.t_end", 2))
    except ValueError as exc:
        raise f.error("problem", str(exc)) from None
    scheme = f.choice("scheme", SCHEMES)
    if scheme == "BW" and kind != "advect1d":
        raise f.error("scheme", "BW is only provided for advect1d")

    mode = f.choice("refinement.mode", tuple(MODES))
    protocol = f.choice("refinement.protocol", PROTOCOLS, "single")
    if protocol == "two-tier" and mode == "time-only":
        raise f.error("refinement.protocol", "two-tier refinement needs a spatial ladder")
    ratio = f.rational("refinement.ratio", string_only=True)
    base_segments = f.integer("refinement.base_segments")
    if mode == "time-only" and "base_dt" not in f.get("refinement"):
        raise f.error("refinement.base_dt", "time-only refinement needs an explicit base_dt")
    base_dt = f.rational("refinement.base_dt", Fraction(1, base_segments))
    if not base_dt > 0:
        raise f.error("refinement.base_dt", f"must be positive, got {base_dt}")

    preset = f.get("orders.preset")
    if not isinstance(preset, list) or not preset:
        raise f.error("orders.preset", "expected a non-empty list of orders")
    quantum = f.number("orders.quantum", 1.0, positive=True)
    try:
        orders = PresetOrders(tuple(float(Fraction(str(p))) for p in preset), quantum)
    except (ValueError, TypeError, PoemError) as exc:
        raise f.error("orders.preset", str(exc)) from None
    levels = f.integer("refinement.levels", minimum=orders.k + 1)

    max_cfl = f.get("max_cfl", None)
    if max_cfl is not None:
        max_cfl = f.number("max_cfl", positive=True)
    midas = f.get("midas", False)
    if not isinstance(midas, bool):
        raise f.error("midas", f"expected on/off, got {midas!r}")
    cfg = StudyConfig(
        name=name, problem=problem, scheme=scheme, mode=mode, ratio=ratio,
        base_segments=base_segments, base_dt=base_dt, levels=levels, orders=orders,
        tolerance=f.number("orders.tolerance", DEFAULT_TOLERANCE, positive=True),
        max_iterations=f.integer("orders.max_iterations", 5),
        beta=f.number("beta", DEFAULT_BETA, positive=True),
        midas=midas, midas_policy=f.choice("midas_policy", POLICIES, "two-level"),
        protocol=protocol,
        global_levels=f.integer("refinement.global_levels", 1) if protocol == "two-tier" else 1,
        max_cfl=max_cfl, output=str(f.get("output", os.path.join("out", name))),
        label=label, description=str(f.get("description", "")), sha=sha)
    if midas and orders.k < 1:
        raise f.error("orders.preset", "MIDAS needs at least one order")
    _validate_grids(cfg, f)
    return cfg


def _validate_grids(cfg, f):
    try:
        ladders = cfg.ladders()
    except LadderError as exc:
        path = {"NonIntegerSegments": "refinement.levels",
                "NonIntegerSteps": "refinement.base_dt"}.get(type(exc).__name__,
                                                              "refinement.ratio")
        raise f.error(path, f"{type(exc).__name__}: {exc}") from None
    for ladder in ladders:
        for level in range(1, ladder.levels + 1):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    check_stability(cfg.scheme, cfg.problem, ladder.segments(level),
                                    ladder.steps(level), cfg.max_cfl)
            except UnstableParameters as exc:
                raise f.error("refinement.base_dt", f"level {level}: {exc}") from None
    if cfg.max_cfl is not None and cfg.scheme == "RK2U2" and cfg.max_cfl > 0.5:
        warnings.warn(f"{cfg.title}: RK2U2 CFL gate raised to {cfg.max_cfl}", stacklevel=3)


def preset_names():
    root = resources.files("poemkit") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def read_source(source):
    """Text and default name of a config given as a path or a bundled preset name."""
    if os.path.isfile(source):
        with open(source, encoding="utf-8") as fh:
            return fh.read(), os.path.splitext(os.path.basename(source))[0]
    res = resources.files("poemkit") / "presets" / f"{source}.yaml"
    if res.is_file():
        return res.read_text(encoding="utf-8"), source
    raise ConfigError(f"no config file or bundled preset named {source!r} "
                      f"(presets: {', '.join(preset_names())})")


def load_config(source=None, *, text=None, out=None, midas=None, beta=None, levels=None):
    """Parse a config into one :class:`StudyConfig` per sweep variant.

    Keyword overrides mirror the CLI flags and win over the file, including
    over sweep entries.  ``levels`` sets ``global_levels`` for two-tier
    studies and ``levels`` otherwise.
    """
    if text is None:
        text, default_name = read_source(source)
    else:
        default_name = "study"
    data, lines = parse_yaml(text)
    sha = hashlib.sha256(text.encode("utf-8")).hexdigest()
    name = str(data.get("name") or default_name)

    sweep = data.get("sweep") or [None]
    if not isinstance(sweep, list):
        raise ConfigError("expected a list of variants", field="sweep", line=lines.get("sweep"))
    out_cfgs = []
    for i, entry in enumerate(sweep):
        merged = json.loads(json.dumps(data, default=str))
        merged.pop("sweep", None)
        moved = {}
        label = None
        if entry is not None:
            if not isinstance(entry, dict):
                raise ConfigError("sweep entries must be mappings", field=f"sweep[{i}]",
                                  line=lines.get(f"sweep[{i}]"))
            for key, value in entry.items():
                if key not in _SWEEP_KEYS:
                    raise ConfigError(f"unknown sweep field; expected one of {sorted(_SWEEP_KEYS)}",
                                      field=f"sweep[{i}].{key}", line=lines.get(f"sweep[{i}].{key}"))
                if key == "label":
                    label = str(value)
                    continue
                section = "orders" if key == "preset" else "refinement"
                merged.setdefault(section, {})[key] = value
                moved[f"{section}.{key}"] = f"sweep[{i}].{key}"
            if label is None:
                label = f"variant{i}"
        if out is not None:
            merged["output"] = out
        if midas is not None:
            merged["midas"] = bool(midas)
        if beta is not None:
            merged["beta"] = beta
        if levels is not None:
            ref = merged.setdefault("refinement", {})
            key = "global_levels" if ref.get("protocol") == "two-tier" else "levels"
            ref[key] = levels
        out_cfgs.append(_build(_Fields(merged, lines, moved), name, sha, label))
    return out_cfgs


# ---------------------------------------------------------------------------
# running


@dataclass
class StudyData:
    config: StudyConfig
    ladders: list
    fields: list  # per ladder, list of FieldLevel
    exact: list  # per ladder, list of arrays

    def analyze(self, orders=None):
        """Convergence report for the given (or configured) preset orders."""
        cfg = self.config
        orders = cfg.orders if orders is None else orders
        fits, level_errors = [], []
        for ladder, fields, exact in zip(self.ladders, self.fields, self.exact):
            if cfg.midas:
                fits += run_midas(ladder, fields, orders, cfg.midas_policy, exact)
            else:
                fits += poem_windows(ladder, fields, orders, exact)
            errs = level_error_table([ladder.spacing(l) for l in range(1, ladder.levels + 1)],
                                     fields, exact)
            level_errors += errs if len(self.ladders) == 1 else errs[:1]
        level_errors.sort(key=lambda e: -e.h)
        return build_report(fits, orders, cfg.beta, level_errors)


def solve_study(cfg):
    with stage("solve"):
        ladders = cfg.ladders()
        fields, exact = [], []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for ladder in ladders:
                fields.append(solve_ladder(cfg.scheme, cfg.problem, ladder, cfg.max_cfl))
                exact.append([exact_field(cfg.problem, ladder.segments(l))
                              for l in range(1, ladder.levels + 1)])
    return StudyData(cfg, ladders, fields, exact)


def order_iteration(data):
    cfg = data.config
    with stage("order-check"):
        try:
            return iterate_orders(data.analyze, cfg.orders, cfg.max_iterations,
                                  cfg.tolerance, cfg.orders.quantum)
        except InsufficientWindows:
            return None


@dataclass
class StudyResult:
    config: StudyConfig
    report: object
    iteration: object
    files: list = field(default_factory=list)


def _log10(x):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log10(np.asarray(x, dtype=float))


def _none_to_nan(values):
    return [np.nan if v is None else v for v in values]


def write_tables(result, out_dir):
    """Emit every table of a finished study into ``out_dir``; returns the paths."""
    cfg, rep = result.config, result.report
    os.makedirs(out_dir, exist_ok=True)
    stamp = cfg.stamp()
    files = []

    def emit(name, cols, names):
        files.append(emit_dat(cols, os.path.join(out_dir, name), names, stamp))

    wins = rep.windows
    lh = np.array([w.log_h for w in wins])
    lh_s = lh[:-1]  # slopes sit at the coarser window of each pair
    tnames = [f"T{m + 1}" for m in range(rep.k)]
    tn = rep.term_norm_matrix()
    emit("cNorm.dat", [lh] + [_log10(tn[:, m]) for m in range(rep.k)],
         ["log10_h"] + [f"log10_L2_{t}" for t in tnames])
    ts = rep.term_slopes()
    emit("cNorm_slope.dat", [lh_s] + [ts[:, m] for m in range(rep.k)],
         ["log10_h"] + [f"slope_{t}" for t in tnames])

    def norm_tables(stem, attr, hs, objs, slope_fn):
        if not objs or any(getattr(o, attr) is None for o in objs):
            return
        cols = [_log10([getattr(getattr(o, attr), n) for o in objs]) for n in ("l1", "l2", "linf")]
        emit(f"{stem}.dat", [hs] + cols, ["log10_h", "log10_L1", "log10_L2", "log10_Linf"])
        if len(objs) > 1:
            emit(f"{stem}_slope.dat", [hs[:-1]] + [slope_fn(attr, n) for n in ("l1", "l2", "linf")],
                 ["log10_h", "slope_L1", "slope_L2", "slope_Linf"])

    norm_tables("esErr", "eps_tilde", lh, wins, rep.slopes_of)
    norm_tables("es_ex", "es_ex", lh, wins, rep.slopes_of)
    if rep.level_errors:
        lh_lev = np.array([e.log_h for e in rep.level_errors])
        cols = [_log10([getattr(e.norms, n) for e in rep.level_errors]) for n in ("l1", "l2", "linf")]
        emit("discErr.dat", [lh_lev] + cols, ["log10_h", "log10_L1", "log10_L2", "log10_Linf"])
        if len(rep.level_errors) > 1:
            emit("discErr_slope.dat",
                 [lh_lev[:-1]] + [rep.level_error_slopes(n) for n in ("l1", "l2", "linf")],
                 ["log10_h", "slope_L1", "slope_L2", "slope_Linf"])
    if all(w.eps_common is not None for w in wins):
        et = np.array([w.eps_tilde_common.l2 for w in wins])
        ea = np.array([w.eps_common.l2 for w in wins])
        emit("common.dat", [lh, _log10(et), _log10(ea), np.abs(et - ea) / ea],
             ["log10_h", "log10_L2_eps_tilde", "log10_L2_eps", "rel_diff"])

    emit("beta.dat", [lh, _none_to_nan([w.beta_tilde for w in wins]),
                      [np.nan if w.asymptotic is None else float(w.asymptotic) for w in wins]],
         ["log10_h", "beta_tilde", "asymptotic"])
    if cfg.midas:
        sh = np.array([_none_to_nan(w.term_norms_shared) for w in wins])
        ob = np.array([_none_to_nan(w.term_norms_objective or (None,) * rep.k) for w in wins])
        emit("cons.dat", [lh] + [_log10(sh[:, m]) for m in range(rep.k)]
             + [_log10(ob[:, m]) for m in range(rep.k)],
             ["log10_h"] + [f"log10_L2_{t}_shared" for t in tnames]
             + [f"log10_L2_{t}_objective" for t in tnames])

    files.append(_write_json(os.path.join(out_dir, "orders_trail.json"),
                             _trail_dict(result.iteration)))
    files.append(_write_json(os.path.join(out_dir, "report.json"), report_dict(result)))
    path = os.path.join(out_dir, "summary.txt")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary_text(result))
    files.append(path)
    return files


def _trail_dict(iteration):
    if iteration is None:
        return {"skipped": "order check needs at least two windows"}
    return iteration.to_dict()


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def config_dict(cfg):
    return {
        "name": cfg.name, "label": cfg.label,
        "problem": {"kind": cfg.problem.kind, "a": cfg.problem.a, "a_y": cfg.problem.a_y,
                    "nu": cfg.problem.nu, "t_end": str(cfg.problem.t_end)},
        "scheme": cfg.scheme, "mode": cfg.mode, "ratio": str(cfg.ratio),
        "base_segments": cfg.base_segments, "base_dt": str(cfg.base_dt), "levels": cfg.levels,
        "protocol": cfg.protocol, "global_levels": cfg.global_levels,
        "orders": list(cfg.orders.orders), "quantum": cfg.orders.quantum,
        "tolerance": cfg.tolerance, "beta": cfg.beta, "midas": cfg.midas,
        "midas_policy": cfg.midas_policy,
        "ladders": [{"segments": list(l.segment_counts()), "steps": list(l.step_counts())}
                    for l in cfg.ladders()],
        "config_sha256": cfg.sha, "version": __version__,
    }


def report_dict(result):
    rep = result.report
    d = {"config": config_dict(result.config), "report": rep.to_dict()}
    if len(rep.windows) > 1:
        chk = check_orders(rep, result.config.orders, result.config.tolerance)
        d["order_check"] = {
            "verdicts": [{"order": v.order, "observed": v.observed,
                          "verdict": "matches" if v.matches else "deviates"}
                         for v in chk.verdicts],
            "suggested_mu": chk.mu}
    d["order_iteration"] = _trail_dict(result.iteration)
    return d


def _fmt_orders(orders):
    return "(" + ", ".join(f"{p:g}" for p in orders) + ")"


def summary_text(result):
    cfg, rep = result.config, result.report
    lines = [f"study {cfg.title}: {cfg.scheme} on {cfg.problem.kind}, {cfg.mode}, "
             f"r = {cfg.ratio}, preset orders {_fmt_orders(cfg.orders.orders)}",
             f"{'log10 h':>9} {'levels':>10} " + " ".join(f"{f'L2 T{m + 1}':>11}" for m in range(rep.k))
             + f" {'beta~':>10} {'asympt':>6}"]
    for w in rep.windows:
        bt = "n/a" if w.beta_tilde is None else f"{w.beta_tilde:.4g}"
        flag = "?" if w.asymptotic is None else ("yes" if w.asymptotic else "no")
        lv = "-".join(map(str, w.levels))
        lines.append(f"{w.log_h:9.4f} {lv:>10} "
                     + " ".join(f"{t:11.4e}" for t in w.term_norms) + f" {bt:>10} {flag:>6}")
    if len(rep.windows) > 1:
        chk = check_orders(rep, cfg.orders, cfg.tolerance)
        lines.append("finest-window term slopes: " + ", ".join(
            f"T{m + 1} {v.observed:.4f} ({'matches' if v.matches else 'deviates from'} {v.order:g})"
            for m, v in enumerate(chk.verdicts)))
        if rep.windows[0].es_ex is not None:
            lines.append("finest es_ex L2 slope: "
                         f"{rep.slopes_of('es_ex')[-1]:.4f}")
    it = result.iteration
    if it is not None:
        steps = " -> ".join(_fmt_orders(o) for o, _ in it.trail)
        status = {"converged": "converged",
                  "stalled": "stalled: the suggested orders were already tried",
                  "budget": "iteration budget exhausted"}[it.status]
        lines.append(f"order iteration: {steps} ({status})")
    return "\n".join(lines) + "\n"


def run_study(cfg, write=True):
    """Solve, analyse and (optionally) write one study variant."""
    data = solve_study(cfg)
    with stage("estimate"):
        report = data.analyze()
    iteration = order_iteration(data)
    result = StudyResult(cfg, report, iteration)
    if write:
        with stage("write"):
            result.files = write_tables(result, cfg.output_dir)
    return result


# ---------------------------------------------------------------------------
# cost


def work_units(cfg):
    """Sum over every solved level of grid points times time steps."""
    return sum(l.points(i) * l.steps(i) for l in cfg.ladders() for i in range(1, l.levels + 1))


@dataclass
class CostReport:
    name_a: str
    name_b: str
    work_a: int
    work_b: int
    same_problem: bool

    @property
    def ratio(self):
        return self.work_a / self.work_b

    def to_dict(self):
        return {"a": {"name": self.name_a, "work_units": self.work_a},
                "b": {"name": self.name_b, "work_units": self.work_b},
                "ratio_a_over_b": self.ratio, "same_problem": self.same_problem,
                "reference_wall_time_speedup": REFERENCE_SPEEDUP}

    def text(self):
        out = [f"{self.name_a}: {self.work_a} work units",
               f"{self.name_b}: {self.work_b} work units",
               f"work-unit ratio ({self.name_a} / {self.name_b}): {self.ratio:.4f}",
               f"reference: measured wall-time speed-up {REFERENCE_SPEEDUP}x "
               "(hardware-specific, not reproduced)"]
        if not self.same_problem:
            out.append("note: the two configs describe different problems")
        return "\n".join(out) + "\n"


def cost_model(cfg_a, cfg_b):
    """Work-unit comparison of two single-variant studies."""
    return CostReport(cfg_a.title, cfg_b.title, work_units(cfg_a), work_units(cfg_b),
                      cfg_a.problem == cfg_b.problem)
