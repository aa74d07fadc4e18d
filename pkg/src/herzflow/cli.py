"""Command-line experiment runner.

``herzflow run <cfg>`` executes one experiment and writes a run directory;
``herzflow report <dir>`` aggregates it into ``report.csv``.  See README for
the config grammar and the output files.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import data as datasets
from .errors import ConfigError, HerzflowError
from .euler import SchemeConfig
from .grid import Grid, set_threads
from .herz import NormParams

log = logging.getLogger("herzflow")

KINDS = ("norms", "inequalities", "transport", "scheme", "diagnostics")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


# -- config parsing ---------------------------------------------------------------
def _parse_value(raw: str):
    raw = raw.strip()
    low = raw.lower()
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    if low in ("true", "false"):
        return low == "true"
    if low in ("null", "none"):
        return None
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if "," in raw:
        return [_parse_value(p) for p in raw.split(",") if p.strip()]
    return raw


def _set_dotted(d: dict, key: str, value, lineno: int):
    parts = key.split(".")
    cur = d
    for p in parts[:-1]:
        nxt = cur.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"line {lineno}: '{p}' is both a value and a section")
        cur = nxt
    if parts[-1] in cur:
        raise ConfigError(f"line {lineno}: duplicate key '{key}'")
    cur[parts[-1]] = value


def parse_config_text(text: str) -> dict:
    """JSON object, or key = value lines with optional [section] headers."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            out = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from None
        if not isinstance(out, dict):
            raise ConfigError("config must be a JSON object")
        return out
    out: dict = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if not section:
                raise ConfigError(f"line {lineno}: empty section header")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        _set_dotted(out, f"{section}.{key}" if section else key, _parse_value(val), lineno)
    return out


_GRID_KEYS = {"n", "N", "L"}
_PARAM_KEYS = {"alpha", "p", "q", "r", "s"}
_SCHEME_KEYS = set(SchemeConfig.__dataclass_fields__) - {"params"}


@dataclass
class ExperimentConfig:
    kind: str
    grid: Grid
    params: NormParams
    scheme: SchemeConfig
    seed: int = 0
    out: Optional[str] = None
    options: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    def normalized(self) -> dict:
        """Canonical dict used in the manifest (independent of --out)."""
        def clean(x):
            if isinstance(x, float) and not math.isfinite(x):
                return str(x)
            if isinstance(x, dict):
                return {k: clean(v) for k, v in sorted(x.items())}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            return x
        return clean({"kind": self.kind, "seed": self.seed,
                      "grid": {"n": self.grid.n, "N": self.grid.N, "L": self.grid.L},
                      "params": self.params.as_dict(), "scheme": self.scheme.as_dict(),
                      "options": self.options,
                      "inputs": {k: _sha256(Path(v).read_bytes()) for k, v in self.inputs.items()}})


def _check_keys(section: str, d: dict, allowed: set):
    bad = set(d) - allowed
    if bad:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(bad))}")


def build_config(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    """Validate a parsed config; raises ConfigError/ParameterError/GridError."""
    raw = dict(raw)
    kind = raw.pop("kind", None)
    if kind not in KINDS:
        raise ConfigError(f"'kind' must be one of {', '.join(KINDS)} (got {kind!r})")
    g = raw.pop("grid", {}) or {}
    _check_keys("grid", g, _GRID_KEYS)
    default_N = 64 if kind == "diagnostics" else 128
    grid = Grid(int(g.get("n", 2)), int(g.get("N", default_N)), float(g.get("L", 16.0)))
    p = raw.pop("params", {}) or {}
    _check_keys("params", p, _PARAM_KEYS)
    params = NormParams(**{k: float(v) for k, v in p.items()})
    sc = raw.pop("scheme", {}) or {}
    _check_keys("scheme", sc, _SCHEME_KEYS)
    if "T" in sc and "dt" not in sc:
        sc["dt"] = float(sc["T"]) / 16
    try:
        scheme = SchemeConfig(params=params, **sc)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    seed = raw.pop("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    out = raw.pop("out", None)
    inputs = raw.pop("inputs", {}) or {}
    for k, v in inputs.items():
        path = (base_dir / str(v)).resolve()
        if not path.is_file():
            raise ConfigError(f"input '{k}' refers to a missing file: {v}")
        inputs[k] = str(path)
    options = raw.pop("options", {}) or {}
    if raw:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(raw))}")
    # theorem hypotheses checked before any computation
    params.check_theorem_regime(grid.n)
    if kind in ("scheme", "diagnostics", "transport"):
        scheme.validate(grid.n)
    elif abs(params.s - (grid.n / params.p + 1.0)) <= 1e-12 and params.r != 1:
        scheme.validate(grid.n)
    return ExperimentConfig(kind, grid, params, scheme, seed, out, options, inputs)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return build_config(parse_config_text(text), path.parent)


# -- artifacts --------------------------------------------------------------------
def _sha256(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


def _jsonl(rows) -> bytes:
    return "".join(json.dumps(_clean(r), sort_keys=True) + "\n" for r in rows).encode()


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


class RunOutput:
    def __init__(self):
        self.files: Dict[str, bytes] = {}
        self.summary: dict = {}
        self.timing = ""

    def add(self, name: str, payload: bytes):
        self.files[name] = payload

    def add_jsonl(self, name: str, rows):
        self.add(name, _jsonl(rows))

    def add_field(self, name: str, u):
        from .fieldio import field_bytes
        self.add(name, field_bytes(u))


def _opt(cfg: ExperimentConfig, key: str, default):
    return cfg.options.get(key, default)


def _input_field(cfg: ExperimentConfig, key: str):
    if key in cfg.inputs:
        from .fieldio import read_field
        f = read_field(cfg.inputs[key])
        if f.grid != cfg.grid:
            raise ConfigError(f"input '{key}' lives on a different grid")
        return f
    return None


def _report_row(check: str, sample: int, rep) -> dict:
    d = rep.to_dict()
    return {"check": check, "sample": sample, "lhs": d["lhs"], "rhs": d["rhs"],
            "fitted_C": d["fitted_constant"], "lower": d["lower"], "ceiling": d["ceiling"],
            "pass": d["pass"]}


# -- experiments ------------------------------------------------------------------
def _run_norms(cfg: ExperimentConfig, out: RunOutput):
    from .besov import besov_herz_norm, classical_besov_norm
    from .dyadic import HOMOGENEOUS
    from .herz import herz_norm
    g, P = cfg.grid, cfg.params
    rows = []
    for i in range(int(_opt(cfg, "samples", 8))):
        u = datasets.smooth_random(g, cfg.seed * 1000 + i, s=P.s)
        nb, bd = besov_herz_norm(u, P)
        rows.append({"sample": i, "herz": herz_norm(u, P), "besov_herz": nb,
                     "besov_herz_homogeneous": besov_herz_norm(u, P, HOMOGENEOUS)[0],
                     "classical_besov": classical_besov_norm(u, P), "blocks": bd.block_knorm,
                     "j": bd.j})
    out.add_jsonl("norms.jsonl", rows)
    out.summary = {"samples": len(rows),
                   "max_besov_herz": max(r["besov_herz"] for r in rows)}


def _inequality_checks(cfg: ExperimentConfig) -> Dict[str, Callable]:
    from .besov import check_linfty_embedding, check_norm_equivalence, check_sobolev_bernstein
    from .herz import check_holder
    from .paraproduct import (check_commutator_pressure, check_commutator_transport,
                              check_product_estimate)
    from .grid import gradient_part
    g, P = cfg.grid, cfg.params

    def scalar(seed):
        return datasets.smooth_random(g, seed, s=P.s)

    def vel(seed):
        return datasets.smooth_random(g, seed, components=g.n, s=P.s, solenoidal=True)

    def grad(seed):
        return gradient_part(datasets.smooth_random(g, seed, components=g.n, s=P.s))

    P1 = P.replace(p=2 * P.p, q=2 * P.q, alpha=P.alpha / 2)
    return {
        "holder": lambda k: check_holder(scalar(k), scalar(k + 1), P1, P1),
        "norm_equivalence": lambda k: check_norm_equivalence(scalar(k), P),
        "linfty_embedding": lambda k: check_linfty_embedding(scalar(k), P),
        "sobolev_bernstein": lambda k: check_sobolev_bernstein(scalar(k), P),
        "product_i": lambda k: check_product_estimate(scalar(k), scalar(k + 1), P, "i"),
        "product_ii_grad": lambda k: check_product_estimate(vel(k), vel(k + 1), P, "ii_grad"),
        "product_ii_div": lambda k: check_product_estimate(vel(k), vel(k + 1), P, "ii_div"),
        "commutator_transport_i": lambda k: check_commutator_transport(vel(k), scalar(k + 1), P, "i"),
        "commutator_transport_ii": lambda k: check_commutator_transport(vel(k), scalar(k + 1), P, "ii"),
        "commutator_transport_s_minus_1": lambda k: check_commutator_transport(vel(k), scalar(k + 1), P, "s_minus_1"),
        "commutator_pressure_i": lambda k: check_commutator_pressure(scalar(k), grad(k + 1), P, "i"),
        "commutator_pressure_ii": lambda k: check_commutator_pressure(scalar(k), grad(k + 1), P, "ii"),
        "commutator_pressure_iii": lambda k: check_commutator_pressure(scalar(k), grad(k + 1), P, "iii"),
    }


def _run_inequalities(cfg: ExperimentConfig, out: RunOutput):
    from .errors import ParameterError
    checks = _inequality_checks(cfg)
    wanted = _opt(cfg, "checks", sorted(checks))
    if isinstance(wanted, str):
        wanted = [wanted]
    unknown = set(wanted) - set(checks)
    if unknown:
        raise ConfigError(f"unknown check(s): {', '.join(sorted(unknown))}")
    samples = int(_opt(cfg, "samples", 10))
    rows, skipped = [], {}
    for name in wanted:
        for i in range(samples):
            seed = cfg.seed * 100003 + 2 * i
            try:
                rep = checks[name](seed)
            except ParameterError as exc:
                skipped[name] = str(exc)
                break
            rows.append(_report_row(name, i, rep))
    out.add_jsonl("reports.jsonl", rows)
    table = _inequality_table(rows)
    out.summary = {"checks": table, "skipped": skipped,
                   "failures": sum(1 for r in rows if not r["pass"])}


def _inequality_table(rows) -> List[dict]:
    by: Dict[str, list] = {}
    for r in rows:
        by.setdefault(r["check"], []).append(r)
    table = []
    for name in sorted(by):
        rs = by[name]
        cs = [r["fitted_C"] for r in rs if isinstance(r["fitted_C"], (int, float))]
        table.append({"lemma": name, "samples": len(rs), "max_fitted_C": max(cs) if cs else None,
                      "pass": all(r["pass"] for r in rs)})
    return table


def _run_transport(cfg: ExperimentConfig, out: RunOutput):
    from .besov import besov_herz_norm
    from .transport import (check_transport_estimate, lp_conservation, rotation_velocity,
                            solve_transport)
    g, P = cfg.grid, cfg.params
    vkind = _opt(cfg, "velocity", "rotation")
    if vkind == "rotation":
        v = rotation_velocity(g, float(_opt(cfg, "radius", 3.0)), float(_opt(cfg, "width", 0.75)))
    elif vkind == "random":
        v = datasets.smooth_random(g, cfg.seed + 17, components=g.n, s=P.s, solenoidal=True,
                                   amplitude=float(_opt(cfg, "amplitude", 1.0)))
    else:
        raise ConfigError("options.velocity must be 'rotation' or 'random'")
    a0 = _input_field(cfg, "a0") or datasets.density_bump(
        g, float(_opt(cfg, "a_amplitude", 0.2)), float(_opt(cfg, "a_width", 1.0)))
    T = float(_opt(cfg, "T", 1.0))
    dt = float(_opt(cfg, "dt", min(0.05, 0.9 * g.h / (4 * max(v.sup(), 1e-12)))))
    a = solve_transport(a0, v, T, dt)
    rows = [{"t": float(t), "norm_a_bk": besov_herz_norm(f, P)[0], "min": float(f.values.min()),
             "max": float(f.values.max())} for t, f in zip(a.times, a.fields)]
    rep = check_transport_estimate(a, v, P)
    out.add_jsonl("transport_trace.jsonl", rows)
    out.add_jsonl("reports.jsonl", [_report_row("transport_estimate", 0, rep)])
    out.add_field("a_final.hrz", a.fields[-1])
    out.summary = {"T": T, "dt": dt, "fitted_C": rep.extra.get("C"), "pass": rep.passed,
                   "lp2_drift": lp_conservation(a, 2.0),
                   "overshoot": max(rows[-1]["max"] - rows[0]["max"], rows[0]["min"] - rows[-1]["min"], 0.0)}


def _scheme_data(cfg: ExperimentConfig):
    g = cfg.grid
    u0 = _input_field(cfg, "u0") or datasets.vortex_pair(
        g, float(_opt(cfg, "u_width", 2.0)), float(_opt(cfg, "u_amplitude", 1.0)))
    a0 = _input_field(cfg, "a0") or datasets.density_bump(
        g, float(_opt(cfg, "a_amplitude", 0.2)), float(_opt(cfg, "a_width", 2.0)))
    return a0, u0


def _run_scheme(cfg: ExperimentConfig, out: RunOutput):
    from .diagnostics import bkm_functional, criterion_outer_index
    from .euler import check_euler_estimate, envelope_fit, iterate_scheme
    a0, u0 = _scheme_data(cfg)
    trace = iterate_scheme(a0, u0, None, cfg.scheme)
    out.add("trace.jsonl", trace.to_jsonl(deterministic=True).encode())
    fit = envelope_fit(trace.delta_ms, trace.deltas)
    a_f, u_f, g_f = trace.final
    r_outer = criterion_outer_index(cfg.params, cfg.grid.n)
    bkm = bkm_functional(u_f, r_outer)
    out.add("bkm.jsonl", bkm.to_jsonl().encode())
    est = check_euler_estimate(u_f, g_f, u_f, a_f, None, cfg.params)
    out.add_jsonl("reports.jsonl", [_report_row("euler_estimate", 0, est)])
    out.add_field("u_final.hrz", u_f.fields[-1])
    out.add_field("a_final.hrz", a_f.fields[-1])
    ratios = trace.cauchy_ratios()
    late = [r for m, r in ratios.items() if m >= 4]
    out.summary = {"iterations": len(trace.records), "converged": trace.converged,
                   "aborted": trace.aborted, "abort_reason": trace.abort_reason,
                   "deltas": trace.deltas.tolist(), "cauchy_ratios": {str(k): v for k, v in ratios.items()},
                   "max_late_ratio": max(late) if late else None,
                   "cauchy_ok": bool(all(r <= cfg.scheme.cauchy_ratio for r in late)),
                   "envelope": fit, "bkm_total": bkm.total, "euler_estimate_C": est.extra["C"]}
    out.timing = trace.timing_log()
    if trace.aborted:
        log.warning("uniform-bound flag: %s", trace.abort_reason)


def _run_diagnostics(cfg: ExperimentConfig, out: RunOutput):
    from .diagnostics import (bkm_functional, check_grad_decomposition, check_log_inequality,
                              criterion_outer_index)
    from .euler import linearized_euler_solve
    g, P = cfg.grid, cfg.params
    rows = []
    for i in range(int(_opt(cfg, "samples", 10))):
        u = datasets.smooth_random(g, cfg.seed * 7919 + i, components=g.n, s=P.s, solenoidal=True)
        rows.append(_report_row("grad_decomposition", i, check_grad_decomposition(u)))
    s_prime = float(_opt(cfg, "s_prime", P.s))
    amps = 10.0 ** np.arange(-3, 4)
    fam = [datasets.smooth_random(g, cfg.seed * 7919 + 500 + i, s=P.s) for i in range(3)]
    fam = [f - float(f.mean()[0]) for f in fam]
    rep = check_log_inequality(fam, P, s_prime, amps)
    rows.append(_report_row("log_inequality", 0, rep))
    u0 = datasets.vortex_pair(g, float(_opt(cfg, "u_width", 2.0)))
    zero = u0 * 0.0
    sc = cfg.scheme.replace(T=float(_opt(cfg, "T", 0.1)), dt=float(_opt(cfg, "T", 0.1)) / 8)
    u, _, _ = linearized_euler_solve(u0, u0, zero.component(0), None, sc)
    bkm = bkm_functional(u, criterion_outer_index(P, g.n))
    out.add_jsonl("reports.jsonl", rows)
    out.add("bkm.jsonl", bkm.to_jsonl().encode())
    out.summary = {"grad_max_error": max(r["lhs"] for r in rows if r["check"] == "grad_decomposition"),
                   "log_inequality_C": rep.fitted_constant, "log_inequality_pass": rep.passed,
                   "bkm_total": bkm.total, "bkm_nondecreasing": bkm.nondecreasing}


RUNNERS = {"norms": _run_norms, "inequalities": _run_inequalities, "transport": _run_transport,
           "scheme": _run_scheme, "diagnostics": _run_diagnostics}


# -- run / report -----------------------------------------------------------------
def execute(cfg: ExperimentConfig, out_dir: Path) -> dict:
    """Run one experiment and write its directory; returns the manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    sidecar = out_dir / "run.log"
    handler = logging.FileHandler(sidecar, mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("herzflow")
    root.addHandler(handler)
    root.setLevel(logging.INFO)
    try:
        t0 = time.perf_counter()
        log.info("starting %s run (seed %d)", cfg.kind, cfg.seed)
        res = RunOutput()
        RUNNERS[cfg.kind](cfg, res)
        res.summary = {"kind": cfg.kind, **res.summary}
        res.add("summary.json", (json.dumps(_clean(res.summary), indent=1, sort_keys=True) + "\n").encode())
        for name, payload in res.files.items():
            (out_dir / name).write_bytes(payload)
        manifest = {"config": cfg.normalized(), "kind": cfg.kind, "seed": cfg.seed,
                    "artifacts": [{"path": n, "sha256": _sha256(b), "bytes": len(b)}
                                  for n, b in sorted(res.files.items())]}
        (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        if res.timing:
            log.info("iteration timings:\n%s", res.timing.strip())
        log.info("finished in %.1f s", time.perf_counter() - t0)
        return manifest
    finally:
        root.removeHandler(handler)
        handler.close()


def _failing_module(exc: BaseException) -> str:
    mod = "herzflow"
    for frame in traceback.extract_tb(exc.__traceback__):
        p = Path(frame.filename)
        if p.parent.name == "herzflow" and p.stem not in ("cli", "errors"):
            mod = p.stem
    return mod


def run(config_path, seed: Optional[int] = None, out: Optional[str] = None,
        threads: Optional[int] = None, stream=None) -> int:
    """Validate, execute and record an experiment; returns the exit code."""
    stream = stream or sys.stderr
    if threads is not None:
        set_threads(threads)
    try:
        cfg = load_config(config_path)
        if seed is not None:
            if seed < 0:
                raise ConfigError("seed must be nonnegative")
            cfg.seed = int(seed)
    except (HerzflowError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=stream)
        return EXIT_CONFIG
    out_dir = Path(out or cfg.out or f"runs/{Path(config_path).stem}")
    try:
        execute(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stream)
        return EXIT_CONFIG
    except HerzflowError as exc:
        print(f"numerical failure in {_failing_module(exc)}: {type(exc).__name__}: {exc}", file=stream)
        return EXIT_NUMERIC
    print(f"wrote {out_dir}", file=stream)
    return EXIT_OK


def load_manifest(run_dir) -> dict:
    d = Path(run_dir)
    mp = d / "manifest.json"
    if not mp.is_file():
        raise ConfigError(f"{d}: no manifest.json")
    try:
        manifest = json.loads(mp.read_text())
        arts = manifest["artifacts"]
        kind = manifest["kind"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"{d}: corrupt manifest ({exc})") from None
    for a in arts:
        p = d / a["path"]
        if not p.is_file():
            raise ConfigError(f"{d}: artifact {a['path']} is missing")
        if _sha256(p.read_bytes()) != a["sha256"]:
            raise ConfigError(f"{d}: artifact {a['path']} does not match its hash")
    if kind not in KINDS:
        raise ConfigError(f"{d}: unknown experiment kind {kind!r}")
    return manifest


def _read_jsonl(path: Path) -> List[dict]:
    return [json.loads(l) for l in path.read_text().splitlines() if l.strip()]


def report(run_dir) -> dict:
    """Aggregate a run directory into report.csv; returns the summary."""
    from .euler import envelope_fit
    d = Path(run_dir)
    manifest = load_manifest(d)
    kind = manifest["kind"]
    summary = json.loads((d / "summary.json").read_text())
    rows: List[dict]
    if kind == "scheme":
        recs = [r for r in _read_jsonl(d / "trace.jsonl") if r["t"] is None]
        pairs = [(r["m"], r["delta_f_norm_sm1"]) for r in recs if r["delta_f_norm_sm1"] is not None]
        fit = envelope_fit([m for m, _ in pairs], [x for _, x in pairs])
        rows = []
        prev = None
        for m, dlt in pairs:
            env = fit["C_bar"] * m / 2.0 ** (m - 1)
            rows.append({"m": m, "delta": dlt, "ratio": dlt / prev if prev else "",
                         "envelope": env})
            prev = dlt
        summary = {**summary, "envelope": fit}
    elif kind == "inequalities" or kind == "diagnostics" or kind == "transport":
        rows = _inequality_table(_read_jsonl(d / "reports.jsonl"))
    else:
        rows = [{k: v for k, v in r.items() if not isinstance(v, list)}
                for r in _read_jsonl(d / "norms.jsonl")]
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    (d / "report.csv").write_text(buf.getvalue())
    return {"kind": kind, "rows": rows, "summary": summary}


# -- entry point ------------------------------------------------------------------
def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="herzflow", description="Besov-Herz experiment runner")
    ap.add_argument("--threads", type=int, default=None,
                    help="FFT worker count (fallback: HERZFLOW_THREADS)")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out", default=None)
    r.add_argument("--threads", type=int, default=None, dest="threads_sub")
    p = sub.add_parser("report", help="aggregate a run directory into report.csv")
    p.add_argument("run_dir")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "run":
        threads = args.threads_sub if args.threads_sub is not None else args.threads
        return run(args.config, args.seed, args.out, threads)
    try:
        res = report(args.run_dir)
    except HerzflowError as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(_clean(res["summary"]), indent=1, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
