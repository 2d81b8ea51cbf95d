"""``ou-schro`` command-line runner.

Subcommands
-----------
propagate    evolve one datum and write ``initial.csv``, ``final.csv`` and ``propagate.json``
validate     run the invariant suite and write ``validate.json``
dispersive   sweep the L^p -> L^p' ratio over (state, t, p); ``dispersive.{csv,json}``
uncertainty  sweep decay-rate products over the default family; ``uncertainty.{csv,json}``
report       summarize the JSON reports in ``--out`` and write ``plots.gp``

Exit codes: 0 pass, 1 usage/config error (including singular times),
2 completed with flagged results, 3 a checked assertion failed.

A ``--config`` JSON document supplies the same keys as the long flags
(dashes become underscores, ``tol`` is a mapping); explicit flags win.
"""

from __future__ import annotations

import argparse
import cmath
import csv
import io
import json
import math
import os
import re
import sys
import tempfile
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import gauss_calc as gc
from . import propagator
from .analysis import (
    CANCELLATION_TOL,
    DEFAULT_TIMES,
    HARDY_THRESHOLD,
    default_uncertainty_family,
    dispersive_probe,
    hardy_probe,
    uncertainty_probe_l2,
    uncertainty_probe_linf,
)
from .checks import CHECKS, DEFAULT_TOLERANCES, ValidateConfig, run_checks
from .field_grid import (
    Field,
    make_grid,
    relative_gamma_error,
    relative_l2_error,
    sample,
    write_csv,
)
from .gauss_calc import GaussianExponential
from .propagator import PropagatorConfig, SingularTimeError

EXIT_OK, EXIT_USAGE, EXIT_FLAGGED, EXIT_ASSERT = 0, 1, 2, 3

ORACLE_TOL = 1e-6
MEHLER_CONST_TOL = 1e-8
DISPERSIVE_TOL = 1e-6
MARGIN = 1e-3

DEFAULT_P = "1,6/5,4/3,3/2,2"
DEFAULT_DISPERSIVE_T = "pi/4,pi/2,2.2"

DEFAULTS = {
    "m": 1, "n": 512, "r": 12.0, "t": None, "p": None, "omega": 0.25,
    "op": "ou", "path": None, "psi_gauss": None, "phi_gauss": None, "phi": None,
    "out": ".", "only": None, "tol": {}, "inject_fault": None,
}

FAULTS = ("jminus-prefactor",)


class UsageError(Exception):
    """Bad flags or config; mapped to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- value parsing ------------------------------------------------------------------

_PI_RE = re.compile(r"^([+-]?\d*\.?\d*)\s*\*?\s*pi(?:\s*/\s*(\d+\.?\d*))?$")


def parse_real(text: str) -> float:
    """Parse ``1.5``, ``4/3``, ``pi``, ``3pi/4``, ``2*pi`` or ``inf``."""
    s = str(text).strip().lower()
    mt = _PI_RE.match(s)
    if mt:
        coef = mt.group(1)
        k = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        return k * math.pi / (float(mt.group(2)) if mt.group(2) else 1.0)
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError):
        pass
    try:
        return float(s)
    except ValueError:
        raise UsageError(f"cannot parse number {text!r}") from None


def parse_list(value) -> List[float]:
    if value is None:
        return []
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [parse_real(v) for v in value]
    return [parse_real(v) for v in str(value).split(",") if v.strip()]


def _decimal_resolution(text) -> float:
    """Half a unit in the last typed decimal place, 0 for non-decimal forms."""
    mt = re.fullmatch(r"\s*[+-]?\d*\.(\d+)\s*", str(text))
    return 0.5 * 10.0 ** -len(mt.group(1)) if mt else 0.0


def time_values(value, eps_sing: float = gc.EPS_SING) -> List[float]:
    """Parse a time list and reject entries that are ``k pi`` to their typed precision.

    ``3.14159265`` equals ``pi`` to all eight places given, so it is refused
    like ``pi`` itself even though it sits slightly outside ``eps_sing``.
    """
    raw = value if isinstance(value, (list, tuple)) else (
        [value] if isinstance(value, (int, float)) else
        [v for v in str(value).split(",") if v.strip()])
    out = []
    for item in raw:
        t = parse_real(item)
        k = round(t / math.pi)
        tol = max(eps_sing, _decimal_resolution(item))
        if abs(t - k * math.pi) <= tol or gc.covariance_q(t, eps_sing).singular:
            raise SingularTimeError(
                f"singular time t={t!r}: t mod pi = {math.remainder(t, math.pi):.3g} "
                f"is within {tol:g} of a multiple of pi")
        out.append(t)
    return out


def parse_complex(value) -> complex:
    """``a_re`` or ``a_re,a_im`` (also accepts a two-element list)."""
    parts = parse_list(value)
    if len(parts) not in (1, 2):
        raise UsageError(f"expected a_re[,a_im], got {value!r}")
    return complex(parts[0], parts[1] if len(parts) == 2 else 0.0)


def parse_tol(items) -> Dict[str, float]:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects key=value, got {item!r}")
        out[key.strip()] = parse_real(val)
    return out


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("grid and output")
    g.add_argument("--m", type=int, help="dimension 1..3 (default 1)")
    g.add_argument("--n", type=int, help="nodes per axis, even >= 16 (default 512)")
    g.add_argument("--r", type=str, help="box half-extent (default 12)")
    g.add_argument("--out", help="output directory (default .)")
    g.add_argument("--config", help="JSON config file; flags override its values")
    g.add_argument("--tol", action="append", metavar="KEY=VAL",
                   help="override a tolerance; repeatable")
    g.add_argument("--inject-fault", choices=FAULTS, help=argparse.SUPPRESS)

    parser = _Parser(prog="ou-schro", description=__doc__.split("\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog="Set OU_SCHRO_THREADS to cap worker threads.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("propagate", parents=[common], help="evolve one datum")
    p.add_argument("--op", choices=("ou", "ho", "mehler"), help="operator (default ou)")
    p.add_argument("--t", help="time; accepts forms like 1.5, pi/2, 3pi/4")
    p.add_argument("--path", choices=("transform", "kernel", "direct", "gauge"),
                   help="ou: transform|kernel (default transform); ho: direct|gauge")
    p.add_argument("--omega", type=str, help="Mehler frequency (default 0.25)")
    p.add_argument("--psi-gauss", metavar="A_RE[,A_IM]",
                   help="datum psi = exp(-a|x|^2) in flat variables (default 1)")
    p.add_argument("--phi-gauss", metavar="A_RE[,A_IM]", help="datum phi = exp(-a|x|^2)")
    p.add_argument("--phi", choices=("const",), help="phi = 1")

    v = sub.add_parser("validate", parents=[common], help="run the invariant suite")
    v.add_argument("--only", help="comma list of checks: " + ", ".join(CHECKS))
    v.add_argument("--psi-gauss", metavar="A_RE[,A_IM]",
                   help="test state psi = exp(-a|x|^2) (default 1)")

    d = sub.add_parser("dispersive", parents=[common], help="dispersive ratio sweep")
    d.add_argument("--p", help=f"comma list of exponents (default {DEFAULT_P})")
    d.add_argument("--t", help=f"comma list of times (default {DEFAULT_DISPERSIVE_T})")
    d.add_argument("--psi-gauss", metavar="A_RE[,A_IM]",
                   help="extra state added to the default family")

    u = sub.add_parser("uncertainty", parents=[common], help="uncertainty product sweep")
    u.add_argument("--t", help="comma list of times s (default pi/6,pi/4,pi/2,2.2,4)")

    sub.add_parser("report", parents=[common], help="summarize reports in --out")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
        doc = {k.replace("-", "_"): v for k, v in doc.items()}
        unknown = sorted(set(doc) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys {unknown}")
        cfg.update(doc)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if key == "tol":
            cfg["tol"] = {**(cfg.get("tol") or {}), **parse_tol(val)}
        elif val is not None:
            cfg[key] = val
    try:
        cfg["m"], cfg["n"] = int(cfg["m"]), int(cfg["n"])
    except (TypeError, ValueError):
        raise UsageError("m and n must be integers") from None
    cfg["r"] = parse_real(cfg["r"])
    cfg["omega"] = parse_real(cfg["omega"])
    cfg["tol"] = {k: float(v) for k, v in (cfg["tol"] or {}).items()}
    bad = sorted(set(cfg["tol"]) - set(DEFAULT_TOLERANCES) - {
        "oracle", "mehler_const", "dispersive", "margin"})
    if bad:
        raise UsageError(f"unknown tolerance keys {bad}")
    try:
        cfg["grid"] = make_grid(cfg["m"], cfg["n"], cfg["r"])
    except ValueError as exc:
        raise UsageError(f"invalid grid: {exc}") from None
    return cfg


# -- output ----------------------------------------------------------------------------


def _clean(obj):
    """Make a report JSON-safe: non-finite floats become strings, numpy scalars plain."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    if isinstance(obj, complex):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    return obj


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, doc: dict) -> None:
    _atomic_write(path, json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_table(path: Path, rows: Sequence[dict]) -> None:
    buf = io.StringIO()
    if rows:
        cols = list(rows[0])
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in cols])
    _atomic_write(path, buf.getvalue())


def write_field(path: Path, f: Field) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write_csv(f, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config_record(cfg: dict, keys: Sequence[str]) -> dict:
    return {k: cfg[k] for k in keys}


# -- fault injection --------------------------------------------------------------------


def _jplus_phase_everywhere(et, m):
    # deliberately wrong: J^+ phase used on J^- as well
    phase = cmath.exp(1j * m * et.t_reduced / 2) / cmath.exp(1j * math.pi * m / 4)
    return (4.0 * math.pi) ** (-m / 2) * phase / abs(et.sin_t) ** (m / 2)


@contextmanager
def injected(fault: Optional[str]):
    if fault is None:
        yield
        return
    original = propagator._kernel_prefactor
    propagator._kernel_prefactor = _jplus_phase_everywhere
    try:
        yield
    finally:
        propagator._kernel_prefactor = original


# -- commands --------------------------------------------------------------------------


def _require_tolerance(cfg, key, default):
    return cfg["tol"].get(key, default)


def _datum(cfg: dict) -> tuple:
    """The initial Gaussian in the operator's own variable (``u`` for ho, ``phi`` otherwise)."""
    given = [k for k in ("psi_gauss", "phi_gauss", "phi") if cfg[k] is not None]
    if len(given) > 1:
        raise UsageError(f"choose one of --psi-gauss/--phi-gauss/--phi, got {given}")
    m = cfg["m"]
    key = given[0] if given else "psi_gauss"
    if key == "phi":
        if cfg["phi"] != "const":
            raise UsageError(f"unknown --phi value {cfg['phi']!r}")
        phi = GaussianExponential.radial(m, 0.0)
    else:
        a = parse_complex(cfg[key] if cfg[key] is not None else "1")
        phi = GaussianExponential.radial(m, a - 0.25 if key == "psi_gauss" else a)
    if cfg["op"] == "ho":
        # flat variable u = exp(-|x|^2/4) phi
        return GaussianExponential(m, phi.a + 0.25, phi.b, phi.c)
    return phi


def cmd_propagate(cfg: dict) -> int:
    if cfg["t"] is None:
        raise UsageError("propagate needs --t")
    op, path = cfg["op"], cfg["path"]
    ts = parse_list(cfg["t"]) if op == "mehler" else time_values(cfg["t"])
    if len(ts) != 1:
        raise UsageError("propagate takes a single --t")
    t = ts[0]
    allowed = {"ou": (None, "transform", "kernel"), "ho": (None, "direct", "gauge"),
               "mehler": (None,)}
    if path not in allowed[op]:
        raise UsageError(f"--path {path!r} is not valid for --op {op}")
    if op == "mehler" and not (t > 0 and cfg["omega"] > 0):
        raise UsageError("mehler needs t > 0 and omega > 0")
    grid = cfg["grid"]
    g0 = _datum(cfg)
    try:
        initial = sample(g0, grid)
    except FloatingPointError as exc:
        raise UsageError(f"datum cannot be sampled on this grid: {exc}") from None
    pcfg = PropagatorConfig()
    with injected(cfg["inject_fault"]):
        final = propagator.propagate(op, initial, t, pcfg, path, cfg["omega"])

    if op == "ou":
        ref_g = gc.ou_evolve(g0, t, "symbol")
        err = relative_gamma_error(final, sample(ref_g, grid))
        norm = "gamma"
    elif op == "ho":
        ref_g = gc.ho_evolve(g0, t, "direct")
        err = relative_l2_error(final, sample(ref_g, grid))
        norm = "flat"
    else:
        ref_g = gc.mehler_evolve(g0, t, cfg["omega"])
        err = relative_l2_error(final, sample(ref_g, grid))
        norm = "flat"
    tol = _require_tolerance(cfg, "oracle", ORACLE_TOL)
    oracle = {"relative_error": err, "norm": norm, "tolerance": tol,
              "passed": bool(err < tol), "initial": g0.to_record(), "final": ref_g.to_record()}
    if op == "mehler" and cfg["phi"] == "const":
        dev = float(np.max(np.abs(final.values - 1.0)))
        ctol = _require_tolerance(cfg, "mehler_const", MEHLER_CONST_TOL)
        oracle["max_abs_deviation_from_one"] = {"value": dev, "tolerance": ctol,
                                                "passed": bool(dev < ctol)}
        oracle["passed"] = oracle["passed"] and dev < ctol

    out = Path(cfg["out"])
    write_field(out / "initial.csv", initial)
    write_field(out / "final.csv", final)
    flags = list(final.flags)
    doc = {
        "command": "propagate",
        "config": _config_record(cfg, ("m", "n", "r", "t", "op", "path", "omega",
                                       "psi_gauss", "phi_gauss", "phi")),
        "meta": final.meta, "flags": flags, "oracle": oracle,
        "passed": oracle["passed"],
    }
    write_json(out / "propagate.json", doc)
    print(f"propagate op={op} t={t!r} branch={final.meta.get('branch', 'n/a')} "
          f"oracle_error={err:.3e} (tol {tol:g}) flags={flags or 'none'}")
    # a flagged field is expected to miss the oracle; the flag is the verdict
    if flags:
        return EXIT_FLAGGED
    return EXIT_OK if oracle["passed"] else EXIT_ASSERT


def cmd_validate(cfg: dict) -> int:
    only = cfg["only"]
    if isinstance(only, str):
        only = [s.strip() for s in only.split(",") if s.strip()]
    psi_a = parse_complex(cfg["psi_gauss"]) if cfg["psi_gauss"] is not None else 1.0 + 0j
    if psi_a.real <= 0:
        raise UsageError("validate state needs Re a > 0")
    tolerances = {**DEFAULT_TOLERANCES,
                  **{k: v for k, v in cfg["tol"].items() if k in DEFAULT_TOLERANCES}}
    vcfg = ValidateConfig(cfg["m"], cfg["n"], cfg["r"], psi_a, tolerances)
    try:
        with injected(cfg["inject_fault"]):
            records = run_checks(vcfg, only)
    except ValueError as exc:
        if isinstance(exc, SingularTimeError):
            raise
        raise UsageError(str(exc)) from None
    passed = all(r.passed for r in records)
    doc = {
        "command": "validate",
        "config": {"m": vcfg.m, "n": vcfg.n, "r": vcfg.r, "psi_a": psi_a,
                   "only": only, "tolerances": tolerances},
        "checks": [r.to_record() for r in records],
        "passed": passed,
    }
    write_json(Path(cfg["out"]) / "validate.json", doc)
    for r in records:
        worst = max((mm for mm in r.measurements if not mm["passed"]),
                    key=lambda mm: mm["value"], default=None)
        note = "" if worst is None else f"  ({worst['label']}={worst['value']:.3e}, tol {worst['tolerance']:g})"
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}{note}")
    return EXIT_OK if passed else EXIT_ASSERT


def dispersive_states(ts: Sequence[float], extra: Optional[complex]) -> List[tuple]:
    """``(family, t, a)``: a plain Gaussian, the chirp-cancelled one, and a chirped one."""
    states = []
    for t in ts:
        cot = math.cos(t) / math.sin(t)
        states.append(("gaussian", t, 1.0 + 0j))
        states.append(("cancellation", t, complex(1.0, 0.25 * cot)))
        states.append(("chirped", t, 1.0 - 1.0j))
        if extra is not None:
            states.append(("user", t, extra))
    return states


def cmd_dispersive(cfg: dict) -> int:
    ps = parse_list(cfg["p"] if cfg["p"] is not None else DEFAULT_P)
    ts = time_values(cfg["t"] if cfg["t"] is not None else DEFAULT_DISPERSIVE_T)
    if any(p < 1 for p in ps):
        raise UsageError("every p must be >= 1")
    extra = parse_complex(cfg["psi_gauss"]) if cfg["psi_gauss"] is not None else None
    if extra is not None and extra.real <= 0:
        raise UsageError("--psi-gauss needs Re a > 0")
    grid = cfg["grid"]
    m = cfg["m"]
    tol = _require_tolerance(cfg, "dispersive", DISPERSIVE_TOL)
    rows = []
    for family, t, a in dispersive_states(ts, extra):
        g = GaussianExponential.radial(m, a)
        field = sample(g, grid)
        for p in ps:
            for source, datum in (("closed", g), ("grid", field)):
                res = dispersive_probe(datum, t, p)
                equality = source == "closed" and res.in_theorem and (
                    family == "cancellation" or p == 2.0)
                if not res.in_theorem:
                    ok = True
                elif equality:
                    ok = abs(res.ratio - 1.0) < tol
                else:
                    ok = res.ratio <= 1.0 + tol
                rows.append({
                    "family": family, "a_re": a.real, "a_im": a.imag, "t": t, "p": p,
                    "p_prime": res.p_prime, "source": source, "lhs": res.lhs,
                    "rhs": res.rhs, "ratio": res.ratio, "tolerance": tol,
                    "in_theorem": res.in_theorem, "equality_case": equality,
                    "exceeds_one": res.ratio > 1.0 + tol, "passed": ok,
                })
    passed = all(r["passed"] for r in rows)
    out = Path(cfg["out"])
    write_table(out / "dispersive.csv", rows)
    counter = [r for r in rows if not r["in_theorem"] and r["exceeds_one"]]
    write_json(out / "dispersive.json", {
        "command": "dispersive",
        "config": {"m": m, "n": cfg["n"], "r": cfg["r"], "p": ps, "t": ts},
        "rows": rows, "passed": passed, "out_of_theorem_exceedances": len(counter),
    })
    worst = max((r["ratio"] for r in rows if r["in_theorem"]), default=math.nan)
    print(f"dispersive rows={len(rows)} max in-theorem ratio={worst:.12f} "
          f"out-of-theorem rows above 1: {len(counter)}")
    return EXIT_OK if passed else EXIT_ASSERT


HARDY_STATES = (1.0 + 0j, 0.5 + 0j, 2.0 + 0j, 1.0 + 0.5j, 1.0 - 1.0j, 0.25 + 2.0j)


def cmd_uncertainty(cfg: dict) -> int:
    ts = time_values(cfg["t"]) if cfg["t"] is not None else list(DEFAULT_TIMES)
    margin = _require_tolerance(cfg, "margin", MARGIN)
    rows = []
    for c, theta, s, state in default_uncertainty_family(times=ts):
        for probe in (uncertainty_probe_l2, uncertainty_probe_linf):
            res = probe(state, s)
            bound_ok = res.product <= res.threshold + CANCELLATION_TOL
            endpoint_ok = res.at_endpoint == res.chirp_cancelled
            rows.append({
                "kind": res.kind, "c": c, "theta": theta, "s": s, "a_max": res.a_max,
                "b_max": res.b_max, "product": res.product, "threshold": res.threshold,
                "tolerance": CANCELLATION_TOL, "chirp_cancelled": res.chirp_cancelled,
                "at_endpoint": res.at_endpoint, "attained": res.attained, "C": res.C,
                "margin": margin,
                "below_margin": res.chirp_cancelled or res.product < res.threshold - margin,
                "passed": bound_ok and endpoint_ok,
            })
    hardy = []
    for a in HARDY_STATES:
        hp = hardy_probe(GaussianExponential.radial(1, a))
        real = a.imag == 0
        dev = abs(hp.product - HARDY_THRESHOLD)
        hardy.append({
            "kind": "hardy", "a_re": a.real, "a_im": a.imag, "a_rate": hp.a_rate,
            "b_rate": hp.b_rate, "product": hp.product, "threshold": HARDY_THRESHOLD,
            "tolerance": CANCELLATION_TOL, "real_coefficients": real,
            "passed": (dev < CANCELLATION_TOL) == real,
        })
    passed = all(r["passed"] for r in rows + hardy)
    out = Path(cfg["out"])
    write_table(out / "uncertainty.csv", rows)
    write_table(out / "hardy.csv", hardy)
    off = [r for r in rows if not r["chirp_cancelled"]]
    write_json(out / "uncertainty.json", {
        "command": "uncertainty",
        "config": {"t": ts, "margin": margin},
        "rows": rows, "hardy": hardy, "passed": passed,
        "max_product": max(r["product"] for r in rows),
        "max_product_off_cancellation": max((r["product"] for r in off), default=math.nan),
        "rows_within_margin_off_cancellation": sum(not r["below_margin"] for r in off),
    })
    print(f"uncertainty rows={len(rows)} max product={max(r['product'] for r in rows):.15f} "
          f"(threshold 1/16) hardy rows={len(hardy)}")
    return EXIT_OK if passed else EXIT_ASSERT


REPORT_FILES = ("propagate.json", "validate.json", "dispersive.json", "uncertainty.json")

GNUPLOT = """\
set datafile separator ','
set key outside
set terminal pngcairo size 900,600
set output 'dispersive.png'
set xlabel 'p'
set ylabel 'ratio'
plot 'dispersive.csv' every ::1 using 5:($7 eq "closed" ? $10 : 1/0) with points title 'closed form', \\
     '' every ::1 using 5:($7 eq "grid" ? $10 : 1/0) with points title 'grid', \\
     1 with lines dt 2 title 'bound'
set output 'uncertainty.png'
set xlabel 's'
set ylabel 'a b sin^2 s'
plot 'uncertainty.csv' every ::1 using 4:7 with points title 'product', \\
     0.0625 with lines dt 2 title '1/16'
"""


def cmd_report(cfg: dict) -> int:
    out = Path(cfg["out"])
    summary = {}
    for name in REPORT_FILES:
        path = out / name
        if not path.exists():
            continue
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: not valid JSON ({exc})") from None
        entry = {"passed": bool(doc.get("passed", False))}
        if "checks" in doc:
            entry["checks"] = {c["name"]: c["passed"] for c in doc["checks"]}
        if "rows" in doc:
            entry["rows"] = len(doc["rows"])
        if "flags" in doc:
            entry["flags"] = doc["flags"]
        summary[name] = entry
    if not summary:
        raise UsageError(f"no reports found in {out}")
    passed = all(e["passed"] for e in summary.values())
    flagged = any(e.get("flags") for e in summary.values())
    write_json(out / "report.json", {"command": "report", "reports": summary,
                                     "passed": passed})
    _atomic_write(out / "plots.gp", GNUPLOT)
    for name, e in summary.items():
        print(f"{'PASS' if e['passed'] else 'FAIL'} {name}")
    if not passed:
        return EXIT_ASSERT
    return EXIT_FLAGGED if flagged else EXIT_OK


COMMANDS = {
    "propagate": cmd_propagate,
    "validate": cmd_validate,
    "dispersive": cmd_dispersive,
    "uncertainty": cmd_uncertainty,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SingularTimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OverflowError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
