"""``weakcomo <command> --config <path> [--seed N] [--tol X] [--out <dir>]``.

Commands
--------
wc-check
    Weak comonotonicity of two scenario columns over a measure family.
aggregate
    Worst-case VaR and ES of a sum with fixed marginals, with the extremal
    coupling and, for ``m <= 8``, the permutation oracle.
share
    Optimal quantile risk sharing under the ``↑_beta`` constraint.
demo
    Writes ``delta.csv``, ``example51.json`` and ``gaussian.json``.

Exit codes: 0 success, 2 unreadable input, 3 violated precondition or
off-grid level, 4 internal numerical inconsistency.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np

from . import aggregation as agg
from . import risk_sharing as rs
from . import showcase
from .errors import InputFormatError, InvariantViolation, QuadratureFailure, WeakComoError
from .io import problem_from_dict, read_joint_csv, read_json, read_scenario_csv, resolve
from .prob_core import DEFAULT_QUAD_NODES, RandomVariable
from .risk_measures import var
from .weak_comon import (
    DEFAULT_TOL,
    explicit_family,
    family_point_masses,
    family_set_masses,
    family_tail_P,
    family_tail_Q,
    family_values,
    product_dominance_gap,
    wc_family,
    WcVerdict,
)

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_NUMERIC = 0, 2, 3, 4
NUMERIC_TOL = 1e-6
MAX_LISTED_MEMBERS = 1000
COMMANDS = ("wc-check", "aggregate", "share", "demo")


class NumericFailure(Exception):
    """A cross-check exceeded its tolerance; maps to exit code 4."""


@dataclass
class RunConfig:
    command: str
    config_path: Optional[Path]
    options: dict = field(default_factory=dict)
    seed: int = 0
    tol: float = DEFAULT_TOL
    out: Path = Path(".")
    quad_nodes: int = DEFAULT_QUAD_NODES

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputFormatError(f"unknown command {self.command!r}")
        if not self.tol > 0:
            raise InputFormatError(f"tolerance must be positive, got {self.tol}")
        if self.quad_nodes < 8:
            raise InputFormatError(f"quadrature nodes must be at least 8, got {self.quad_nodes}")

    def path(self, key: str) -> Path:
        if key not in self.options:
            raise InputFormatError(f"config is missing {key!r}")
        return resolve(self.config_path or "./x", self.options[key])


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _clean(obj):
    """Round floats to 12 significant digits and make the tree JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        x = float(f"{x:.12g}")
        return 0.0 if x == 0 else x
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _header(cfg: RunConfig, **tolerances) -> dict:
    return {"command": cfg.command, "version": _version(), "seed": cfg.seed,
            "tolerances": {"tol": cfg.tol, **tolerances}}


# --------------------------------------------------------------------------
# wc-check
# --------------------------------------------------------------------------


def _family(choice: str, X: RandomVariable, cfg: RunConfig):
    if choice.startswith("tail_P:"):
        return family_tail_P(X, float(choice.split(":", 1)[1]))
    if choice.startswith("tail_Q:"):
        return family_tail_Q(X, float(choice.split(":", 1)[1]))
    if choice in ("set_masses", "set_masses_diagonal"):
        mode = "pairs" if choice == "set_masses" else "diagonal"
        return family_set_masses(X, mode, seed=cfg.seed)
    if choice == "point_masses":
        return family_point_masses(X.space)
    if choice == "explicit":
        members = cfg.options.get("members")
        if members is None:
            members = [(X.space.probs, X.space.probs)]
        if "joint_csv" in cfg.options:
            members = list(members) + [read_joint_csv(cfg.path("joint_csv"))]
        return explicit_family(members, X.space)
    raise InputFormatError(f"unknown family {choice!r}")


def cmd_wc_check(cfg: RunConfig) -> tuple:
    scen = read_scenario_csv(cfg.path("scenario_csv"))
    if len(scen.names) < 2:
        raise InputFormatError("wc-check needs at least two value columns")
    X = scen[cfg.options.get("x", scen.names[0])]
    Y = scen[cfg.options.get("y", scen.names[1])]
    choice = str(cfg.options.get("family", "set_masses"))
    try:
        fam = _family(choice, X, cfg)
    except ValueError as exc:
        if isinstance(exc, WeakComoError):
            raise
        raise InputFormatError(f"family {choice!r}: {exc}") from None
    summary = wc_family(X, Y, fam, cfg.tol)
    listed = []
    for ids, vals in family_values(X, Y, fam):
        if isinstance(ids, str):
            listed.append(WcVerdict(float(vals[0]), cfg.tol, ids).to_dict())
        else:
            for a, b, v in zip(ids[0], ids[1], vals):
                listed.append(WcVerdict(float(v), cfg.tol, fam.member_id(int(a), int(b))).to_dict())
                if len(listed) >= MAX_LISTED_MEMBERS:
                    break
        if len(listed) >= MAX_LISTED_MEMBERS:
            break
    report = {**_header(cfg), "x": X.name, "y": Y.name, "family": choice,
              "summary": summary.to_dict(), "members": listed,
              "members_truncated": len(fam) > len(listed)}
    if "joint_csv" in cfg.options:
        joint = read_joint_csv(cfg.path("joint_csv"))
        try:
            gap = product_dominance_gap(X, Y, joint)
        except InvariantViolation as exc:
            raise NumericFailure(str(exc)) from None
        report["joint"] = {"label": joint.label, "joint_integral": gap.lhs,
                           "product_integral": gap.rhs, "c_pi": gap.cpi_value,
                           "product_dominates": gap.product_dominates}
    return EXIT_OK, report


# --------------------------------------------------------------------------
# aggregate
# --------------------------------------------------------------------------


def _marginals(cfg: RunConfig):
    o = cfg.options
    if "fx" in o and "fy" in o:
        try:
            return np.asarray(o["fx"], dtype=float), np.asarray(o["fy"], dtype=float)
        except (TypeError, ValueError):
            raise InputFormatError("fx and fy must be lists of numbers") from None
    scen = read_scenario_csv(cfg.path("scenario_csv"))
    if not scen.space.is_equal_weight:
        raise InputFormatError("aggregate needs equally weighted scenario rows")
    x = scen[o.get("x", scen.names[0])].values
    y = scen[o.get("y", scen.names[1] if len(scen.names) > 1 else scen.names[0])].values
    return x, y


def cmd_aggregate(cfg: RunConfig) -> tuple:
    fx, fy = _marginals(cfg)
    if "p" not in cfg.options:
        raise InputFormatError("config is missing 'p'")
    p = float(cfg.options["p"])
    wv = agg.worst_var_two(fx, fy, p)
    we = agg.worst_es_two(fx, fy, p)
    report = {**_header(cfg, numeric=NUMERIC_TOL), "p": p, "m": int(fx.size),
              "worst_var": wv, "worst_es": we}
    distinct = np.unique(fx).size == fx.size and np.unique(fy).size == fy.size
    if distinct:
        c = agg.build_worst_coupling(fx, fy, p)
        checks = {name: agg.es_maximizer_check(cp, p)
                  for name, cp in (("comonotone", agg.comonotone_coupling(fx, fy)), ("worst_var", c))}
        report["coupling"] = {"pairs": c.pairs(), "var_of_sum": var(c.total, p)}
        report["es_maximizer_check"] = {k: {"es_additive": v.es_additive, "wc_tail": v.wc_tail}
                                        for k, v in checks.items()}
        if abs(report["coupling"]["var_of_sum"] - wv) > NUMERIC_TOL:
            raise NumericFailure(f"coupling attains {report['coupling']['var_of_sum']} not {wv}")
    else:
        report["coupling"] = None
        report["coupling_skipped"] = "tied values"
    if fx.size <= 8:
        bf = agg.brute_force_worst_var(fx, fy, p)
        agree = abs(bf.max_value - wv) <= NUMERIC_TOL
        report["oracle"] = {"max_value": bf.max_value, "n_maximizers": bf.n_maximizers,
                            "argmax_permutation": list(bf.argmax_permutation), "agreement": agree}
        if not agree:
            raise NumericFailure(f"oracle {bf.max_value} differs from worst_var {wv}")
    return EXIT_OK, report


# --------------------------------------------------------------------------
# share
# --------------------------------------------------------------------------


def cmd_share(cfg: RunConfig) -> tuple:
    prob = problem_from_dict(cfg.options, cfg.config_path or ".")
    alloc = rs.solve(prob)
    v = rs.v_beta(prob)
    report = {**_header(cfg, numeric=NUMERIC_TOL), "alphas": list(prob.alphas), "beta": prob.beta,
              "gamma": prob.gamma, "v_beta": v, "allocation": alloc.to_dict()}
    ok = alloc.covers_total and all(alloc.up_beta) and abs(alloc.objective - v) <= NUMERIC_TOL
    trials = int(cfg.options.get("trials", 0))
    if trials > 0:
        best = rs.randomized_admissible_search(prob, trials, cfg.seed)
        report["oracle_minimum"] = best
        report["oracle_trials"] = trials
        ok = ok and best >= v - NUMERIC_TOL
    if not ok:
        raise NumericFailure("allocation certificates or oracle disagree with v_beta")
    return EXIT_OK, report


# --------------------------------------------------------------------------
# demo
# --------------------------------------------------------------------------


def cmd_demo(cfg: RunConfig) -> tuple:
    points = int(cfg.options.get("points", 200))
    n = int(cfg.options.get("gaussian_n", 10**6))
    cfg.out.mkdir(parents=True, exist_ok=True)

    try:
        table = showcase.delta_table(points, cfg.quad_nodes)
    except QuadratureFailure as exc:
        raise NumericFailure(str(exc)) from None
    with open(cfg.out / "delta.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "delta_left", "delta_center", "delta_right"])
        for row in zip(table["a"], table["left"], table["center"], table["right"]):
            w.writerow([f"{v:.12g}" for v in row])

    ex = showcase.example51()
    (cfg.out / "example51.json").write_text(dump_json({**_header(cfg), **ex}), encoding="utf-8")
    gauss = showcase.gaussian_table(n=n, seed=cfg.seed)
    (cfg.out / "gaussian.json").write_text(
        dump_json({**_header(cfg), "n": n, "rows": gauss}), encoding="utf-8")

    report = {**_header(cfg, numeric=NUMERIC_TOL), "quad_nodes": cfg.quad_nodes, "points": points,
              "max_abs_discrepancy": table["max_abs_discrepancy"],
              "files": ["delta.csv", "example51.json", "gaussian.json"]}
    if not table["max_abs_discrepancy"] <= NUMERIC_TOL:
        raise NumericFailure(f"closed form vs quadrature discrepancy {table['max_abs_discrepancy']:.3g}")
    return EXIT_OK, report


HANDLERS = {"wc-check": cmd_wc_check, "aggregate": cmd_aggregate, "share": cmd_share, "demo": cmd_demo}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weakcomo", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="JSON configuration (optional for demo)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=DEFAULT_TOL)
    ap.add_argument("--out", type=Path, default=Path("."))
    return ap


def make_config(args) -> RunConfig:
    options = read_json(args.config) if args.config else {}
    if args.config is None and args.command != "demo":
        raise InputFormatError(f"{args.command} needs --config")
    try:
        nodes = int(os.environ.get("WEAKCOMO_QUAD_NODES", DEFAULT_QUAD_NODES))
    except ValueError:
        raise InputFormatError("WEAKCOMO_QUAD_NODES must be an integer") from None
    if not 0 <= args.seed < 2**64:
        raise InputFormatError("seed must fit in 64 bits")
    return RunConfig(args.command, args.config, options, args.seed, args.tol, args.out, nodes)


def run(argv=None) -> tuple:
    """Parse ``argv`` and execute; returns ``(exit_code, report_or_error)``."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            return EXIT_OK, None
        return EXIT_INPUT, {"error": "invalid arguments"}
    try:
        cfg = make_config(args)
        code, report = HANDLERS[cfg.command](cfg)
    except InputFormatError as exc:
        return EXIT_INPUT, {"error": str(exc), "kind": type(exc).__name__}
    except NumericFailure as exc:
        return EXIT_NUMERIC, {"error": str(exc), "kind": "NumericFailure"}
    except InvariantViolation as exc:
        return EXIT_NUMERIC, {"error": str(exc), "kind": type(exc).__name__}
    except ValueError as exc:
        return EXIT_PRECONDITION, {"error": str(exc), "kind": type(exc).__name__}
    if cfg.command != "demo":
        cfg.out.mkdir(parents=True, exist_ok=True)
        (cfg.out / f"{cfg.command}.json").write_text(dump_json(report), encoding="utf-8")
    return code, report


def main(argv=None) -> int:
    code, report = run(argv)
    if report is None:
        return code
    stream = sys.stdout if code == EXIT_OK else sys.stderr
    stream.write(dump_json(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
