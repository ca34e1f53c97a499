"""Reading scenario tables, joint matrices and sharing problems from disk.

Scenario CSV: a header ``weight,<name1>,<name2>,...`` and one row per atom.
Weights are renormalized.  Joint CSV: a square numeric matrix without a
header.  Problem JSON: ``{"alphas": [...], "beta": b, "scenario_csv": path}``
with an optional ``"column"`` (default: the first value column) and
``"trials"`` for the lower-bound search.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputFormatError, WeakComoError
from .prob_core import FiniteProbSpace, JointMeasure, RandomVariable, joint_from_matrix, make_space
from .risk_sharing import SharingProblem


@dataclass(frozen=True)
class Scenario:
    space: FiniteProbSpace
    columns: dict

    @property
    def names(self) -> list:
        return list(self.columns)

    def __getitem__(self, name: str) -> RandomVariable:
        try:
            return self.columns[name]
        except KeyError:
            raise InputFormatError(f"no column {name!r}; have {self.names}") from None


def _float(cell: str, where: str) -> float:
    try:
        return float(cell.strip())
    except ValueError:
        raise InputFormatError(f"{where}: {cell!r} is not a number") from None


def _rows(path) -> list:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from None


def read_scenario_csv(path) -> Scenario:
    rows = _rows(path)
    if not rows:
        raise InputFormatError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if len(header) < 2 or header[0].lower() != "weight":
        raise InputFormatError(f"{path}: header must be 'weight,<name>,...', got {rows[0]}")
    names = header[1:]
    if len(set(names)) != len(names) or any(not n for n in names):
        raise InputFormatError(f"{path}: column names must be non-empty and distinct")
    body = rows[1:]
    if not body:
        raise InputFormatError(f"{path}: no atoms")
    table = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise InputFormatError(f"{path} row {i}: expected {len(header)} fields, got {len(row)}")
        table[i - 2] = [_float(c, f"{path} row {i}") for c in row]
    try:
        space = make_space(table[:, 0])
    except WeakComoError as exc:
        raise InputFormatError(f"{path}: weights: {exc}") from None
    cols = {n: RandomVariable(space, table[:, j + 1], n) for j, n in enumerate(names)}
    return Scenario(space, cols)


def read_joint_csv(path, label: str = "") -> JointMeasure:
    rows = _rows(path)
    k = len(rows)
    if k == 0 or any(len(r) != k for r in rows):
        raise InputFormatError(f"{path}: joint matrix must be square and non-empty")
    w = np.array([[_float(c, f"{path} row {i + 1}") for c in r] for i, r in enumerate(rows)])
    try:
        return joint_from_matrix(w, label=label or Path(path).stem)
    except WeakComoError as exc:
        raise InputFormatError(f"{path}: {exc}") from None


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InputFormatError(f"{path}: top level must be an object")
    return data


def resolve(base, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else Path(base).parent / p


def problem_from_dict(data: dict, base=".") -> SharingProblem:
    """Build a :class:`SharingProblem`; relative CSV paths resolve against ``base``."""
    for key in ("alphas", "beta", "scenario_csv"):
        if key not in data:
            raise InputFormatError(f"problem is missing {key!r}")
    scen = read_scenario_csv(resolve(base, data["scenario_csv"]))
    X = scen[data.get("column", scen.names[0])]
    try:
        alphas = [float(a) for a in data["alphas"]]
        beta = float(data["beta"])
    except (TypeError, ValueError):
        raise InputFormatError("alphas must be a list of numbers and beta a number") from None
    return SharingProblem(X, tuple(alphas), beta)
