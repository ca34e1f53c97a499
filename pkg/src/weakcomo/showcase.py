"""Worked examples: sin/cos on uniform windows, a two-point joint, Gaussian pairs.

Each function returns plain numbers so the command line can write them out
and the tests can compare them against closed forms.
"""

from __future__ import annotations

import math

import numpy as np

from .prob_core import DEFAULT_QUAD_NODES, FunctionHandle, LineMeasure, independent_product, joint_from_matrix
from .weak_comon import GAUSSIAN_REGIONS, cpi, cross_covariances, gaussian_cond_corr, h_star, product_dominance_gap, wc_fun
from .prob_core import RandomVariable, FiniteProbSpace

SIN = FunctionHandle("sin", np.sin)
COS = FunctionHandle("cos", np.cos)

WINDOWS = ("left", "center", "right")


def window(a: float, where: str) -> tuple:
    """``[0, a]``, the centered ``[(pi-a)/2, (pi+a)/2]`` or ``[pi-a, pi]``."""
    if where == "left":
        return 0.0, a
    if where == "center":
        return 0.5 * (math.pi - a), 0.5 * (math.pi + a)
    if where == "right":
        return math.pi - a, math.pi
    raise ValueError(f"window must be one of {WINDOWS}, got {where!r}")


def delta_closed_form(a, where: str):
    """Closed form of the sin/cos integral under the uniform law on the window."""
    a = np.asarray(a, dtype=float)
    right = 2.0 * np.sin(a) * (1.0 - np.cos(a)) / a**2 - np.sin(a) ** 2 / a
    if where == "right":
        return right
    if where == "left":
        return -right
    if where == "center":
        return np.zeros_like(a)
    raise ValueError(f"window must be one of {WINDOWS}, got {where!r}")


def delta_quadrature(a: float, where: str, nodes: int = DEFAULT_QUAD_NODES) -> float:
    lo, hi = window(a, where)
    u = LineMeasure.uniform(lo, hi, nodes)
    return wc_fun(SIN, COS, independent_product(u, u)).value


def delta_table(points: int = 200, nodes: int = DEFAULT_QUAD_NODES) -> dict:
    """``a`` on ``(0, pi]`` in ``points`` equal steps, closed forms and quadrature.

    Returns ``{"a": ..., "<window>": closed form, "<window>_quad": quadrature,
    "max_abs_discrepancy": ...}``.
    """
    a = math.pi * np.arange(1, points + 1) / points
    out = {"a": a}
    worst = 0.0
    for where in WINDOWS:
        exact = delta_closed_form(a, where)
        quad = np.array([delta_quadrature(t, where, nodes) for t in a])
        out[where] = exact
        out[f"{where}_quad"] = quad
        worst = max(worst, float(np.max(np.abs(exact - quad))))
    out["max_abs_discrepancy"] = worst
    return out


def two_point_joint():
    """The joint of ``(V, W)`` on ``{0, pi/2} x {2pi/3, pi}`` with weights 1,2 / 2,5 tenths."""
    return joint_from_matrix([[0.1, 0.2], [0.2, 0.5]], row_values=[0.0, math.pi / 2],
                             col_values=[2 * math.pi / 3, math.pi], label="V,W")


def example51() -> dict:
    """Cross covariances of sin and cos under :func:`two_point_joint`.

    Also returns both sides of the comparison between the joint and the
    product of its marginals, evaluated for ``X = sin``, ``Y = cos`` on the
    union of the two supports.
    """
    joint = two_point_joint()
    c1, c2 = cross_covariances(SIN, COS, joint)
    sq, support = joint.on_common_support()
    space = FiniteProbSpace(np.full(support.size, 1.0 / support.size))
    X = RandomVariable(space, SIN(support), "sin")
    Y = RandomVariable(space, COS(support), "cos")
    gap = product_dominance_gap(X, Y, sq)
    hs = h_star(COS, joint)
    return {
        "cov_g_V_h_W": c1,
        "cov_h_V_g_W": c2,
        "c_pi": cpi(SIN, COS, joint),
        "joint_integral": gap.lhs,
        "product_integral": gap.rhs,
        "gap_minus_2c_pi": (gap.rhs - gap.lhs) - 2.0 * gap.cpi_value,
        "h_star": {"0": float(hs(0.0)), "pi/2": float(hs(math.pi / 2))},
    }


def gaussian_table(cs=(-0.5, 0.0, 0.5), n: int = 10**6, seed: int = 0) -> list:
    """Conditional correlation estimates for each ``c`` and region."""
    rows = []
    for c in cs:
        for region in GAUSSIAN_REGIONS:
            est = gaussian_cond_corr(c, region, n, seed)
            rows.append({"c": c, "region": region, **est.to_dict()})
    return rows
