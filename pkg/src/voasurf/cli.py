"""Batch command line front end.

Every subcommand runs one library operation and prints a deterministic
report: JSON by default (keys sorted, rationals rendered as strings,
terms listed in exponent order), or CSV via ``--format csv``.  Floats
never appear unless ``--approx`` is passed, and then only as extra
display fields next to the exact values.

Series payloads share one schema::

    {"variables": ["q", "q_z1"],
     "window": {"q": [0, 4], "q_z1": [-4, 4]},
     "terms": [{"exponents": [0, -2], "value": "1"}, ...]}

A window upper bound of ``null`` means the expansion is exact in that
variable.  Insertions are written ``state@point`` with states in the
partition literal syntax understood by ``parse_state``, for example
``a[-2]a[-1]^2|1@z1`` or ``1/2*a@z``; lists are comma separated.

Exit codes: 0 on success, 1 when a module rejects the request (window
too small, order constraints violated, a failed batch check), 2 on
flag grammar errors.  Setting the VOASURF_CACHE environment variable
points the Eisenstein tables at a persistent disk cache.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping, Sequence

from .cohomology import (ClusterSetting, as_direction, cohomology_rank,
                         describe_direction, euler_poincare, involution_check,
                         make_seed)
from .elliptic import CACHE_ENV, eisenstein, weierstrass_p
from .genus2 import SewingModuli, gen_weierstrass, require_integer_eps, \
    z2_partition
from .reduction import (Insertion, ReductionDirection, cocycle_residual,
                        genus0_direct, genus0_partition, genus1_direct,
                        genus1_partition, unwind_to_partition)
from .schottky import SchottkyData, genus_g_partition, psi_full, rho_series
from .series import MultiSeries, TruncatedSeries
from .voa import GradedVector, basis, parse_state, render_state, vacuum

# Truncation orders recognised across subcommands; every one must be a
# positive integer.
_ORDER_KEYS = ("eps_order", "matrix_cutoff", "order", "q1_order", "q2_order",
               "qorder", "rho_order", "weight_cutoff", "window", "zorder")

# Reference Schottky coordinate tuples (w_-1, w_1, ..., w_-g, w_g) used
# when --coordinates is not given.
DEFAULT_COORDINATES = {1: (3, 1), 2: (3, 1, -2, 6)}


@dataclass(frozen=True)
class RunConfig:
    """One parsed invocation.

    ``orders`` holds the truncation orders by flag name, ``insertions``
    the parsed ``state@point`` list, and ``options`` every remaining
    command-specific value.
    """
    command: str
    orders: Mapping[str, int] = field(default_factory=dict)
    insertions: tuple = ()
    options: Mapping[str, Any] = field(default_factory=dict)
    output: str = None
    fmt: str = "json"
    approx: bool = False

    def __post_init__(self):
        for name, value in self.orders.items():
            if value < 1:
                raise ValueError(f"--{name.replace('_', '-')} must be a "
                                 f"positive integer, got {value}")
        for ins in self.insertions:
            if not isinstance(ins.state, GradedVector):
                raise ValueError(f"insertion at {ins.point} is not a state")


# -- flag grammar ----------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return value


def _insertion(text: str) -> Insertion:
    state, sep, point = text.partition("@")
    if not sep or not point.strip() or not state.strip():
        raise argparse.ArgumentTypeError(
            f"expected state@point, got {text!r}")
    try:
        return Insertion(parse_state(state.strip()), point.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _insertion_list(text: str) -> tuple:
    if not text.strip():
        return ()
    return tuple(_insertion(part) for part in text.split(","))


def _state_list(text: str) -> tuple:
    try:
        return tuple(parse_state(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="output format (default json)")
    common.add_argument("--output", metavar="PATH",
                        help="write the report to PATH instead of stdout")
    common.add_argument("--approx", action="store_true",
                        help="add float display fields next to the exact "
                             "values")

    parser = argparse.ArgumentParser(
        prog="voasurf",
        description="Exact correlation function computations for the rank "
                    "one Heisenberg vertex operator algebra on genus 0, 1, "
                    "2 and Schottky surfaces.",
        epilog=f"Set {CACHE_ENV} to cache Eisenstein tables on disk.")
    groups = parser.add_subparsers(dest="group", metavar="COMMAND",
                                   required=True)

    ell = groups.add_parser("elliptic", help="Eisenstein series and "
                            "Weierstrass kernels")
    ell_sub = ell.add_subparsers(dest="sub", metavar="SUBCOMMAND",
                                 required=True)
    eis = ell_sub.add_parser("eisenstein", parents=[common],
                             help="E_k(q) expansion")
    eis.add_argument("--k", type=_positive_int, required=True,
                     help="Eisenstein index (even, at least 2)")
    eis.add_argument("--order", type=_positive_int, default=10,
                     help="q truncation order (default 10)")
    eis.set_defaults(command="elliptic eisenstein")

    pm = ell_sub.add_parser("pm", parents=[common],
                            help="Weierstrass kernel P_m(z, q)")
    pm.add_argument("--m", type=_positive_int, required=True,
                    help="kernel index m >= 1")
    pm.add_argument("--zorder", type=_positive_int, default=6,
                    help="z truncation order (default 6)")
    pm.add_argument("--qorder", type=_positive_int, default=8,
                    help="q truncation order (default 8)")
    pm.set_defaults(command="elliptic pm")

    npoint = groups.add_parser(
        "npoint", parents=[common],
        help="n-point function at genus 0 or 1")
    npoint.add_argument("--genus", type=int, choices=(0, 1), required=True)
    npoint.add_argument("--insertions", type=_insertion_list, default=(),
                        help="comma-separated state@point list; empty for "
                             "the partition function")
    npoint.add_argument("--qorder", type=_positive_int, default=4,
                        help="q truncation order at genus 1 (default 4)")
    npoint.add_argument("--zorder", type=_positive_int, default=4,
                        help="mode window half-width per point (default 4)")
    path = npoint.add_mutually_exclusive_group()
    path.add_argument("--reduce", dest="path", action="store_const",
                      const="reduce", help="iterate the reduction recursion "
                      "from the partition function (default)")
    path.add_argument("--oracle", dest="path", action="store_const",
                      const="oracle", help="brute-force mode expansion")
    npoint.set_defaults(command="npoint", path="reduce")

    residual = groups.add_parser(
        "residual", parents=[common],
        help="reduction residual of a correlation function in one direction")
    residual.add_argument("--genus", type=int, choices=(0, 1), default=1)
    residual.add_argument("--insertions", type=_insertion_list, default=(),
                          help="base correlation function insertions "
                               "(default: none, the partition function)")
    residual.add_argument("--direction", type=_insertion, required=True,
                          help="reduction direction as state@point")
    residual.add_argument("--qorder", type=_positive_int, default=4)
    residual.add_argument("--zorder", type=_positive_int, default=4)
    residual.set_defaults(command="residual")

    g2 = groups.add_parser("genus2", help="epsilon-sewn two-torus surface")
    g2_sub = g2.add_subparsers(dest="sub", metavar="SUBCOMMAND",
                               required=True)
    g2p = g2_sub.add_parser("partition", parents=[common],
                            help="genus-2 partition function expansion")
    g2p.add_argument("--eps-order", type=_positive_int, default=4,
                     help="epsilon truncation order (default 4)")
    g2p.add_argument("--q1-order", type=_positive_int, default=6)
    g2p.add_argument("--q2-order", type=_positive_int, default=6)
    g2p.add_argument("-N", "--matrix-cutoff", type=_positive_int, default=8,
                     help="moment matrix cutoff, at least twice the epsilon "
                          "order (default 8)")
    g2p.set_defaults(command="genus2 partition")

    g2w = g2_sub.add_parser("pweier", parents=[common],
                            help="generalized Weierstrass kernel")
    g2w.add_argument("--p", type=_positive_int, required=True,
                     help="kernel weight (1 or 2)")
    g2w.add_argument("--j", type=_nonneg_int, default=0,
                     help="derivative index, the kernel replaces P_{j+1} "
                          "(default 0)")
    g2w.add_argument("--charts", type=int, nargs=2, choices=(1, 2),
                     default=(1, 1), metavar=("X", "Y"),
                     help="torus charts of the two arguments (default 1 1)")
    g2w.add_argument("--eps-order", type=_positive_int, default=2)
    g2w.add_argument("--q1-order", type=_positive_int, default=4)
    g2w.add_argument("--q2-order", type=_positive_int, default=4)
    g2w.add_argument("-N", "--matrix-cutoff", type=_positive_int,
                     help="moment matrix cutoff (default: twice the epsilon "
                          "order)")
    g2w.set_defaults(command="genus2 pweier")

    sch = groups.add_parser("schottky", help="genus-g Schottky surface")
    sch_sub = sch.add_subparsers(dest="sub", metavar="SUBCOMMAND",
                                 required=True)
    psi = sch_sub.add_parser("psi", parents=[common],
                             help="dressed kernel Psi_p expansion")
    psi.add_argument("--p", type=_positive_int, required=True,
                     help="kernel weight")
    psi.add_argument("-g", "--genus", type=_positive_int, required=True)
    psi.add_argument("--rho-order", type=_positive_int, default=2,
                     help="rho truncation order per handle (default 2)")
    psi.add_argument("--coordinates", type=_int_list,
                     help="comma-separated fixed points w_-1,w_1,...,"
                          "w_-g,w_g (defaults: genus 1 -> 3,1; genus 2 -> "
                          "3,1,-2,6)")
    psi.add_argument("-N", "--matrix-cutoff", type=_positive_int,
                     help="moment matrix cutoff (default: max of twice the "
                          "rho order and 2p-1)")
    psi.set_defaults(command="schottky psi")

    spart = sch_sub.add_parser("partition", parents=[common],
                               help="genus-g partition handle sum")
    spart.add_argument("-g", "--genus", type=_positive_int, required=True)
    spart.add_argument("--weight-cutoff", type=_positive_int, default=3,
                       help="total weight cutoff of the handle sum "
                            "(default 3)")
    spart.add_argument("--rho-order", type=_positive_int,
                       help="rho truncation order (default: the weight "
                            "cutoff)")
    spart.add_argument("--coordinates", type=_int_list,
                       help="fixed points as for schottky psi")
    spart.add_argument("-N", "--matrix-cutoff", type=_positive_int,
                       help="moment matrix cutoff (default: twice the rho "
                            "order)")
    spart.set_defaults(command="schottky partition")

    coh = groups.add_parser("cohomology",
                            help="reduction cohomology of graded slices")
    coh_sub = coh.add_subparsers(dest="sub", metavar="SUBCOMMAND",
                                 required=True)
    rank = coh_sub.add_parser("rank", parents=[common],
                              help="chain, kernel, image and cohomology "
                                   "ranks of one slice")
    rank.add_argument("--genus", type=int, choices=(0, 1), default=1)
    rank.add_argument("-n", type=_nonneg_int, required=True,
                      help="number of insertion slots")
    rank.add_argument("-m", type=_nonneg_int, required=True,
                      help="total weight of the slice")
    rank.add_argument("--direction", type=_insertion, action="append",
                      required=True,
                      help="reduction direction state@point; repeat for a "
                           "family")
    rank.add_argument("--combine", choices=("sum", "stack"), default="sum",
                      help="how a direction family acts (default sum)")
    rank.add_argument("--window", type=_positive_int, default=4,
                      help="mode window half-width (default 4)")
    rank.add_argument("--qorder", type=_positive_int, default=4)
    rank.add_argument("--boundary", type=_state_list,
                      help="two comma-separated boundary states at genus 0")
    rank.set_defaults(command="cohomology rank")

    euler = coh_sub.add_parser("euler", parents=[common],
                               help="Euler-Poincare ledger over a weight "
                                    "ladder")
    euler.add_argument("--genus", type=int, choices=(0, 1), default=1)
    euler.add_argument("-m", type=_nonneg_int, required=True,
                       help="weight of the level-0 slice")
    euler.add_argument("-N", type=_nonneg_int, required=True, dest="levels",
                       help="top chain level of the ladder")
    euler.add_argument("--direction", type=_insertion, action="append",
                       help="reduction direction (default a@w)")
    euler.add_argument("--combine", choices=("sum", "stack"), default="sum")
    euler.add_argument("--window", type=_positive_int, default=4)
    euler.add_argument("--qorder", type=_positive_int, default=4)
    euler.add_argument("--boundary", type=_state_list,
                       help="two comma-separated boundary states at genus 0")
    euler.set_defaults(command="cohomology euler")

    cluster = groups.add_parser("cluster",
                                help="cluster seed mutation checks")
    cluster_sub = cluster.add_subparsers(dest="sub", metavar="SUBCOMMAND",
                                         required=True)
    check = cluster_sub.add_parser(
        "check", parents=[common],
        help="run a deterministic batch of double-mutation involution "
             "trials")
    check.add_argument("--trials", type=_positive_int, default=60)
    check.add_argument("--seed", type=_nonneg_int, default=7,
                       help="random generator seed (default 7)")
    check.add_argument("--genus", type=int, choices=(0, 1),
                       help="restrict trials to one genus (default: both)")
    check.set_defaults(command="cluster check")

    golden = groups.add_parser(
        "golden", parents=[common],
        help="write or check the golden regression files for every "
             "documented example command")
    golden.add_argument("--dir", default="tests/golden", metavar="PATH",
                        help="golden file directory (default tests/golden)")
    golden.add_argument("--check", action="store_true",
                        help="compare against the stored files instead of "
                             "rewriting them; exit 1 on any drift")
    golden.set_defaults(command="golden")

    return parser


def _config_from(ns: argparse.Namespace) -> RunConfig:
    data = vars(ns).copy()
    data.pop("group", None)
    data.pop("sub", None)
    command = data.pop("command")
    fmt = data.pop("format")
    output = data.pop("output")
    approx = data.pop("approx")
    insertions = data.pop("insertions", ()) or ()
    orders = {k: data.pop(k) for k in _ORDER_KEYS
              if data.get(k) is not None}
    return RunConfig(command=command, orders=orders,
                     insertions=tuple(insertions), options=data,
                     output=output, fmt=fmt, approx=approx)


# -- serialization ---------------------------------------------------------


def _series_payload(s, approx: bool) -> dict:
    """JSON shape shared by TruncatedSeries and MultiSeries."""
    if isinstance(s, TruncatedSeries):
        variables = (s.var,)
        window = {s.var: (s.lo, s.hi)}
        items = {(e,): c for e, c in s.c.items()}
    else:
        variables = s.vars
        window = s.window
        items = s.c
    terms = []
    for key in sorted(k for k, c in items.items() if c):
        entry = {"exponents": list(key), "value": str(items[key])}
        if approx:
            entry["approx"] = float(items[key])
        terms.append(entry)
    return {"variables": list(variables),
            "window": {v: [window[v][0], window[v][1]] for v in variables},
            "terms": terms}


def _pretty(ts: TruncatedSeries) -> str:
    parts = []
    for e in sorted(ts.c):
        c = ts.c[e]
        if not c:
            continue
        mag = abs(c)
        if e == 0:
            body = str(mag)
        else:
            power = ts.var if e == 1 else f"{ts.var}^{e}"
            body = power if mag == 1 else f"{mag}{power}"
        parts.append((c < 0, body))
    if not parts:
        return "0"
    neg, body = parts[0]
    text = ("-" if neg else "") + body
    for neg, body in parts[1:]:
        text += (" - " if neg else " + ") + body
    return text


def _eps_series(ms: MultiSeries) -> MultiSeries:
    """Rename the formal half-power variable se (se^2 = eps) to eps.

    Exported genus-two series must already be even in se; the exponents
    are halved on the way out.
    """
    require_integer_eps(ms)
    if "se" not in ms.vars:
        return ms
    variables = tuple("eps" if v == "se" else v for v in ms.vars)
    window = {}
    for v in ms.vars:
        lo, hi = ms.window[v]
        if v == "se":
            window["eps"] = (max(0, lo) // 2, None if hi is None else hi // 2)
        else:
            window[v] = (lo, hi)
    order = sorted(range(len(variables)), key=lambda i: variables[i])
    out = MultiSeries(variables, window)
    for key, c in ms.c.items():
        if not c:
            continue
        out.c[tuple(key[i] // 2 if ms.vars[i] == "se" else key[i]
                    for i in order)] = c
    return out


def _render_insertion(ins: Insertion) -> str:
    return f"{render_state(ins.state)}@{ins.point}"


def _flatten(value, prefix: str, rows: list):
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(value[k], f"{prefix}.{k}" if prefix else str(k), rows)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _flatten(v, f"{prefix}[{i}]", rows)
    else:
        rows.append((prefix, "" if value is None else value))


def _csv_text(payload: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    series_keys = [k for k in sorted(payload)
                   if isinstance(payload[k], dict)
                   and {"variables", "terms"} <= set(payload[k])]
    if len(series_keys) == 1:
        body = payload[series_keys[0]]
        with_approx = any("approx" in t for t in body["terms"])
        header = list(body["variables"]) + ["value"]
        if with_approx:
            header.append("approx")
        writer.writerow(header)
        for term in body["terms"]:
            row = list(term["exponents"]) + [term["value"]]
            if with_approx:
                row.append(term["approx"])
            writer.writerow(row)
    else:
        writer.writerow(["key", "value"])
        rows = []
        _flatten(payload, "", rows)
        for key, value in rows:
            writer.writerow([key, value])
    return buf.getvalue()


def _emit(payload: dict, cfg: RunConfig):
    if cfg.fmt == "csv":
        text = _csv_text(payload)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- handlers --------------------------------------------------------------


def _run_eisenstein(cfg: RunConfig):
    k = cfg.options["k"]
    order = cfg.orders["order"]
    ts = eisenstein(k, order)
    return {"command": "elliptic eisenstein", "k": k, "order": order,
            "pretty": _pretty(ts),
            "series": _series_payload(ts, cfg.approx)}, 0


def _run_pm(cfg: RunConfig):
    m = cfg.options["m"]
    ms = weierstrass_p(m, cfg.orders["zorder"], cfg.orders["qorder"])
    return {"command": "elliptic pm", "m": m,
            "series": _series_payload(ms, cfg.approx)}, 0


def _run_npoint(cfg: RunConfig):
    genus = cfg.options["genus"]
    window = (-cfg.orders["zorder"], cfg.orders["zorder"])
    q_order = cfg.orders["qorder"]
    if cfg.options["path"] == "oracle":
        if genus == 0:
            F = genus0_direct(cfg.insertions, vacuum(), vacuum(), window)
        else:
            F = genus1_direct(cfg.insertions, q_order, window)
    else:
        directions = tuple(ReductionDirection(i)
                           for i in reversed(cfg.insertions))
        F = unwind_to_partition(directions, genus, window=window,
                                q_order=q_order)
    payload = {"command": "npoint", "genus": genus,
               "path": cfg.options["path"],
               "insertions": [_render_insertion(i) for i in cfg.insertions],
               "value": _series_payload(F.value, cfg.approx)}
    if genus == 0:
        payload["boundary"] = [render_state(s) for s in F.boundary_states]
    else:
        payload["qorder"] = q_order
        payload["q_shift"] = str(F.q_shift)
    if cfg.options["path"] == "reduce":
        payload["degenerate_steps"] = list(F.degenerate_steps)
    return payload, 0


def _run_residual(cfg: RunConfig):
    genus = cfg.options["genus"]
    window = (-cfg.orders["zorder"], cfg.orders["zorder"])
    q_order = cfg.orders["qorder"]
    if cfg.insertions:
        if genus == 0:
            F = genus0_direct(cfg.insertions, vacuum(), vacuum(), window)
        else:
            F = genus1_direct(cfg.insertions, q_order, window)
    elif genus == 0:
        F = genus0_partition(vacuum(), vacuum(), window=window)
    else:
        F = genus1_partition(q_order, window=window)
    direction = ReductionDirection(cfg.options["direction"])
    res = cocycle_residual(direction, F)
    return {"command": "residual", "genus": genus,
            "direction": _render_insertion(direction.insertion),
            "insertions": [_render_insertion(i) for i in cfg.insertions],
            "is_zero": res.is_zero(),
            "residual": _series_payload(res, cfg.approx)}, 0


def _run_g2_partition(cfg: RunConfig):
    moduli = SewingModuli(cfg.orders["q1_order"], cfg.orders["q2_order"],
                          cfg.orders["eps_order"],
                          cfg.orders["matrix_cutoff"])
    ms = _eps_series(z2_partition(moduli))
    return {"command": "genus2 partition",
            "eps_order": cfg.orders["eps_order"],
            "matrix_cutoff": cfg.orders["matrix_cutoff"],
            "q_shift": {"q1": "-1/24", "q2": "-1/24"},
            "series": _series_payload(ms, cfg.approx)}, 0


def _run_g2_pweier(cfg: RunConfig):
    eps_order = cfg.orders["eps_order"]
    cutoff = cfg.orders.get("matrix_cutoff", 2 * eps_order)
    moduli = SewingModuli(cfg.orders["q1_order"], cfg.orders["q2_order"],
                          eps_order, cutoff)
    x_chart, y_chart = cfg.options["charts"]
    ms = _eps_series(gen_weierstrass(cfg.options["p"], cfg.options["j"],
                                     x_chart, y_chart, moduli))
    return {"command": "genus2 pweier", "p": cfg.options["p"],
            "j": cfg.options["j"], "charts": [x_chart, y_chart],
            "eps_order": eps_order, "matrix_cutoff": cutoff,
            "series": _series_payload(ms, cfg.approx)}, 0


def _schottky_data(cfg: RunConfig, rho_order: int, cutoff: int):
    genus = cfg.options["genus"]
    coordinates = cfg.options.get("coordinates")
    if coordinates is None:
        coordinates = DEFAULT_COORDINATES.get(genus)
        if coordinates is None:
            raise ValueError(f"no default coordinates at genus {genus}; "
                             "pass --coordinates")
    return SchottkyData(genus, coordinates, rho_order, cutoff)


def _run_schottky_psi(cfg: RunConfig):
    p = cfg.options["p"]
    rho_order = cfg.orders["rho_order"]
    cutoff = cfg.orders.get("matrix_cutoff",
                            max(2 * rho_order, 2 * p - 1))
    data = _schottky_data(cfg, rho_order, cutoff)
    ms = rho_series(psi_full(p, data), data)
    return {"command": "schottky psi", "p": p, "genus": data.genus,
            "coordinates": [str(w) for w in data.coordinates],
            "rho_order": rho_order, "matrix_cutoff": cutoff,
            "series": _series_payload(ms, cfg.approx)}, 0


def _run_schottky_partition(cfg: RunConfig):
    weight_cutoff = cfg.orders["weight_cutoff"]
    rho_order = cfg.orders.get("rho_order", weight_cutoff)
    cutoff = cfg.orders.get("matrix_cutoff", 2 * rho_order)
    data = _schottky_data(cfg, rho_order, cutoff)
    ms = rho_series(genus_g_partition(data, weight_cutoff), data)
    return {"command": "schottky partition", "genus": data.genus,
            "coordinates": [str(w) for w in data.coordinates],
            "weight_cutoff": weight_cutoff, "rho_order": rho_order,
            "matrix_cutoff": cutoff,
            "series": _series_payload(ms, cfg.approx)}, 0


def _direction_args(cfg: RunConfig):
    directions = cfg.options.get("direction") or [_insertion("a@w")]
    family = directions[0] if len(directions) == 1 else tuple(directions)
    half = cfg.orders["window"]
    return family, directions, (-half, half)


def _run_cohomology_rank(cfg: RunConfig):
    family, directions, window = _direction_args(cfg)
    result = cohomology_rank(cfg.options["n"], cfg.options["m"],
                             cfg.options["genus"], family,
                             window=window, q_order=cfg.orders["qorder"],
                             boundary=cfg.options.get("boundary"),
                             combine=cfg.options["combine"])
    return {"command": "cohomology rank", "genus": cfg.options["genus"],
            "n": cfg.options["n"], "m": cfg.options["m"],
            "direction": [describe_direction(as_direction(d))
                          for d in directions],
            "combine": cfg.options["combine"],
            "window": list(window), "qorder": cfg.orders["qorder"],
            "q": result.q, "p": result.p,
            "kernel_rank": result.kernel_rank,
            "image_rank": result.image_rank,
            "certified": "within window"}, 0


def _run_cohomology_euler(cfg: RunConfig):
    family, directions, window = _direction_args(cfg)
    result = euler_poincare(cfg.options["m"], cfg.options["levels"],
                            cfg.options["genus"], family,
                            window=window, q_order=cfg.orders["qorder"],
                            boundary=cfg.options.get("boundary"),
                            combine=cfg.options["combine"])
    return {"command": "cohomology euler", "genus": cfg.options["genus"],
            "m": cfg.options["m"], "N": cfg.options["levels"],
            "direction": [describe_direction(as_direction(d))
                          for d in directions],
            "combine": cfg.options["combine"],
            "window": list(window), "qorder": cfg.orders["qorder"],
            "total": result.total,
            "ledger": [dict(row) for row in result.ledger],
            "certified": "within window"}, 0


def _random_state(rng: random.Random) -> GradedVector:
    coeffs = (Fraction(1), Fraction(-1), Fraction(1, 2), Fraction(-2),
              Fraction(3, 7))
    v = GradedVector({})
    for _ in range(rng.randint(1, 2)):
        w = rng.randint(0, 3)
        part = rng.choice(basis(w))
        v = v + GradedVector.basis_state(part) * rng.choice(coeffs)
    if v.is_zero():
        v = vacuum()
    return v


def _run_cluster_check(cfg: RunConfig):
    rng = random.Random(cfg.options["seed"])
    genera = (cfg.options["genus"],) if cfg.options.get("genus") is not None \
        else (0, 1)
    failures = 0
    sample = []
    # A small window keeps the batch quick; involutivity is coefficient
    # by coefficient, so any window that admits the seed exercises it.
    window, q_order = (-2, 2), 2
    for i in range(cfg.options["trials"]):
        genus = genera[i % len(genera)]
        n = rng.randint(1, 3)
        states = tuple(_random_state(rng) for _ in range(n))
        seed = make_seed(states, genus, window=window, q_order=q_order)
        slot = rng.randint(1, n)
        grade = rng.randint(0, 2)
        if rng.random() < 0.5:
            xi = None
        else:
            supports = sorted({tuple(sorted(v.t)) for v in states})
            xi = {s: rng.choice((1, -1)) for s in supports}
        ok = involution_check(ClusterSetting(seed, slot, grade, xi=xi))
        if not ok:
            failures += 1
        if len(sample) < 5 or not ok:
            sample.append({"genus": genus, "m": grade, "slot": slot,
                           "states": [render_state(v) for v in states],
                           "xi": "support signs" if xi else "trivial",
                           "ok": ok})
    payload = {"command": "cluster check", "trials": cfg.options["trials"],
               "seed": cfg.options["seed"], "failures": failures,
               "involutive": failures == 0, "sample": sample}
    return payload, 0 if failures == 0 else 1


# Every example command from the module documentation, frozen as a
# regression fixture.  Names ending in _csv are stored as .csv.
GOLDEN_CASES = (
    ("eisenstein_k2_order3",
     ("elliptic", "eisenstein", "--k", "2", "--order", "3")),
    ("eisenstein_k2_order3_csv",
     ("elliptic", "eisenstein", "--k", "2", "--order", "3",
      "--format", "csv")),
    ("eisenstein_k4_order10",
     ("elliptic", "eisenstein", "--k", "4", "--order", "10")),
    ("pm_m2_z6_q8",
     ("elliptic", "pm", "--m", "2", "--zorder", "6", "--qorder", "8")),
    ("npoint_g1_aa_q4",
     ("npoint", "--genus", "1", "--insertions", "a@z1,a@z2",
      "--qorder", "4")),
    ("npoint_g0_aa_oracle",
     ("npoint", "--genus", "0", "--insertions", "a@z1,a@z2", "--oracle")),
    ("npoint_g1_partition", ("npoint", "--genus", "1")),
    ("residual_a_at_z", ("residual", "--direction", "a@z")),
    ("genus2_partition_e4_q6_N8",
     ("genus2", "partition", "--eps-order", "4", "--q1-order", "6",
      "--q2-order", "6", "-N", "8")),
    ("genus2_pweier_p2_j1",
     ("genus2", "pweier", "--p", "2", "--j", "1", "--charts", "1", "1")),
    ("schottky_psi_p2_g2",
     ("schottky", "psi", "--p", "2", "--rho-order", "2", "-g", "2")),
    ("schottky_partition_g2_w3",
     ("schottky", "partition", "-g", "2", "--weight-cutoff", "3")),
    ("cohomology_rank_g1_n1_m2",
     ("cohomology", "rank", "--genus", "1", "-n", "1", "-m", "2",
      "--direction", "a@z")),
    ("cohomology_euler_m2_N3", ("cohomology", "euler", "-m", "2", "-N", "3")),
    ("cluster_check", ("cluster", "check")),
)


def golden_name(name: str) -> str:
    return name + (".csv" if name.endswith("_csv") else ".json")


def capture_output(argv) -> str:
    """Run one command and return its stdout text; the command must
    succeed."""
    buffer = io.StringIO()
    stdout, sys.stdout = sys.stdout, buffer
    try:
        code = parse_and_dispatch(list(argv))
    finally:
        sys.stdout = stdout
    if code != 0:
        raise ValueError(f"golden command {argv!r} exited {code}")
    return buffer.getvalue()


def _run_golden(cfg: RunConfig):
    directory = cfg.options["dir"]
    checking = cfg.options["check"]
    drifted, files = [], []
    for name, argv in GOLDEN_CASES:
        text = capture_output(argv)
        path = os.path.join(directory, golden_name(name))
        files.append(golden_name(name))
        if checking:
            with open(path) as fh:
                if fh.read() != text:
                    drifted.append(golden_name(name))
        else:
            os.makedirs(directory, exist_ok=True)
            with open(path, "w") as fh:
                fh.write(text)
    payload = {"command": "golden",
               "mode": "check" if checking else "write",
               "directory": directory, "files": files,
               "drifted": drifted}
    return payload, 0 if not drifted else 1


_HANDLERS: Mapping[str, Callable] = {
    "elliptic eisenstein": _run_eisenstein,
    "elliptic pm": _run_pm,
    "npoint": _run_npoint,
    "residual": _run_residual,
    "genus2 partition": _run_g2_partition,
    "genus2 pweier": _run_g2_pweier,
    "schottky psi": _run_schottky_psi,
    "schottky partition": _run_schottky_partition,
    "cohomology rank": _run_cohomology_rank,
    "cohomology euler": _run_cohomology_euler,
    "cluster check": _run_cluster_check,
    "golden": _run_golden,
}


def parse_and_dispatch(argv: Sequence[str]) -> int:
    """Run one subcommand.  Returns 0 on success, 1 on a domain error
    or failed batch check, 2 on flag grammar errors."""
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        ns = parser.parse_args(list(argv))
    except SystemExit as exc:
        return 0 if not exc.code else 2
    try:
        cfg = _config_from(ns)
        payload, code = _HANDLERS[cfg.command](cfg)
        _emit(payload, cfg)
        return code
    except (ValueError, AssertionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
