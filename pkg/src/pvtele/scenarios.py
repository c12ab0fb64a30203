"""Scenario definitions for the command line: schemas, defaults, figure presets, runners.

A scenario is a JSON document; defaults fill in whatever the document leaves
out and every filled-in leaf is recorded so the sidecar can say which values
came from the source figure and which are artifact choices.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .fock_oracle import oracle_apply, oracle_cf, oracle_loss, oracle_state
from .gaussian_states import ChannelParams, SqueezingParam, state_from_dict
from .hermite import PrecisionPolicy
from .optimize import (
    ObjectiveConfig,
    PSOConfig,
    build_objective,
    optimize_e,
    optimize_g,
    response_curve,
)
from .pv_ops import _real, operation_from_dict, photon_varied, response_ratio
from .teleport import InputState, QuadratureGrid, ResourceCF, fidelity, h_max, map_points


class ScenarioError(ValueError):
    """A well-formed scenario that the engine cannot run as stated."""


# -- schemas ----------------------------------------------------------------

_NUM = {"type": "number"}
_COMPLEX = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}
_TRANS = {"type": "number", "exclusiveMinimum": 0, "maximum": 1}

RESOURCE = {
    "type": "object",
    "properties": {
        "family": {"enum": ["tmsv", "tmsc", "tmst"]},
        "r_dB": {"type": "number", "minimum": 0},
        "z1": _COMPLEX,
        "z2": _COMPLEX,
        "nbar": {"type": "number", "minimum": 0},
        "loss": {
            "type": "object",
            "properties": {"T1": _TRANS, "T2": _TRANS},
            "required": ["T1", "T2"],
            "additionalProperties": False,
        },
        "label": {"type": "string"},
    },
    "required": ["r_dB"],
    "additionalProperties": False,
}

_PV = {
    "type": "object",
    "properties": {
        "pv": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {"t": {"enum": [-1, 1]}, "n": {"type": "integer", "minimum": 0}},
                "required": ["t", "n"],
                "additionalProperties": False,
            },
        },
        "label": {"type": "string"},
    },
    "required": ["pv"],
    "additionalProperties": False,
}

_GEN = {
    "type": "object",
    "properties": {
        "generalized": {
            "type": "object",
            "properties": {
                "N": {"type": "integer", "minimum": 0, "maximum": 20},
                "e": {"type": "array", "items": _NUM},
                "dagger": {"type": "boolean"},
            },
            "required": ["N"],
            "additionalProperties": False,
        },
        "label": {"type": "string"},
    },
    "required": ["generalized"],
    "additionalProperties": False,
}

OPERATION = {"oneOf": [_PV, _GEN]}

GRID = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["radial", "plane"]},
        "max": {"type": "number", "exclusiveMinimum": 0},
        "points": {"type": "integer", "minimum": 1, "maximum": 4001},
    },
    "additionalProperties": False,
}

_PRECISION = {"type": "string", "pattern": "^(machine|extended(:[0-9]+)?)$"}
_SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}


def _top(props, required=()):
    props = dict(props, precision=_PRECISION, seed=_SEED)
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMAS = {
    "response-ratio": _top({
        "resource": RESOURCE,
        "operations": {"type": "array", "items": OPERATION, "minItems": 1},
        "grid": GRID,
    }),
    "h-prime": _top({
        "resource": RESOURCE,
        "operation": OPERATION,
        "channels": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {"T1": _TRANS, "T2": _TRANS, "label": {"type": "string"}},
                "required": ["T1", "T2"],
                "additionalProperties": False,
            },
        },
        "grid": GRID,
    }),
    "fidelity": _top({
        "resource": RESOURCE,
        "operation": {"oneOf": [OPERATION, {"type": "null"}]},
        "input": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["coherent", "squeezed_vacuum", "fock"]},
                "alpha": _COMPLEX,
                "s": _NUM,
                "n": {"type": "integer", "minimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "quadrature": {
            "type": "object",
            "properties": {
                "radial_cutoff": {"type": "number", "exclusiveMinimum": 0},
                "nodes": {"type": "integer", "minimum": 16},
                "angular_nodes": {"type": "integer", "minimum": 4},
            },
            "additionalProperties": False,
        },
    }),
    "optimize": _top({
        "resources": {"type": "array", "items": RESOURCE, "minItems": 1},
        "schemes": {"type": "array", "items": {"enum": ["e", "g"]}, "minItems": 1},
        "N": {"type": "array", "items": {"type": "integer", "minimum": 0, "maximum": 20}, "minItems": 1},
        "dagger": {"type": "boolean"},
        "objective": {
            "type": "object",
            "properties": {
                "xi_lim": {"type": "number", "exclusiveMinimum": 0},
                "radial_nodes": {"type": "integer", "minimum": 1},
                "angular_nodes": {"type": "integer", "minimum": 2},
                "domain": {"enum": ["radial_line", "disk"]},
            },
            "additionalProperties": False,
        },
        "pso": {
            "type": "object",
            "properties": {
                "swarm": {"type": "integer", "minimum": 2},
                "iters": {"type": "integer", "minimum": 1},
                "inertia": _NUM,
                "cognitive": _NUM,
                "social": _NUM,
                "seed": _SEED,
                "restarts": {"type": "integer", "minimum": 1},
                "warm_start": {"type": "boolean"},
                "bounds": {"type": ["array", "null"], "items": _NUM, "minItems": 2, "maxItems": 2},
            },
            "additionalProperties": False,
        },
        "grid": {"oneOf": [GRID, {"type": "null"}]},
        "include_h_max": {"type": "boolean"},
    }),
    "oracle-validate": _top({
        "resource": RESOURCE,
        "operations": {"type": "array", "items": OPERATION, "minItems": 1},
        "dim": {"type": "integer", "minimum": 8, "maximum": 400},
        "grid": GRID,
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
    }),
}


# -- defaults ---------------------------------------------------------------

_TMSV8 = {"family": "tmsv", "r_dB": 8.0}
_RADIAL = {"kind": "radial", "max": 3.0, "points": 301}
_PLANE = {"kind": "plane", "max": 3.0, "points": 61}
_OBJECTIVE = {"xi_lim": 2.0, "radial_nodes": 64, "angular_nodes": 32, "domain": "radial_line"}
_PSO = {
    "swarm": 50, "iters": 500, "inertia": 0.7, "cognitive": 1.5, "social": 1.5,
    "seed": 0, "restarts": 4, "warm_start": True, "bounds": None,
}


def _sym(t, n):
    return {"pv": [{"t": t, "n": n}, {"t": t, "n": n}], "label": f"{'pa' if t == 1 else 'ps'}{n}"}


DEFAULTS = {
    "response-ratio": {
        "resource": _TMSV8, "operations": [_sym(-1, 1)], "grid": _RADIAL, "precision": "machine",
    },
    "h-prime": {
        "resource": _TMSV8,
        "operation": _sym(-1, 1),
        "channels": [{"T1": 0.8, "T2": 0.8}, {"T1": 0.9, "T2": 0.5}],
        "grid": {"kind": "plane", "max": 3.0, "points": 50},
        "precision": "machine",
    },
    "fidelity": {
        "resource": _TMSV8,
        "operation": None,
        "input": {"kind": "coherent", "alpha": [0.0, 0.0]},
        "quadrature": {"radial_cutoff": 6.0, "nodes": 400, "angular_nodes": 64},
        "precision": "machine",
    },
    "optimize": {
        "resources": [_TMSV8],
        "schemes": ["e"],
        "N": [4],
        "dagger": True,
        "objective": _OBJECTIVE,
        "pso": _PSO,
        "grid": None,
        "include_h_max": True,
        "precision": "machine",
    },
    "oracle-validate": {
        "resource": {"family": "tmsv", "r_dB": 6.0},
        "operations": [_sym(-1, 1), _sym(1, 1), {"pv": [{"t": -1, "n": 1}, {"t": 1, "n": 2}], "label": "ps1_pa2"}],
        "dim": 60,
        "grid": {"kind": "radial", "max": 3.0, "points": 20},
        "tolerance": 1e-8,
        "precision": "machine",
    },
}


@dataclass(frozen=True)
class Figure:
    command: str
    config: dict
    source_keys: frozenset = field(default_factory=frozenset)
    note: str = ""


def _figures():
    fig3_grid = _RADIAL
    figs = {
        "fig2a": Figure("response-ratio", {
            "resource": _TMSV8, "operations": [_sym(-1, n) for n in (1, 2, 3)], "grid": _RADIAL,
        }, frozenset({"resource.family", "resource.r_dB"}), "symmetric photon subtraction on TMSV"),
        "fig2b": Figure("response-ratio", {
            "resource": _TMSV8, "operations": [_sym(1, n) for n in (1, 2, 3)], "grid": _RADIAL,
        }, frozenset({"resource.family", "resource.r_dB"}), "symmetric photon addition on TMSV"),
        "fig2c": Figure("response-ratio", {
            "resource": _TMSV8,
            "operations": [
                {"pv": [{"t": -1, "n": 1}, {"t": 1, "n": 1}], "label": "ps1_pa1"},
                {"pv": [{"t": 1, "n": 1}, {"t": -1, "n": 1}], "label": "pa1_ps1"},
                _sym(-1, 1),
                _sym(1, 1),
            ],
            "grid": _RADIAL,
        }, frozenset({"resource.family"}), "different operations on the two modes"),
        "fig3a": Figure("optimize", {
            "resources": [_TMSV8], "schemes": ["e"], "N": list(range(1, 9)), "dagger": True,
            "objective": _OBJECTIVE, "pso": _PSO, "grid": fig3_grid, "include_h_max": True,
        }, frozenset({"objective.xi_lim", "dagger", "schemes"}), "scheme 1, increasing N"),
        "fig3b": Figure("optimize", {
            "resources": [_TMSV8], "schemes": ["e", "g"], "N": [2, 4, 6], "dagger": True,
            "objective": _OBJECTIVE, "pso": _PSO, "grid": fig3_grid, "include_h_max": True,
        }, frozenset({"objective.xi_lim", "dagger", "schemes"}), "scheme 1 against scheme 2"),
        "fig3c": Figure("optimize", {
            "resources": [{"family": "tmsv", "r_dB": 10.0}], "schemes": ["e", "g"], "N": [2, 4, 6],
            "dagger": True, "objective": _OBJECTIVE, "pso": _PSO, "grid": fig3_grid, "include_h_max": True,
        }, frozenset({"objective.xi_lim", "dagger", "schemes"}), "scheme comparison at higher squeezing"),
        "fig4a": Figure("response-ratio", {
            "resource": {"family": "tmsc", "r_dB": 8.0, "z1": 0.5, "z2": 0.5},
            "operations": [_sym(-1, 1)], "grid": _PLANE,
        }, frozenset({"resource.family"}), "TMSC with photon subtraction, z = 0.5"),
        "fig4b": Figure("response-ratio", {
            "resource": {"family": "tmsc", "r_dB": 8.0, "z1": 1.0, "z2": 1.0},
            "operations": [_sym(-1, 1)], "grid": _PLANE,
        }, frozenset({"resource.family"}), "TMSC with photon subtraction, z = 1.0"),
        "fig5a": Figure("optimize", {
            "resources": [
                {"family": "tmsc", "r_dB": 8.0, "z1": z, "z2": z, "label": f"z{z:g}"} for z in (0.0, 0.5, 1.0)
            ],
            "schemes": ["e"], "N": [4], "dagger": False,
            "objective": dict(_OBJECTIVE, domain="disk"), "pso": _PSO, "grid": _PLANE,
            "include_h_max": True,
        }, frozenset({"dagger", "schemes"}), "A_N with optimized e on TMSC"),
        "fig5b": Figure("optimize", {
            "resources": [
                {"family": "tmst", "r_dB": 8.0, "nbar": nb, "label": f"nbar{nb:g}"} for nb in (0.1, 0.5)
            ],
            "schemes": ["e"], "N": list(range(1, 7)), "dagger": False,
            "objective": _OBJECTIVE, "pso": _PSO, "grid": _RADIAL, "include_h_max": True,
        }, frozenset({"dagger", "schemes"}), "A_N with optimized e on TMST"),
    }
    for fig in figs.values():
        fig.config.setdefault("precision", "machine")
    return figs


FIGURES = _figures()


def merge_defaults(defaults, doc, prefix=""):
    """Deep-merge ``doc`` over ``defaults``; lists and scalars are leaves.

    Returns the merged document and the dotted paths that came from the defaults.
    """
    if not isinstance(defaults, dict) or not isinstance(doc, dict):
        return copy.deepcopy(doc), []
    out, filled = {}, []
    for key in defaults:
        path = f"{prefix}{key}"
        if key in doc:
            out[key], sub = merge_defaults(defaults[key], doc[key], path + ".")
            filled.extend(sub)
        elif isinstance(defaults[key], dict) and defaults[key]:
            out[key], sub = merge_defaults(defaults[key], {}, path + ".")
            filled.extend(sub)
        else:
            out[key] = copy.deepcopy(defaults[key])
            filled.append(path)
    for key in doc:
        if key not in defaults:
            out[key] = copy.deepcopy(doc[key])
    return out, filled


# -- runners ----------------------------------------------------------------


@dataclass
class Table:
    columns: list
    data: np.ndarray


@dataclass
class Outcome:
    tables: dict = field(default_factory=dict)
    documents: dict = field(default_factory=dict)
    stdout: str | None = None


def grid_points(grid):
    kind, top, n = grid.get("kind", "radial"), float(grid.get("max", 3.0)), int(grid.get("points", 301))
    if kind == "radial":
        xs = top * np.arange(1, n + 1) / n
        return xs.astype(np.complex128), ["abs_xi"], xs[:, None]
    axis = np.linspace(-top, top, n)
    re, im = np.meshgrid(axis, axis, indexing="ij")
    pts = (re + 1j * im).ravel()
    return pts, ["re_xi", "im_xi"], np.stack([re.ravel(), im.ravel()], axis=1)


def _label(op, k):
    return op.get("label") or f"op{k}"


def _resource_label(doc):
    if "label" in doc:
        return doc["label"]
    fam = doc.get("family", "tmsv")
    if fam == "tmsc":
        return f"z{doc.get('z1', 0)}_{doc.get('z2', 0)}".replace(" ", "")
    if fam == "tmst":
        return f"nbar{doc.get('nbar', 0):g}"
    return f"r{doc['r_dB']:g}dB"


def _real_values(func, pts, threads):
    return np.asarray(map_points(func, pts, threads), dtype=np.float64)


def run_response_ratio(cfg, policy, threads):
    base, ch = state_from_dict(cfg["resource"])
    pts, cols, coords = grid_points(cfg["grid"])
    columns, blocks = list(cols), [coords]
    for k, doc in enumerate(cfg["operations"]):
        op = operation_from_dict(doc)
        if ch is None:
            state = photon_varied(base, op, policy)
            vals = _real_values(lambda x, s=state: response_ratio(s, x), pts, threads)
        else:
            res = ResourceCF(base, op, ch, policy)
            vals = _real_values(lambda x, r=res: _checked_ratio(r, x), pts, threads)
        columns.append(f"H_{_label(doc, k)}" if len(cfg["operations"]) > 1 else "H")
        blocks.append(vals[:, None])
    return Outcome({"": Table(columns, np.hstack(blocks))})


def _checked_ratio(res, x):
    vals = np.where(x == 0, 1.0, res.ratio(x))
    return _real(vals, "lossy response ratio")


def run_h_prime(cfg, policy, threads):
    doc = dict(cfg["resource"])
    if doc.get("family", "tmsv") != "tmsv":
        raise ScenarioError("h-prime is defined for TMSV resources")
    if "loss" in doc:
        raise ScenarioError("h-prime takes its channels from 'channels', not resource.loss")
    base, _ = state_from_dict(doc)
    op = operation_from_dict(cfg["operation"])
    pts, cols, coords = grid_points(cfg["grid"])
    columns, blocks = list(cols), [coords]
    for chd in cfg["channels"]:
        ch = ChannelParams(float(chd["T1"]), float(chd["T2"]))
        res = ResourceCF(base, op, ch, policy)
        vals = _real_values(lambda x, r=res: _checked_ratio(r, x), pts, threads)
        columns.append(f"H_{chd.get('label') or f'T{ch.T1:g}_{ch.T2:g}'}")
        blocks.append(vals[:, None])
    return Outcome({"": Table(columns, np.hstack(blocks))})


def run_fidelity(cfg, policy, threads):
    base, ch = state_from_dict(cfg["resource"])
    op = None if cfg.get("operation") is None else operation_from_dict(cfg["operation"])
    inp = InputState.from_dict(cfg["input"])
    q = cfg["quadrature"]
    grid = QuadratureGrid(float(q["radial_cutoff"]), int(q["nodes"]), int(q["angular_nodes"]))
    F = fidelity(ResourceCF(base, op, ch, policy), inp, grid, threads)
    return Outcome(documents={"": {"fidelity": F}}, stdout=repr(F))


def run_optimize(cfg, policy, threads):
    ocfg = ObjectiveConfig(**cfg["objective"])
    p = dict(cfg["pso"])
    if p.get("bounds") is not None:
        p["bounds"] = tuple(p["bounds"])
    pcfg = PSOConfig(threads=threads, **p)
    grid = cfg.get("grid")
    if grid is not None:
        pts, cols, coords = grid_points(grid)
        columns, blocks = list(cols), [coords]
    runs = []
    multi_res = len(cfg["resources"]) > 1
    multi_scheme = len(cfg["schemes"]) > 1
    for rdoc in cfg["resources"]:
        base, ch = state_from_dict(rdoc)
        if ch is not None:
            raise ScenarioError("optimization runs on lossless resources")
        label = _resource_label(rdoc)
        sq = SqueezingParam.from_db(rdoc["r_dB"])
        for N in cfg["N"]:
            obj = build_objective(base, N, ocfg, cfg["dagger"], policy)
            for scheme in cfg["schemes"]:
                if scheme == "g":
                    if rdoc.get("family", "tmsv") != "tmsv" or not cfg["dagger"]:
                        raise ScenarioError("scheme 'g' (NLA gain) needs a TMSV resource and dagger=true")
                    res = optimize_g(N, sq, ocfg, pcfg, policy, obj=obj)
                else:
                    res = optimize_e(N, base, ocfg, pcfg, cfg["dagger"], policy, obj=obj)
                run = res.to_dict()
                run["resource"] = label
                runs.append(run)
                if grid is not None:
                    vals = _real_values(
                        lambda x, e=res.e: response_curve(base, e, x, cfg["dagger"], policy), pts, threads
                    )
                    name = ["H"] + ([label] if multi_res else []) + ([scheme] if multi_scheme else []) + [f"N{N}"]
                    columns.append("_".join(name))
                    blocks.append(vals[:, None])
        if grid is not None and cfg.get("include_h_max", True):
            nbar = float(rdoc.get("nbar", 0.0)) if rdoc.get("family") == "tmst" else 0.0
            columns.append("H_max" + (f"_{label}" if multi_res else ""))
            blocks.append(np.asarray(h_max(sq, pts, nbar))[:, None])
    out = Outcome(documents={"runs": {"runs": runs}})
    if grid is not None:
        out.tables[""] = Table(columns, np.hstack(blocks))
    return out


def run_oracle_validate(cfg, policy, threads):
    base, ch = state_from_dict(cfg["resource"])
    rdoc = cfg["resource"]
    fam = rdoc.get("family", "tmsv")
    z1 = _cplx(rdoc.get("z1", 0.0))
    z2 = _cplx(rdoc.get("z2", 0.0))
    sq = SqueezingParam.from_db(rdoc["r_dB"])
    dim = int(cfg["dim"])
    ref = oracle_state(fam, sq, dim, z1=z1, z2=z2, nbar=float(rdoc.get("nbar", 0.0)))
    ref_base = ref if ch is None else oracle_loss(ref, ch)
    pts, cols, coords = grid_points(cfg["grid"])
    diag = np.stack([pts, np.conj(pts)], axis=-1)
    chi_ref = oracle_cf(ref_base, diag)
    rows = []
    worst = 0.0
    for k, doc in enumerate(cfg["operations"]):
        op = operation_from_dict(doc)
        o = oracle_apply(ref, op)
        if ch is not None:
            o = oracle_loss(o, ch)
        chi_pv = oracle_cf(o, diag)
        res = ResourceCF(base, op, ch, policy)
        H = np.asarray(map_points(lambda x, r=res: _checked_ratio(r, x), pts, threads), dtype=np.float64)
        cf = H * res.gaussian_response(pts).real
        H_ref = (chi_pv / chi_ref).real
        err_cf = np.abs(cf - chi_pv)
        err_H = np.abs(H - H_ref)
        worst = max(worst, float(err_cf.max()), float(err_H.max()))
        rows.append(np.hstack([np.full((pts.size, 1), k), coords, cf[:, None], chi_pv.real[:, None],
                               err_cf[:, None], H[:, None], H_ref[:, None], err_H[:, None]]))
    columns = ["op"] + cols + ["cf", "cf_oracle", "cf_abs_err", "H", "H_oracle", "H_abs_err"]
    passed = worst <= float(cfg["tolerance"])
    doc = {"max_abs_err": worst, "tolerance": float(cfg["tolerance"]), "passed": passed}
    return Outcome({"": Table(columns, np.vstack(rows))}, {"summary": doc},
                   stdout=f"max abs error {worst:.3e} ({'pass' if passed else 'FAIL'})")


def _cplx(v):
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


RUNNERS = {
    "response-ratio": run_response_ratio,
    "h-prime": run_h_prime,
    "fidelity": run_fidelity,
    "optimize": run_optimize,
    "oracle-validate": run_oracle_validate,
}


def resolve_policy(text):
    return PrecisionPolicy.parse(text)


def check_finite(table):
    if not np.all(np.isfinite(table.data)):
        raise ArithmeticError("non-finite values in output table")
    return table

