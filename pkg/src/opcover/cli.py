"""Reproducible experiment harness over the library entry points.

Every run is described by a JSON config (command, params, seed) that is
schema-validated, canonically hashed, and dispatched to one command
handler.  Handlers return a JSON-safe results payload plus flat CSV
rows with a fixed per-command column set, so outputs can be diffed
byte-for-byte: identical (config, seed, version) always reproduce the
identical results payload.  Wall-clock time lives outside the payload.

Exit codes: 0 success, 2 config rejected by the schema (a machine
readable error with the offending field path goes to stderr), 3 the
computation itself failed (bound violation, domain error, ...).
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import jsonschema
import numpy as np

from . import channels, concentration, covering, identification, linalg
from .linalg import BoundViolation
from .rng import make_rng, random_density, random_distribution, random_effect, spawn_seeds

COMMANDS = (
    "tail-mc",
    "cover-sample",
    "cover-capacity",
    "product-cover",
    "typicality",
    "capacity",
    "resolvability",
    "conjecture-probe",
    "qid-eval",
)

# Fixed CSV column order per command.  Golden-file tests pin these; any
# change is a format break and must bump the minor version.
CSV_COLUMNS = {
    "tail-mc": ("method", "n", "trials", "probability", "stderr", "bound"),
    "cover-sample": (
        "kind", "num_draws", "certified", "beyond_bound", "attempts",
        "excluded_mass", "l1_distance",
    ),
    # "lp_value" not "value": sweep rows prefix an axis-value column and
    # the two must not collide.
    "cover-capacity": ("bits", "lp_value", "iterations"),
    "product-cover": ("n", "c_n", "c_tilde_n", "pow2_Cn"),
    "typicality": ("kind", "n", "alpha", "dim", "rank", "trace_mass", "mass_bound"),
    "capacity": ("bits", "gap", "iterations"),
    "resolvability": ("lambda", "K", "L", "support", "measured_distance", "certified"),
    "conjecture-probe": ("which", "dim", "instances", "min_slack", "violations"),
    "qid-eval": ("i", "j", "acceptance"),
}

SWEEP_PREFIX = ("run_index", "axis", "value", "seed", "status", "error")


class ConfigError(ValueError):
    """Config rejected before dispatch: bad file, flag, or field path."""

    def __init__(self, message: str, path: tuple = ()):
        super().__init__(message)
        self.path = list(path)


# ---------------------------------------------------------------------------
# canonical serialization


def json_safe(obj):
    """Recursively convert to types json.dumps handles deterministically.

    Non-finite floats become the strings "inf" / "-inf" / "nan" since
    bare JSON has no encoding for them; Fractions stringify exactly;
    numpy scalars and arrays collapse to Python numbers and lists.
    """
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Sorted keys, no whitespace, shortest round-trip floats."""
    return json.dumps(json_safe(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    """SHA-256 over the canonical (command, params, seed) triple.

    output_path and format are excluded: they say where the record
    goes, not what was computed.
    """
    core = {
        "command": config["command"],
        "params": config["params"],
        "seed": config["seed"],
    }
    return hashlib.sha256(canonical_json(core).encode()).hexdigest()


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (int, str)):
        return str(v)
    return canonical_json(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# config schema

_MATRIX = {
    "type": "object",
    "required": ["dim", "re"],
    "additionalProperties": False,
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "re": {"type": "array"},
        "im": {"type": "array"},
    },
}

_CHANNEL = {
    "oneOf": [
        {
            "type": "object",
            "required": ["kind", "p"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "bsc"},
                "p": {"type": "number", "minimum": 0, "maximum": 0.5},
            },
        },
        {
            "type": "object",
            "required": ["kind", "rows"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "classical"},
                "rows": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                },
            },
        },
        {
            "type": "object",
            "required": ["kind", "path"],
            "additionalProperties": False,
            "properties": {"kind": {"const": "classical-csv"}, "path": {"type": "string"}},
        },
        {
            "type": "object",
            "required": ["kind", "states"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "states"},
                "states": {"type": "array", "minItems": 1, "items": _MATRIX},
            },
        },
        {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {"kind": {"const": "zero-plus"}},
        },
        {
            "type": "object",
            "required": ["kind", "inputs", "dim"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "random"},
                "inputs": {"type": "integer", "minimum": 1},
                "dim": {"type": "integer", "minimum": 1},
            },
        },
    ]
}

_HYPERGRAPH = {
    "oneOf": [
        {
            "type": "object",
            "required": ["dim", "edges", "eta"],
            "additionalProperties": False,
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "eta": {"type": "number", "exclusiveMinimum": 0},
                "edges": {"type": "array", "minItems": 1, "items": _MATRIX},
            },
        },
        {
            "type": "object",
            "required": ["kind", "dim", "num_edges"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "random"},
                "dim": {"type": "integer", "minimum": 1},
                "num_edges": {"type": "integer", "minimum": 1},
                "eta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {"kind": {"const": "orthogonal-pair"}},
        },
    ]
}

_DISTRIBUTION = {
    "oneOf": [
        {
            "type": "object",
            "required": ["kind", "n"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "uniform"},
                "n": {"type": "integer", "minimum": 1},
            },
        },
        {
            "type": "object",
            "required": ["kind", "n", "support"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "random"},
                "n": {"type": "integer", "minimum": 1},
                "support": {"type": "integer", "minimum": 1},
            },
        },
        {
            "type": "object",
            "required": ["kind", "atoms"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "explicit"},
                "atoms": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "minItems": 2, "maxItems": 2},
                },
            },
        },
    ]
}

_RV = {
    "oneOf": [
        {
            "type": "object",
            "required": ["kind", "probs", "values"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "scalar"},
                "probs": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                "values": {"type": "array", "minItems": 1, "items": {"type": "number"}},
            },
        },
        {
            "type": "object",
            "required": ["kind", "probs", "values"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "matrices"},
                "probs": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                "values": {"type": "array", "minItems": 1, "items": _MATRIX},
            },
        },
        {
            "type": "object",
            "required": ["kind", "dim", "atoms"],
            "additionalProperties": False,
            "properties": {
                "kind": {"const": "random"},
                "dim": {"type": "integer", "minimum": 1},
                "atoms": {"type": "integer", "minimum": 2},
            },
        },
    ]
}

PARAMS_SCHEMAS = {
    "tail-mc": {
        "type": "object",
        "required": ["rv", "method"],
        "additionalProperties": False,
        "properties": {
            "rv": _RV,
            "method": {
                "enum": [
                    "markov", "chebyshev", "weak-law",
                    "chernoff-upper", "chernoff-lower", "two-sided",
                ]
            },
            "n": {"type": "integer", "minimum": 1},
            "trials": {"type": "integer", "minimum": 0},
            "a": {"type": "number"},
            "m": {"type": "number"},
            "eps": {"type": "number", "exclusiveMinimum": 0},
            "delta": {"type": "number", "exclusiveMinimum": 0},
        },
        "allOf": [
            {"if": {"properties": {"method": {"const": "markov"}}}, "then": {"required": ["a"]}},
            {"if": {"properties": {"method": {"const": "chebyshev"}}}, "then": {"required": ["delta"]}},
            {"if": {"properties": {"method": {"const": "weak-law"}}}, "then": {"required": ["n", "delta"]}},
            {
                "if": {"properties": {"method": {"enum": ["chernoff-upper", "chernoff-lower"]}}},
                "then": {"required": ["n", "a", "m"]},
            },
            {"if": {"properties": {"method": {"const": "two-sided"}}}, "then": {"required": ["n", "eps"]}},
        ],
    },
    "cover-sample": {
        "type": "object",
        "required": ["hypergraph", "eps", "tau"],
        "additionalProperties": False,
        "properties": {
            "hypergraph": _HYPERGRAPH,
            "eps": {"type": "number", "exclusiveMinimum": 0},
            "tau": {"type": "number", "exclusiveMinimum": 0},
            "p": {"type": "array", "minItems": 1, "items": {"type": "number"}},
            "draws": {"type": "integer", "minimum": 1},
        },
    },
    "cover-capacity": {
        "type": "object",
        "required": ["hypergraph"],
        "additionalProperties": False,
        "properties": {
            "hypergraph": _HYPERGRAPH,
            "tol": {"type": "number", "exclusiveMinimum": 0},
        },
    },
    "product-cover": {
        "type": "object",
        "required": ["hypergraph", "n_values"],
        "additionalProperties": False,
        "properties": {
            "hypergraph": _HYPERGRAPH,
            "n_values": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "tol": {"type": "number", "exclusiveMinimum": 0},
        },
    },
    "typicality": {
        "type": "object",
        "required": ["mode", "alpha"],
        "additionalProperties": False,
        "properties": {
            "mode": {"enum": ["state", "conditional"]},
            "alpha": {"type": "number", "exclusiveMinimum": 0},
            "state": {
                "oneOf": [
                    _MATRIX,
                    {
                        "type": "object",
                        "required": ["kind", "dim"],
                        "additionalProperties": False,
                        "properties": {
                            "kind": {"const": "random"},
                            "dim": {"type": "integer", "minimum": 1},
                        },
                    },
                ]
            },
            "n": {"type": "integer", "minimum": 1},
            "channel": _CHANNEL,
            "sequence": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "integer", "minimum": 0},
            },
        },
        "allOf": [
            {
                "if": {"properties": {"mode": {"const": "state"}}},
                "then": {"required": ["state", "n"]},
            },
            {
                "if": {"properties": {"mode": {"const": "conditional"}}},
                "then": {"required": ["channel", "sequence"]},
            },
        ],
    },
    "capacity": {
        "type": "object",
        "required": ["channel"],
        "additionalProperties": False,
        "properties": {
            "channel": _CHANNEL,
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "max_iter": {"type": "integer", "minimum": 1},
        },
    },
    "resolvability": {
        "type": "object",
        "required": ["channel", "P", "lambda"],
        "additionalProperties": False,
        "properties": {
            "channel": _CHANNEL,
            "P": _DISTRIBUTION,
            "lambda": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "alpha": {"type": "number", "exclusiveMinimum": 0},
            "eps": {"type": "number", "exclusiveMinimum": 0},
            "tau": {"type": "number", "exclusiveMinimum": 0},
            "draws": {"type": "integer", "minimum": 1},
        },
    },
    "conjecture-probe": {
        "type": "object",
        "required": ["which", "dim", "count"],
        "additionalProperties": False,
        "properties": {
            "which": {"enum": [1, 2, 3]},
            "dim": {"type": "integer", "minimum": 2, "maximum": 16},
            "count": {"type": "integer", "minimum": 1, "maximum": 100000},
        },
    },
    "qid-eval": {
        "type": "object",
        "required": ["channel", "code"],
        "additionalProperties": False,
        "properties": {
            "channel": _CHANNEL,
            "code": {
                "oneOf": [
                    {
                        "type": "object",
                        "required": ["kind", "n", "messages", "support"],
                        "additionalProperties": False,
                        "properties": {
                            "kind": {"const": "random"},
                            "n": {"type": "integer", "minimum": 1},
                            "messages": {"type": "integer", "minimum": 1},
                            "support": {"type": "integer", "minimum": 1},
                        },
                    },
                    {
                        "type": "object",
                        "required": ["n", "entries"],
                        "additionalProperties": False,
                        "properties": {
                            "n": {"type": "integer", "minimum": 1},
                            "entries": {"type": "array", "minItems": 1},
                        },
                    },
                ]
            },
        },
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["command", "params", "seed"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "params": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_path": {"type": "string"},
        "format": {"enum": ["json", "csv"]},
    },
}

SWEEP_SCHEMA = {
    "type": "object",
    "required": ["template", "axis", "values"],
    "additionalProperties": False,
    "properties": {
        "template": {"type": "object"},
        "axis": {"type": "string", "minLength": 1},
        "values": {"type": "array"},
        "output_path": {"type": "string"},
        "format": {"enum": ["json", "csv"]},
    },
}


def validate_config(config: dict) -> None:
    """Raise ConfigError carrying the offending field path."""
    try:
        jsonschema.validate(instance=config, schema=CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message, tuple(exc.absolute_path)) from exc
    try:
        jsonschema.validate(instance=config["params"], schema=PARAMS_SCHEMAS[config["command"]])
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message, ("params", *exc.absolute_path)) from exc


# ---------------------------------------------------------------------------
# object loaders

_ZERO = np.array([[1.0, 0.0], [0.0, 0.0]])
_PLUS = np.array([[0.5, 0.5], [0.5, 0.5]])


def _load_channel(spec: dict, seed: int) -> channels.CQChannel:
    kind = spec["kind"] if "kind" in spec else "states"
    if kind == "bsc":
        p = float(spec["p"])
        return channels.embed_classical([[1.0 - p, p], [p, 1.0 - p]])
    if kind == "classical":
        return channels.embed_classical(spec["rows"])
    if kind == "classical-csv":
        rows = np.loadtxt(spec["path"], delimiter=",", ndmin=2)
        return channels.embed_classical(rows)
    if kind == "states":
        return channels.CQChannel([linalg.matrix_from_json(m) for m in spec["states"]])
    if kind == "zero-plus":
        return channels.CQChannel([_ZERO, _PLUS])
    if kind == "random":
        rng = make_rng(seed)
        return channels.CQChannel([random_density(rng, spec["dim"]) for _ in range(spec["inputs"])])
    raise ConfigError(f"unknown channel kind {kind!r}", ("params", "channel"))


def _load_hypergraph(spec: dict, seed: int) -> covering.QuantumHypergraph:
    if "kind" not in spec:
        return covering.QuantumHypergraph.from_json(spec)
    if spec["kind"] == "random":
        return covering.random_hypergraph(seed, spec["dim"], spec["num_edges"], spec.get("eta", 1.0))
    if spec["kind"] == "orthogonal-pair":
        return covering.QuantumHypergraph(2, [_ZERO, np.diag([0.0, 1.0])], eta=1.0)
    raise ConfigError(f"unknown hypergraph kind {spec['kind']!r}", ("params", "hypergraph"))


def _load_distribution(spec: dict, alphabet_size: int, seed: int) -> dict:
    if spec["kind"] == "uniform":
        return identification.uniform_distribution(alphabet_size, spec["n"])
    if spec["kind"] == "random":
        return identification.random_sparse_distribution(seed, alphabet_size, spec["n"], spec["support"])
    entries = {tuple(int(s) for s in xn): w for xn, w in spec["atoms"]}
    return identification.check_sequence_distribution(entries, alphabet_size=alphabet_size)


def _load_rv(spec: dict, seed: int) -> concentration.OperatorRV:
    if spec["kind"] == "scalar":
        return concentration.OperatorRV.scalar(spec["probs"], spec["values"])
    if spec["kind"] == "matrices":
        return concentration.OperatorRV(spec["probs"], [linalg.matrix_from_json(m) for m in spec["values"]])
    rng = make_rng(seed)
    values = [random_effect(rng, spec["dim"]) for _ in range(spec["atoms"])]
    return concentration.OperatorRV(random_distribution(rng, spec["atoms"]), values)


def _load_code(spec: dict, channel: channels.CQChannel, seed: int) -> identification.QIDCode:
    if spec.get("kind") != "random":
        return identification.QIDCode.from_json(spec)
    n, m, support = spec["n"], spec["messages"], spec["support"]
    seeds = spawn_seeds(seed, 2 * m)
    entries = []
    for i in range(m):
        dist = identification.random_sparse_distribution(
            seeds[2 * i], channel.alphabet_size, n, support
        )
        effect = random_effect(make_rng(seeds[2 * i + 1]), channel.dim**n)
        entries.append((dist, effect))
    return identification.QIDCode(n, entries)


# ---------------------------------------------------------------------------
# command handlers: params, seed -> (results payload, CSV rows)


def _run_tail_mc(params: dict, seed: int):
    # seeds[0] builds a random RV when asked for one, seeds[1] drives
    # the Monte Carlo trials; explicit RVs simply ignore the first.
    seeds = spawn_seeds(seed, 2)
    rv = _load_rv(params["rv"], seeds[0])
    method = params["method"]
    trials = int(params.get("trials", 0))
    if method == "markov":
        report = concentration.markov_tail(rv, params["a"])
    elif method == "chebyshev":
        report = concentration.chebyshev_tail(rv, params["delta"])
    elif method == "weak-law":
        report = concentration.weak_law_tail(rv, params["n"], params["delta"], trials, seeds[1])
    elif method in ("chernoff-upper", "chernoff-lower"):
        side = method.split("-")[1]
        report = concentration.chernoff_tail(
            rv, params["n"], params["a"], params["m"], side, trials, seeds[1]
        )
    else:
        report = concentration.two_sided_chernoff(rv, params["n"], params["eps"], trials, seeds[1])
    row = {
        "method": report.method,
        "n": report.n,
        "trials": report.trials,
        "probability": report.probability,
        "stderr": report.stderr,
        "bound": report.bound,
    }
    return report.to_json(), [row]


def _run_cover_sample(params: dict, seed: int):
    seeds = spawn_seeds(seed, 2)
    g = _load_hypergraph(params["hypergraph"], seeds[0])
    p = params.get("p")
    if p is None:
        p = np.full(g.num_edges, 1.0 / g.num_edges)
    result = covering.quantum_covering_sample(
        g, p, params["eps"], params["tau"], seed=seeds[1], draws=params.get("draws")
    )
    row = {
        "kind": result.kind,
        "num_draws": result.num_draws,
        "certified": result.certified,
        "beyond_bound": result.beyond_bound,
        "attempts": result.attempts,
        "excluded_mass": result.details.get("excluded_mass"),
        "l1_distance": result.details.get("l1_distance"),
    }
    return result.to_json(), [row]


def _run_cover_capacity(params: dict, seed: int):
    g = _load_hypergraph(params["hypergraph"], seed)
    result = covering.covering_capacity(g, params.get("tol", 1e-9))
    row = {"bits": result.bits, "lp_value": result.value, "iterations": result.iterations}
    return result.to_json(), [row]


def _run_product_cover(params: dict, seed: int):
    g = _load_hypergraph(params["hypergraph"], seed)
    rows = covering.product_covering_table(g, params["n_values"], params.get("tol", 1e-8))
    return {"rows": rows}, [dict(r) for r in rows]


def _run_typicality(params: dict, seed: int):
    if params["mode"] == "state":
        spec = params["state"]
        if spec.get("kind") == "random":
            rho = random_density(make_rng(seed), spec["dim"])
        else:
            rho = linalg.matrix_from_json(spec)
        proj = channels.typical_projector(rho, params["n"], params["alpha"])
    else:
        channel = _load_channel(params["channel"], seed)
        proj = channels.conditional_typical_projector(channel, params["sequence"], params["alpha"])
    results = {
        "kind": proj.kind,
        "n": proj.n,
        "alpha": proj.alpha,
        "dim": proj.dim,
        "rank": proj.rank,
        "trace_mass": proj.trace_mass,
        "mass_bound": proj.mass_bound,
        "details": proj.details,
    }
    row = {k: results[k] for k in CSV_COLUMNS["typicality"]}
    return results, [row]


def _run_capacity(params: dict, seed: int):
    channel = _load_channel(params["channel"], seed)
    solution = channels.capacity(channel, params.get("tol", 1e-9), params.get("max_iter", 200_000))
    row = {"bits": solution.bits, "gap": solution.gap, "iterations": solution.iterations}
    return solution.to_json(), [row]


def _run_resolvability(params: dict, seed: int):
    # seeds: channel construction, input law construction, sampling.
    seeds = spawn_seeds(seed, 3)
    channel = _load_channel(params["channel"], seeds[0])
    dist = _load_distribution(params["P"], channel.alphabet_size, seeds[1])
    lam = params["lambda"]
    result = identification.resolvability_regularize(
        dist,
        channel,
        lam,
        seeds[2],
        alpha=params.get("alpha"),
        eps=params.get("eps"),
        tau=params.get("tau"),
        draws=params.get("draws"),
    )
    row = {
        "lambda": lam,
        "K": result.K,
        "L": result.L,
        "support": result.support_size,
        "measured_distance": result.measured_distance,
        "certified": result.certified,
    }
    return result.to_json(), [row]


def _run_conjecture_probe(params: dict, seed: int):
    report = concentration.conjecture_probe(params["which"], params["dim"], params["count"], seed)
    row = {
        "which": report.which,
        "dim": report.dim,
        "instances": report.instances,
        "min_slack": report.min_slack,
        "violations": report.violations,
    }
    return report.to_json(), [row]


def _run_qid_eval(params: dict, seed: int):
    seeds = spawn_seeds(seed, 2)
    channel = _load_channel(params["channel"], seeds[0])
    code = _load_code(params["code"], channel, seeds[1])
    lam1, lam2, acceptance = identification.evaluate_qid_code(code, channel)
    results = {
        "lambda1": lam1,
        "lambda2": lam2,
        "messages": code.num_messages,
        "n": code.n,
        "acceptance": acceptance.tolist(),
    }
    rows = [
        {"i": i, "j": j, "acceptance": float(acceptance[i, j])}
        for i in range(code.num_messages)
        for j in range(code.num_messages)
    ]
    return results, rows


HANDLERS = {
    "tail-mc": _run_tail_mc,
    "cover-sample": _run_cover_sample,
    "cover-capacity": _run_cover_capacity,
    "product-cover": _run_product_cover,
    "typicality": _run_typicality,
    "capacity": _run_capacity,
    "resolvability": _run_resolvability,
    "conjecture-probe": _run_conjecture_probe,
    "qid-eval": _run_qid_eval,
}


# ---------------------------------------------------------------------------
# run records


def tool_version() -> str:
    try:
        from importlib.metadata import version

        return version("opcover")
    except Exception:  # pragma: no cover - only hit outside an install
        return "0.0.0"


@dataclass(frozen=True)
class RunRecord:
    """One completed run: hash of what was asked, payload of what came out.

    results is the byte-reproducible part; wall_time_ms sits outside it
    on purpose and is the only field allowed to differ between reruns.
    """

    config_hash: str
    tool_version: str
    results: dict
    wall_time_ms: int

    def to_json(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "results": json_safe(self.results),
            "wall_time_ms": self.wall_time_ms,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunRecord":
        return cls(
            config_hash=obj["config_hash"],
            tool_version=obj["tool_version"],
            results=obj["results"],
            wall_time_ms=obj["wall_time_ms"],
        )


def _execute(config: dict) -> tuple[RunRecord, list]:
    start = time.perf_counter()
    results, rows = HANDLERS[config["command"]](config["params"], config["seed"])
    elapsed_ms = int((time.perf_counter() - start) * 1000)
    record = RunRecord(config_hash(config), tool_version(), json_safe(results), elapsed_ms)
    return record, rows


def _write_output(config: dict, record: RunRecord, rows: list) -> None:
    path = config.get("output_path")
    if not path:
        return
    if config.get("format", "json") == "csv":
        text = csv_text(CSV_COLUMNS[config["command"]], rows)
    else:
        text = canonical_json(record.to_json()) + "\n"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run(config: dict) -> RunRecord:
    """Validate, dispatch, write the output file if one was requested."""
    validate_config(config)
    record, rows = _execute(config)
    _write_output(config, record, rows)
    return record


# ---------------------------------------------------------------------------
# sweeps


def _thread_count() -> int:
    raw = os.environ.get("OPCOVER_THREADS", "0")
    try:
        k = int(raw)
    except ValueError as exc:
        raise ConfigError(f"OPCOVER_THREADS must be an integer, got {raw!r}") from exc
    if k <= 0:  # 0 (or unset) means pick for the machine
        return min(32, os.cpu_count() or 1)
    return k


def _set_path(config: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = config
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"axis {dotted!r} not present in template", tuple(keys))
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"axis {dotted!r} not present in template", tuple(keys))
    node[keys[-1]] = value


def sweep(config_template: dict, axis: str, values: list) -> tuple[list, str]:
    """One run per axis value, in parallel, aggregated deterministically.

    Each run gets its own sub-seed split off the template seed (unless
    the axis is the seed itself), so results never depend on worker
    count or completion order.  A failing run becomes a row with
    status=error and the sweep keeps going.  Returns (records, csv);
    records holds a RunRecord or the exception per run, in run order.
    """
    validate_config(config_template)
    # Probe the axis path before spawning anything.
    _set_path(copy.deepcopy(config_template), axis, None)
    command = config_template["command"]
    sub_seeds = spawn_seeds(config_template["seed"], max(1, len(values)))

    jobs = []
    for index, value in enumerate(values):
        config = copy.deepcopy(config_template)
        config.pop("output_path", None)
        _set_path(config, axis, value)
        if axis != "seed":
            config["seed"] = sub_seeds[index]
        jobs.append((index, value, config))

    def one(job):
        index, value, config = job
        try:
            validate_config(config)
            record, rows = _execute(config)
            return index, value, config, record, rows, None
        except Exception as exc:  # noqa: BLE001 - failure becomes a row
            return index, value, config, None, None, exc

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        outcomes = sorted(pool.map(one, jobs), key=lambda t: t[0])

    columns = SWEEP_PREFIX + CSV_COLUMNS[command]
    records, rows_out = [], []
    for index, value, config, record, rows, error in outcomes:
        prefix = {
            "run_index": index,
            "axis": axis,
            "value": value,
            "seed": config["seed"],
            "status": "ok" if error is None else "error",
            "error": "" if error is None else str(error),
        }
        if error is None:
            records.append(record)
            for row in rows:
                rows_out.append({**prefix, **row})
        else:
            records.append(error)
            rows_out.append(prefix)
    return records, csv_text(columns, rows_out)


# ---------------------------------------------------------------------------
# command line


def _parse_json_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw  # bare strings are passed through


def _apply_param_flags(params: dict, flags) -> None:
    for flag in flags or ():
        key, sep, raw = flag.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param expects key=value, got {flag!r}")
        node = params
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--param path {key!r} crosses a non-object")
        node[parts[-1]] = _parse_json_value(raw)


def _load_json_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            loaded = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"config {path!r} must hold a JSON object")
    return loaded


def _build_config(args) -> dict:
    config = _load_json_file(args.config) if args.config else {}
    config["command"] = args.command
    config.setdefault("params", {})
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None:
        config["output_path"] = args.out
    if args.format is not None:
        config["format"] = args.format
    _apply_param_flags(config["params"], args.param)
    return config


def _emit_error(payload: dict) -> None:
    print(canonical_json(payload), file=sys.stderr)


def _add_common_flags(parser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its fields")
    parser.add_argument("--seed", type=int, help="64-bit experiment seed")
    parser.add_argument("--out", help="output file path")
    parser.add_argument("--format", choices=["json", "csv"], help="output format (default json)")
    parser.add_argument(
        "--param",
        action="append",
        metavar="KEY=VALUE",
        help="set a params field (dotted keys, JSON values); repeatable",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opcover",
        description="Seeded, hash-stamped experiment runner for the opcover library.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_common_flags(sub.add_parser(name, help=f"run the {name} experiment"))
    sweep_parser = sub.add_parser("sweep", help="run one command across a list of values")
    _add_common_flags(sweep_parser)
    sweep_parser.add_argument("--axis", help="dotted config path to vary, e.g. params.lambda")
    sweep_parser.add_argument("--values", help="JSON list of axis values")
    return parser


_NUMERIC_FAILURES = (BoundViolation, ValueError, RuntimeError, ArithmeticError, OSError)


def _run_main(args) -> int:
    config = _build_config(args)
    try:
        validate_config(config)
    except ConfigError as exc:
        _emit_error({"error": "schema-violation", "path": exc.path, "message": str(exc)})
        return 2
    try:
        record, rows = _execute(config)
    except _NUMERIC_FAILURES as exc:
        _emit_error({
            "error": "numeric-failure",
            "type": type(exc).__name__,
            "message": str(exc),
            "config_hash": config_hash(config),
        })
        return 3
    _write_output(config, record, rows)
    if not config.get("output_path"):
        if config.get("format", "json") == "csv":
            sys.stdout.write(csv_text(CSV_COLUMNS[config["command"]], rows))
        else:
            print(canonical_json(record.to_json()))
    return 0


def _sweep_main(args) -> int:
    spec = _load_json_file(args.config) if args.config else {}
    if args.axis is not None:
        spec["axis"] = args.axis
    if args.values is not None:
        parsed = _parse_json_value(args.values)
        if not isinstance(parsed, list):
            raise ConfigError("--values must be a JSON list")
        spec["values"] = parsed
    if args.out is not None:
        spec["output_path"] = args.out
    if args.format is not None:
        spec["format"] = args.format
    template = spec.get("template")
    if isinstance(template, dict):
        template.setdefault("params", {})
        if args.seed is not None:
            template["seed"] = args.seed
        _apply_param_flags(template["params"], args.param)
    try:
        jsonschema.validate(instance=spec, schema=SWEEP_SCHEMA)
        records, text = sweep(spec["template"], spec["axis"], spec["values"])
    except jsonschema.ValidationError as exc:
        _emit_error({
            "error": "schema-violation",
            "path": list(exc.absolute_path),
            "message": exc.message,
        })
        return 2
    except ConfigError as exc:
        _emit_error({"error": "schema-violation", "path": exc.path, "message": str(exc)})
        return 2
    except _NUMERIC_FAILURES as exc:
        _emit_error({"error": "numeric-failure", "type": type(exc).__name__, "message": str(exc)})
        return 3

    if spec.get("format") == "json":
        payload = canonical_json({
            "records": [
                r.to_json() if isinstance(r, RunRecord)
                else {"error": type(r).__name__, "message": str(r)}
                for r in records
            ],
        }) + "\n"
    else:
        payload = text
    out = spec.get("output_path")
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    failures = sum(1 for r in records if not isinstance(r, RunRecord))
    return 3 if failures == len(records) and records else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            return _sweep_main(args)
        return _run_main(args)
    except ConfigError as exc:
        _emit_error({"error": "schema-violation", "path": exc.path, "message": str(exc)})
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
