"""Command-line scenario runner.

    pvtele <command> [--config FILE] [--out DIR] [--seed N] [--precision P] [--threads N]
    pvtele figure <id> [same flags]

Each run writes ``<name>.csv`` (and/or ``<name>_<part>.json``) plus a
``<name>.json`` sidecar holding the fully resolved configuration; passing the
sidecar back through ``--config`` repeats the run.  Exit codes: 0 success,
2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import jsonschema

from . import __version__, scenarios
from ._accel import backend
from .scenarios import DEFAULTS, FIGURES, RUNNERS, SCHEMAS, ScenarioError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
COMMANDS = ("response-ratio", "fidelity", "optimize", "h-prime", "oracle-validate")


class ConfigError(Exception):
    pass


# -- JSON with positions ----------------------------------------------------

_LITERAL = re.compile(r"-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?|true|false|null")
_WS = re.compile(r"\s*")


def json_positions(text):
    """Map each JSON path (tuple of keys / indices) to the offset where it starts.

    Object members map to the offset of their key so messages point at the
    line a user would edit.  Assumes ``text`` already parsed with ``json``.
    """
    pos = {}
    decode = json.decoder.scanstring

    def skip(i):
        return _WS.match(text, i).end()

    def value(i, path):
        i = skip(i)
        pos.setdefault(path, i)
        c = text[i]
        if c == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                i = skip(i)
                start = i
                key, i = decode(text, i + 1)
                pos[path + (key,)] = start
                i = skip(i) + 1  # ':'
                i = skip(value(i, path + (key,)))
                if text[i] == ",":
                    i += 1
                    continue
                return i + 1
        if c == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = skip(value(i, path + (k,)))
                k += 1
                if text[i] == ",":
                    i += 1
                    continue
                return i + 1
        if c == '"':
            return decode(text, i + 1)[1]
        return _LITERAL.match(text, i).end()

    value(0, ())
    return pos


def _line_col(text, offset):
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def load_document(path):
    """Read a scenario file; returns ``(doc, text)``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}:1:1: a scenario must be a JSON object")
    return doc, text


def validate(doc, schema, path="<config>", text=None, offset_path=()):
    """Validate against ``schema``; the first error (in document order) is reported with its line."""
    validator = jsonschema.Draft202012Validator(schema)
    errors = list(validator.iter_errors(doc))
    if not errors:
        return
    positions = json_positions(text) if text is not None else {}

    def where(err):
        p = offset_path + tuple(err.absolute_path)
        if err.validator == "additionalProperties" and isinstance(err.instance, dict):
            extra = [k for k in err.instance if k not in err.schema.get("properties", {})]
            if extra:
                p = p + (extra[0],)
        return p

    def key(err):
        p = where(err)
        while p and p not in positions:
            p = p[:-1]
        return positions.get(p, 0)

    err = min(errors, key=key)
    while err.context:
        # oneOf/anyOf: report the branch that got furthest into the document
        err = max(err.context, key=lambda e: len(e.absolute_path))
    p = where(err)
    dotted = ".".join(str(k) for k in p) or "<root>"
    msg = err.message
    if err.validator == "additionalProperties":
        msg = f"unknown key {p[-1]!r}"
    if text is None:
        raise ConfigError(f"{path}: {dotted}: {msg}")
    line, col = _line_col(text, key(err))
    raise ConfigError(f"{path}:{line}:{col}: {dotted}: {msg}")


# -- output -----------------------------------------------------------------


def format_number(v):
    v = float(v)
    if v == int(v) and abs(v) < 2**53:
        return str(int(v))
    return format(v, ".17g")


def write_csv(path, table):
    lines = [",".join(table.columns)]
    for row in table.data:
        lines.append(",".join(format_number(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, doc):
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# -- driver -----------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file (a sidecar from an earlier run also works)")
    common.add_argument("--out", default=".", help="output directory (default: current directory)")
    common.add_argument("--seed", type=int, help="RNG seed, overrides the scenario")
    common.add_argument("--precision", help="machine or extended:<bits>, overrides the scenario")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    parser = argparse.ArgumentParser(prog="pvtele", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run a {name} scenario")
    fig = sub.add_parser("figure", parents=[common], help="regenerate a figure dataset")
    fig.add_argument("figure_id", choices=sorted(FIGURES))
    return parser


def resolve(args):
    """Return ``(command, name, config, provenance)`` for the parsed arguments."""
    doc, text, source = {}, None, "<config>"
    if args.config:
        doc, text = load_document(args.config)
        source = args.config
    offset = ()
    if "config" in doc and "command" in doc:
        # a sidecar: rerun its resolved configuration
        if args.command == "figure" and doc.get("figure") not in (None, args.figure_id):
            raise ConfigError(f"{source}: sidecar belongs to {doc.get('figure')}, not {args.figure_id}")
        doc, offset = doc["config"], ("config",)
    if args.command == "figure":
        fig = FIGURES[args.figure_id]
        command, name, defaults, fixed = fig.command, args.figure_id, fig.config, fig.source_keys
    else:
        command, name, defaults, fixed = args.command, args.command.replace("-", "_"), DEFAULTS[args.command], frozenset()
    validate(doc, SCHEMAS[command], source, text, offset)
    cfg, filled = scenarios.merge_defaults(defaults, doc)
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be a 64-bit unsigned integer")
        if "pso" in cfg:
            cfg["pso"]["seed"] = args.seed
        cfg["seed"] = args.seed
    if args.precision is not None:
        cfg["precision"] = args.precision
    validate(cfg, SCHEMAS[command], "<resolved config>")
    provenance = {
        path: {"artifact_default": not any(path == k or path.startswith(k + ".") for k in fixed)}
        for path in filled
    }
    if args.seed is not None:
        for path in ("seed", "pso.seed"):
            provenance.pop(path, None)
    if args.precision is not None:
        provenance.pop("precision", None)
    return command, name, cfg, provenance


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        command, name, cfg, provenance = resolve(args)
        policy = scenarios.resolve_policy(cfg["precision"])
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        outcome = RUNNERS[command](cfg, policy, args.threads)
    except ConfigError as exc:
        print(f"pvtele: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"pvtele: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ScenarioError, ValueError) as exc:
        print(f"pvtele: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for part, table in outcome.tables.items():
            scenarios.check_finite(table)
            fname = f"{name}{'_' + part if part else ''}.csv"
            write_csv(out / fname, table)
            written.append(fname)
    except ArithmeticError as exc:
        print(f"pvtele: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for part, doc in outcome.documents.items():
        fname = f"{name}_{part or 'result'}.json"
        write_json(out / fname, doc)
        written.append(fname)
    sidecar = {
        "tool": "pvtele",
        "version": __version__,
        "backend": backend(),
        "command": command,
        "figure": args.figure_id if args.command == "figure" else None,
        "config": cfg,
        "defaults_applied": provenance,
        "outputs": written,
    }
    write_json(out / f"{name}.json", sidecar)
    if outcome.stdout:
        print(outcome.stdout)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
