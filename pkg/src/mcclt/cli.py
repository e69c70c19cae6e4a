"""Command-line entry point: ``mcclt <subcommand> --config PATH``.

Exit codes: 0 success, 1 configuration error, 2 verification failed.
"""
from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from .config import ConfigError, config_schema, load_config
from .experiments import EXIT_CONFIG, EXIT_OK, jsonable, reproduce, run
from .registry import catalog

SUBCOMMAND_KIND = {
    "simulate": "simulate",
    "exact": "exact",
    "drift": "drift",
    "mixing": "mixing",
    "clt": "clt",
    "check-conditions": "condition-check",
}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, metavar="PATH", help="experiment config (JSON)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, metavar="DIR", help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcclt", description="Markov chain CLT laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("run", help="run any experiment config"))
    for name, kind in SUBCOMMAND_KIND.items():
        _add_run_flags(sub.add_parser(name, help=f"run a {kind!r} experiment config"))
    lc = sub.add_parser("list-chains", help="print the chain catalog")
    lc.add_argument("--json", action="store_true", help="machine-readable output")
    rp = sub.add_parser("reproduce", help="re-run a manifest and byte-compare its CSV outputs")
    rp.add_argument("manifest", metavar="MANIFEST")
    rp.add_argument("--out", default=None, metavar="DIR", help="scratch directory for the re-run")
    sc = sub.add_parser("schema", help="print the config JSON schema")
    sc.add_argument("--out", default=None, metavar="PATH")
    return parser


def _err(msg: str) -> None:
    print(f"mcclt: error: {msg}", file=sys.stderr)


def _run(args, kind: str | None) -> int:
    cfg = load_config(args.config)
    if kind is not None and cfg.kind != kind:
        raise ConfigError(f"{args.config}: kind {cfg.kind!r} cannot run under this subcommand (expects {kind!r})")
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg = cfg.model_copy(update={"seed": args.seed})
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    res = run(cfg, args.out, args.threads)
    out = Path(args.out or cfg.out or f"runs/{cfg.kind}")
    status = "ok" if res.passed else "FAILED"
    print(f"{cfg.kind}: {status} (exit {res.exit_code}); artifacts in {out}")
    print(json.dumps(jsonable(res.summary), indent=2, sort_keys=True))
    return res.exit_code


def _list_chains(args) -> int:
    cat = catalog()
    if args.json:
        print(json.dumps(cat, indent=2))
        return EXIT_OK
    for e in cat:
        exact = "exact" if e["exact"] else "simulation only"
        print(f"{e['name']} -> {e['example']}  [{exact}]")
        print(f"    {e['description']}")
        for k, p in e["params"].items():
            print(f"    {k}: {p['type']} = {json.dumps(p['default'])}" + (f"  ({p['doc']})" if p["doc"] else ""))
    return EXIT_OK


def _reproduce(args) -> int:
    scratch = args.out or tempfile.mkdtemp(prefix="mcclt-reproduce-")
    code, info = reproduce(args.manifest, scratch)
    print(json.dumps(info, indent=2, sort_keys=True))
    print("reproduced" if code == EXIT_OK else "outputs differ")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-chains":
            return _list_chains(args)
        if args.command == "reproduce":
            return _reproduce(args)
        if args.command == "schema":
            text = json.dumps(config_schema(), indent=2, sort_keys=True) + "\n"
            if args.out:
                Path(args.out).write_text(text)
            else:
                print(text, end="")
            return EXIT_OK
        return _run(args, SUBCOMMAND_KIND.get(args.command))
    except ConfigError as e:
        _err(str(e))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
