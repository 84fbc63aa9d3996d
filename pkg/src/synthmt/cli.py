"""Command-line driver: a thin client of the synthesis service.

Every subcommand sends artifact texts to the service endpoints and writes
the returned artifacts to the requested paths.  By default the service
runs in-process (no server needed); --server targets a remote instance.

Exit codes: 0 success, 1 domain errors (unrealizable spec, invalid
adaptive constraint, trace violations), 2 usage/artifact errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient
    from .service.app import create_app
    return TestClient(create_app(), raise_server_exceptions=False)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        print(f"error [cli]: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _write(path: str, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def _post(client: httpx.Client, endpoint: str, payload: dict) -> dict:
    resp = client.post(endpoint, json=payload)
    if resp.status_code == 200:
        return resp.json()
    try:
        detail = resp.json().get("detail", {})
    except ValueError:
        detail = {}
    component = detail.get("component", endpoint.strip("/"))
    kind = detail.get("kind", f"HTTP{resp.status_code}")
    message = detail.get("message", resp.text)
    print(f"error [{component}] {kind}: {message}", file=sys.stderr)
    if detail.get("witness"):
        print(f"  witness letters: {' '.join(detail['witness'])}",
              file=sys.stderr)
    raise SystemExit(1 if resp.status_code == 409 else 2)


def cmd_abstract(client, args) -> int:
    out = _post(client, "/abstract", {"spec": _read(args.spec)})
    _write(args.out, out["table"])
    _write(args.bspec, out["boolean_spec"])
    print(f"abstract: {len(out['literals'])} literals, "
          f"{len(out['letters'])} valid reactions -> {args.out}, {args.bspec}")
    return 0


def cmd_synth(client, args) -> int:
    payload = {"boolean_spec": _read(args.bspec)}
    if getattr(args, "import_mealy", None):
        payload["import_mealy"] = _read(args.import_mealy)
    out = _post(client, "/synth", payload)
    _write(args.out, out["mealy"])
    how = "imported" if out["imported"] else "synthesized"
    print(f"synth: {how} machine with {out['states']} state(s) -> {args.out}")
    return 0


def cmd_skolem(client, args) -> int:
    artifact = _read(args.artifact)
    payload = {"mealy": _read(args.mealy), "all_pairs": args.all_pairs}
    try:
        keys = set(json.loads(artifact))
    except ValueError:
        keys = set()
    payload["table" if "entries" in keys else "boolean_spec"] = artifact
    if args.gamma:
        payload["gamma"] = _read(args.gamma)
    out = _post(client, "/skolem", payload)
    _write(args.out, out["provider"])
    print(f"skolem: {out['pairs']} function(s) -> {args.out}")
    return 0


def cmd_emit_c(client, args) -> int:
    out = _post(client, "/emit-c", {"provider": _read(args.provider),
                                    "name": args.name})
    _write(args.out, out["source"])
    print(f"emit-c: {len(out['functions'])} function(s) -> {args.out}")
    return 0


def cmd_run(client, args) -> int:
    payload = {"spec": _read(args.spec), "inputs": _read(args.inputs),
               "provider": args.provider, "seed": args.seed,
               "randomized": args.randomized}
    if args.mealy:
        payload["mealy"] = _read(args.mealy)
    if args.skolem:
        payload["provider_artifact"] = _read(args.skolem)
    if args.gamma:
        payload["gamma"] = _read(args.gamma)
    out = _post(client, "/run", payload)
    _write(args.out, out["outputs"])
    report = out["report"]
    if args.report:
        _write(args.report, json.dumps(report, indent=2, sort_keys=True))
    status = "OK" if report["ok"] else \
        f"{len(report['violations'])} violation(s)"
    print(f"run: {report['steps']} steps, check {status} -> {args.out}")
    return 0 if report["ok"] else 1


def cmd_check(client, args) -> int:
    out = _post(client, "/check", {"spec": _read(args.spec),
                                   "trace": _read(args.trace)})
    report = out["report"]
    if args.out:
        _write(args.out, json.dumps(report, indent=2, sort_keys=True))
    print(f"check: {report['steps']} steps, "
          f"{'OK' if report['ok'] else 'violations:'}")
    for v in report["violations"]:
        print(f"  step {v['index']}: [{v['kind']}] {v['detail']}")
    return 0 if report["ok"] else 1


def cmd_bench(client, args) -> int:
    payload = {"steps": args.steps, "repeats": args.repeats,
               "seed": args.seed, "theory": args.theory,
               "provider": args.provider}
    if args.spec:
        payload["spec"] = _read(args.spec)
    if args.syn:
        payload["syn_literals"] = args.syn
    if args.gamma:
        payload["gamma"] = _read(args.gamma)
    if args.inputs:
        payload["inputs"] = _read(args.inputs)
    if getattr(args, "import_mealy", None):
        payload["import_mealy"] = _read(args.import_mealy)
    out = _post(client, "/bench", payload)
    if args.csv:
        _write(args.csv, out["csv"])
    if args.out:
        _write(args.out, json.dumps({"static": out["static"],
                                     "dynamic": out["dynamic"],
                                     "ratio": out["ratio_static_over_dynamic"]},
                                    indent=2, sort_keys=True))
    s, d = out["static"], out["dynamic"]
    print(f"bench: {s['steps']} steps x {s['repeats']} repeat(s)")
    print(f"  {s['provider_kind']:>8} provider mean "
          f"{s['provider']['mean_us']:.1f} us, divergence "
          f"{s['divergence_pct']:.2f}%")
    print(f"  {'dynamic':>8} provider mean {d['provider']['mean_us']:.1f} us, "
          f"divergence {d['divergence_pct']:.2f}%")
    print(f"  dynamic/static provider time ratio: "
          f"{out['ratio_static_over_dynamic']:.1f}x")
    return 0


def cmd_serve(client, args) -> int:  # pragma: no cover - exercised manually
    import uvicorn
    from .service.app import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="synthmt",
        description="Static synthesis of theory-level reactive controllers")
    ap.add_argument("--server", default=None,
                    help="base URL of a running service (default: in-process)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("abstract", help="spec -> reaction table + Boolean spec")
    p.add_argument("spec")
    p.add_argument("-o", "--out", default="table.json")
    p.add_argument("-b", "--bspec", default="bspec.json")
    p.set_defaults(fn=cmd_abstract)

    p = sub.add_parser("synth", help="Boolean spec -> Mealy controller")
    p.add_argument("bspec")
    p.add_argument("-o", "--out", default="mealy.json")
    p.add_argument("--import", dest="import_mealy", default=None,
                   help="validate and adopt an externally synthesized machine")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("skolem", help="table + machine [+gamma] -> provider")
    p.add_argument("artifact",
                   help="reaction table or Boolean-spec artifact")
    p.add_argument("--mealy", required=True)
    p.add_argument("-o", "--out", default="provider.json")
    p.add_argument("--gamma", default=None)
    p.add_argument("--all-pairs", action="store_true",
                   help="synthesize every (letter, choice) pair eagerly")
    p.set_defaults(fn=cmd_skolem)

    p = sub.add_parser("emit-c", help="provider -> C99 source")
    p.add_argument("provider")
    p.add_argument("-o", "--out", default="provider.c")
    p.add_argument("--name", default="skolem")
    p.set_defaults(fn=cmd_emit_c)

    p = sub.add_parser("run", help="artifacts + input trace -> output trace")
    p.add_argument("spec")
    p.add_argument("--inputs", required=True)
    p.add_argument("-o", "--out", default="trace.out.jsonl")
    p.add_argument("--mealy", default=None)
    p.add_argument("--provider", choices=["static", "dynamic", "adaptive"],
                   default="static")
    p.add_argument("--skolem", default=None,
                   help="provider artifact from the skolem subcommand")
    p.add_argument("--gamma", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--randomized", action="store_true")
    p.add_argument("--report", default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("check", help="trace + spec -> violation report")
    p.add_argument("spec")
    p.add_argument("--trace", required=True)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("bench", help="repeated runs -> report + CSV")
    p.add_argument("spec", nargs="?", default=None)
    p.add_argument("--syn", type=int, default=None,
                   help="use the k-literal template instead of a spec file")
    p.add_argument("--theory", choices=["int", "real"], default="int")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--provider", choices=["static", "adaptive"],
                   default="static")
    p.add_argument("--gamma", default=None)
    p.add_argument("--inputs", default=None)
    p.add_argument("--import", dest="import_mealy", default=None)
    p.add_argument("--csv", default=None)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return args.fn(None, args)
    try:
        with _client(args.server) as client:
            return args.fn(client, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except httpx.HTTPError as exc:
        print(f"error [cli] transport: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
