"""Command-line client for the beamforming service.

Every command except ``serve`` sends its request to the HTTP API: to a
running server when ``--url`` is given, otherwise to an in-process instance
of the same application.
"""

import argparse
import json
import sys
import warnings
from pathlib import Path

DEFAULT_PORT = 8000


def _client(url):
    if url:
        import httpx
        return httpx.Client(base_url=url, timeout=None)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # starlette flags its httpx transport
        from fastapi.testclient import TestClient

    from .service.app import app
    return TestClient(app)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"error: cannot read matrix file {path}: {exc}")


def _post(args, route, payload):
    with _client(args.url) as client:
        resp = client.post(route, json=payload)
    body = resp.json()
    if resp.status_code != 200:
        detail = body.get("detail", body)
        print(f"error ({resp.status_code}): {body.get('error', '')} {detail}".strip(),
              file=sys.stderr)
        raise SystemExit(2)
    return body


def _instance_payload(args):
    payload = {"rhat": _read_json(args.rhat), "rs": _read_json(args.rs)}
    for key in ("gamma", "eta"):
        value = getattr(args, key, None)
        if value is not None:
            payload[key] = value
    return payload


def cmd_run(args):
    text = Path(args.config).read_text()
    body = _post(args, "/experiments", {"config": text})
    out = Path(args.out)
    try:
        out.write_text(body["csv"])
    except OSError as exc:
        raise SystemExit(f"error: cannot write {out}: {exc}")
    print(body["summary"])
    print(f"wrote {body['rows']} rows to {out}", file=sys.stderr)


def cmd_solve(args):
    payload = _instance_payload(args)
    payload["xi"] = args.xi
    payload["max_outer"] = args.max_outer
    payload["method"] = args.method
    body = _post(args, "/solve", payload)
    if not args.trace:
        body.pop("trace")
    print(json.dumps(body, indent=2))


def cmd_oracle(args):
    payload = _instance_payload(args)
    payload["starts"] = args.starts
    payload["seed"] = args.seed
    print(json.dumps(_post(args, "/oracle", payload), indent=2))


def cmd_serve(args):
    import uvicorn

    uvicorn.run("innersocp.service.app:app", host=args.host, port=args.port)


def build_parser():
    p = argparse.ArgumentParser(prog="innersocp", description=__doc__.splitlines()[0])
    p.add_argument("--url", help="base URL of a running server (default: in-process)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a Monte Carlo sweep from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True, help="CSV output path")
    r.set_defaults(func=cmd_run)

    def instance_args(q):
        q.add_argument("--rhat", required=True, help="sample covariance JSON {re, im}")
        q.add_argument("--rs", required=True, help="presumed signal covariance JSON {re, im}")
        q.add_argument("--gamma", type=float, help="diagonal loading (default 0.1 ||Rhat||_F)")
        q.add_argument("--eta", type=float, help="factor error bound (default 0.5 sqrt(tr Rs))")

    s = sub.add_parser("solve", help="solve one robust beamforming instance")
    instance_args(s)
    s.add_argument("--xi", type=float, default=1e-8)
    s.add_argument("--max-outer", type=int, default=500)
    s.add_argument("--method", choices=("inner_socp", "direct_form"), default="inner_socp")
    s.add_argument("--trace", action="store_true", help="include the iteration trace")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="multi-start brute-force minimum of one instance")
    instance_args(o)
    o.add_argument("--starts", type=int, default=200)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("serve", help="start the HTTP server")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=DEFAULT_PORT)
    v.set_defaults(func=cmd_serve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
