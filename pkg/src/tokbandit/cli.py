"""Command line client for the service.

Subcommands build a JSON payload from a config file plus flags, send it to
the service (in-process by default, remote with --server), and print the
JSON response. Exit codes: 0 success, 1 configuration or request errors,
2 runtime failures.
"""

from __future__ import annotations

import asyncio
import json
import sys

import click
import httpx


class _InProcessTransport(httpx.BaseTransport):
    """Drive an ASGI app from a sync client, one event loop per request."""

    def __init__(self, app):
        self._transport = httpx.ASGITransport(app=app, raise_app_exceptions=False)

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        async def drive():
            resp = await self._transport.handle_async_request(request)
            await resp.aread()
            return resp

        resp = asyncio.run(drive())
        return httpx.Response(resp.status_code, headers=resp.headers,
                              content=resp.content)


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}")
    if not isinstance(doc, dict):
        raise click.ClickException(f"config {path} must hold a JSON object")
    return doc


def _merge(base: dict, override: dict) -> dict:
    """Shallow merge; dict-valued keys merge one level deep."""
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = {**out[k], **v}
        else:
            out[k] = v
    return out


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from .service import create_app

    return httpx.Client(transport=_InProcessTransport(create_app()),
                        base_url="http://tokbandit.local", timeout=None)


def _call(ctx: click.Context, path: str, payload: dict) -> dict:
    try:
        with _client(ctx.obj["server"]) as client:
            resp = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if resp.status_code == 200:
        doc = resp.json()
        click.echo(json.dumps(doc, indent=2))
        return doc
    try:
        detail = resp.json().get("detail", resp.text)
    except json.JSONDecodeError:
        detail = resp.text or f"HTTP {resp.status_code}"
    if resp.status_code in (400, 422):
        raise click.ClickException(f"invalid request: {detail}")
    click.echo(f"error: {detail}", err=True)
    sys.exit(2)


def _env_payload(ctx: click.Context, options: dict) -> dict:
    env = {k: v for k, v in options.items() if v is not None}
    if ctx.obj["seed"] is not None:
        env["seed"] = ctx.obj["seed"]
    return env


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON file merged into the request payload.")
@click.option("--seed", type=int, default=None,
              help="Override the seed (simulations run this single seed).")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Output directory or file, depending on the subcommand.")
@click.option("--threads", type=int, default=None,
              help="Worker threads for simulation cells.")
@click.option("--server", default=None,
              help="Base URL of a running service; default is in-process.")
@click.pass_context
def main(ctx, config_path, seed, out_path, threads, server):
    """Simulator and diagnostics for token-level linear bandits."""
    ctx.ensure_object(dict)
    ctx.obj.update(config_path=config_path, seed=seed, out=out_path,
                   threads=threads, server=server)


def _simulate(ctx: click.Context, defaults: dict, overrides: dict):
    payload = dict(defaults)
    if ctx.obj["config_path"]:
        payload = _merge(payload, _load_json(ctx.obj["config_path"]))
    payload = _merge(payload, {k: v for k, v in overrides.items() if v is not None})
    if ctx.obj["seed"] is not None:
        payload["seeds"] = [ctx.obj["seed"]]
    payload.setdefault("seeds", [0])
    if ctx.obj["out"] is not None:
        payload["out_path"] = ctx.obj["out"]
    if ctx.obj["threads"] is not None:
        payload["threads"] = ctx.obj["threads"]
    _call(ctx, "/simulate", payload)


_sim_options = [
    click.option("--rounds", "-T", "T", type=int, default=None, help="Horizon T."),
    click.option("--family", default=None, help="Environment family."),
    click.option("--algo", "-a", "algos", multiple=True,
                 help="Algorithm to run; repeat for several."),
    click.option("--n", type=int, default=None, help="Regular vocabulary size."),
    click.option("--length", "-L", "L", type=int, default=None,
                 help="Maximum sequence length."),
    click.option("--dim", "-d", "d", type=int, default=None,
                 help="Embedding dimension."),
    click.option("--sigma", type=float, default=None, help="Noise scale."),
    click.option("--eps", type=float, default=None, help="Smoothness slack."),
]


def _with_sim_options(fn):
    for opt in reversed(_sim_options):
        fn = opt(fn)
    return fn


def _sim_overrides(T, family, algos, n, L, d, sigma, eps) -> dict:
    return {"T": T, "family": family, "algos": list(algos) or None,
            "n": n, "L": L, "d": d, "sigma": sigma, "eps": eps}


@main.command("simulate-tlb")
@_with_sim_options
@click.pass_context
def simulate_tlb(ctx, T, family, algos, n, L, d, sigma, eps):
    """Token-level decoding runs; defaults to the eoful algorithm."""
    _simulate(ctx, {"algos": ["eoful"]},
              _sim_overrides(T, family, algos, n, L, d, sigma, eps))


@main.command("simulate-tmab")
@_with_sim_options
@click.option("--explore", "N", type=int, default=None,
              help="Exploration rounds per arm before committing.")
@click.pass_context
def simulate_tmab(ctx, T, family, algos, n, L, d, sigma, eps, N):
    """Fixed-query arm runs; defaults to greedy_etc on the table family."""
    overrides = _sim_overrides(T, family, algos, n, L, d, sigma, eps)
    overrides["N"] = N
    _simulate(ctx, {"algos": ["greedy_etc"], "family": "table"}, overrides)


@main.command("simulate-lookahead")
@_with_sim_options
@click.option("--k", type=int, default=None, help="Lookahead width in tokens.")
@click.pass_context
def simulate_lookahead(ctx, T, family, algos, n, L, d, sigma, eps, k):
    """K-token lookahead runs; defaults to k=2 on the k_block family."""
    overrides = _sim_overrides(T, family, algos, n, L, d, sigma, eps)
    overrides["k"] = k
    _simulate(ctx, {"algos": ["k_lookahead_eoful"], "family": "k_block", "k": 2},
              overrides)


_env_options = [
    click.option("--family", default=None, help="Environment family."),
    click.option("--n", type=int, default=None, help="Regular vocabulary size."),
    click.option("--length", "-L", "L", type=int, default=None,
                 help="Maximum sequence length."),
    click.option("--dim", "-d", "d", type=int, default=None,
                 help="Embedding dimension."),
    click.option("--sigma", type=float, default=None, help="Noise scale."),
    click.option("--eps", type=float, default=None, help="Smoothness slack."),
]


def _with_env_options(fn):
    for opt in reversed(_env_options):
        fn = opt(fn)
    return fn


@main.command("check-assumptions")
@_with_env_options
@click.option("--mode", type=click.Choice(["exhaustive", "sampled"]), default=None)
@click.option("--tol", type=float, default=None, help="Comparison tolerance.")
@click.option("--variant", default=None,
              help="Override the declared structure check (ddmc, k_ddmc, none).")
@click.option("--query", type=int, default=None, help="Query index to inspect.")
@click.pass_context
def check_assumptions_cmd(ctx, family, n, L, d, sigma, eps, mode, tol, variant,
                          query):
    """Verify end-token identity and utility monotonicity on an environment."""
    payload: dict = {}
    if ctx.obj["config_path"]:
        payload = _merge(payload, _load_json(ctx.obj["config_path"]))
    env = _env_payload(ctx, {"family": family, "n": n, "L": L, "d": d,
                             "sigma": sigma, "eps": eps})
    payload = _merge(payload, {"env": env})
    for key, val in (("mode", mode), ("tol", tol), ("variant", variant),
                     ("query", query)):
        if val is not None:
            payload[key] = val
    _call(ctx, "/assumptions/check", payload)


@main.command("reduce-bts")
@click.option("--direction", type=click.Choice(["bts_to_tmab", "tmab_to_bts"]),
              required=True)
@click.option("--tree", "tree_path", type=click.Path(), default=None,
              help="JSON file holding a tree (bts_to_tmab).")
@click.option("--arity", type=int, default=None, help="Tree arity when generating.")
@click.option("--depth", type=int, default=None, help="Tree depth when generating.")
@click.option("--family", default=None, help="Environment family (tmab_to_bts).")
@click.option("--n", type=int, default=None)
@click.option("--length", "-L", "L", type=int, default=None)
@click.option("--cap", type=int, default=None,
              help="Maximum sequences to enumerate (tmab_to_bts).")
@click.pass_context
def reduce_bts(ctx, direction, tree_path, arity, depth, family, n, L, cap):
    """Map a value tree to an arm environment or recover the tree back."""
    payload: dict = {"direction": direction}
    if ctx.obj["config_path"]:
        payload = _merge(payload, _load_json(ctx.obj["config_path"]))
    payload["direction"] = direction
    if tree_path:
        payload["tree"] = _load_json(tree_path)
    for key, val in (("arity", arity), ("depth", depth), ("cap", cap)):
        if val is not None:
            payload[key] = val
    if ctx.obj["seed"] is not None:
        payload["seed"] = ctx.obj["seed"]
    if direction == "tmab_to_bts":
        env = _env_payload(ctx, {"family": family, "n": n, "L": L})
        payload["env"] = _merge(payload.get("env", {}), env)
    if ctx.obj["out"] is not None:
        payload["out"] = ctx.obj["out"]
    _call(ctx, "/bts/reduce", payload)


@main.command("gen-dump")
@_with_env_options
@click.option("--pairs", type=int, default=None, help="Sequence pairs to emit.")
@click.option("--diverge-at", type=int, default=None,
              help="1-based position where the pair members differ.")
@click.option("--w-zero/--no-w-zero", default=None,
              help="Drop the embedding component orthogonal to theta.")
@click.pass_context
def gen_dump_cmd(ctx, family, n, L, d, sigma, eps, pairs, diverge_at, w_zero):
    """Write a JSONL dump of prefix-pair embeddings for offline validation."""
    payload: dict = {}
    if ctx.obj["config_path"]:
        payload = _merge(payload, _load_json(ctx.obj["config_path"]))
    env = _env_payload(ctx, {"family": family, "n": n, "L": L, "d": d,
                             "sigma": sigma, "eps": eps})
    payload = _merge(payload, {"env": env})
    for key, val in (("pairs", pairs), ("diverge_at", diverge_at),
                     ("w_zero", w_zero)):
        if val is not None:
            payload[key] = val
    if ctx.obj["seed"] is not None:
        payload["seed"] = ctx.obj["seed"]
    if ctx.obj["out"] is not None:
        payload["out"] = ctx.obj["out"]
    if "out" not in payload:
        raise click.ClickException("gen-dump needs --out for the dump path")
    _call(ctx, "/dump/generate", payload)


@main.command("validate-ddmc")
@click.argument("dump", type=click.Path())
@click.option("--metric", type=click.Choice(["d1", "l2", "lp"]), default=None)
@click.option("--p", type=float, default=None, help="Exponent for the lp metric.")
@click.option("--signed", is_flag=True, default=None,
              help="Keep the sign of the d1 metric.")
@click.option("--theta", default=None,
              help="Comma-separated weights for the d1 metric.")
@click.option("--dump-id", default=None, help="Label recorded in the outputs.")
@click.pass_context
def validate_ddmc(ctx, dump, metric, p, signed, theta, dump_id):
    """Aggregate a dump by shared-suffix length and score monotonicity."""
    payload: dict = {"path": dump}
    if ctx.obj["config_path"]:
        payload = _merge(payload, _load_json(ctx.obj["config_path"]))
    payload["path"] = dump
    for key, val in (("metric", metric), ("p", p), ("signed", signed),
                     ("dump_id", dump_id)):
        if val is not None:
            payload[key] = val
    if theta is not None:
        try:
            payload["theta"] = [float(x) for x in theta.split(",")]
        except ValueError:
            raise click.ClickException(f"cannot parse --theta {theta!r}")
    if ctx.obj["out"] is not None:
        payload["out_csv"] = f"{ctx.obj['out']}/stats.csv"
        payload["out_json"] = f"{ctx.obj['out']}/summary.json"
    _call(ctx, "/ddmc/validate", payload)


@main.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
