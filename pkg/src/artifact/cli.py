"""Command line front end.

Subcommands: parse (mold and parse source text), relations (dump the
slot-annotated precedence table), coherence (grammar checks), session
(line-JSON editor protocol on stdin/stdout), serve (the same protocol over
WebSocket), and bench (parse/edit timing on random programs).

Exit status is 0 on success with no violations, 1 when parsing could not
proceed or checks found violations, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
import time

from . import editor
from .editor import BufferItem, EditState, handle_request, hello, initial_state, parse_texts, render, render_text
from .gen import sample_program
from .grammar import GrammarError, builtin_hazel, load_grammar, validate
from .molder import candidates, choose, lex, machinery
from .parser import item_to_json, start_stack


def _load_grammar(spec: str):
    if spec == "hazel":
        return builtin_hazel()
    with open(spec, "r", encoding="utf-8") as f:
        return load_grammar(f.read())


def _items_from_source(g, text: str) -> tuple[BufferItem, ...]:
    items = []
    for t in lex(g, text):
        if t.kind == "space":
            continue
        if t.kind == "newline":
            items.append(BufferItem("\n", "newline"))
        elif t.kind == "token" and candidates(g, t.text):
            items.append(BufferItem(t.text, "token"))
        else:
            items.append(BufferItem(t.text, "unmolded"))
    return tuple(items)


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


# ---------------------------------------------------------------------------
# subcommands


def cmd_parse(g, args) -> int:
    text = args.source if args.source is not None else sys.stdin.read()
    items = _items_from_source(g, text)
    texts, late = [], []
    broke = False
    for it in items:
        if it.kind == "newline":
            broke = True
        elif it.kind == "token":
            texts.append(it.text)
            late.append(broke)
            broke = False
    if args.trace or args.format == "debug":
        m = machinery(g)
        stack = start_stack()
        push_trace: list = []
        for i, t in enumerate(texts):
            audit: list = []
            mc = choose(g, stack, [], t, audit=audit)
            if args.trace:
                print(_dumps({"type": "mold", "token": t, "candidates": audit, "chosen": str(mc.tile)}))
            stack = m.parser.push(stack, [], m.token_for(mc.tile, t), trace=push_trace, late=late[i])
        final = m.parser.push(stack, [], m.parser.end_token(), trace=push_trace)
        term = final.link.item
        if args.format == "debug":
            for entry in push_trace:
                print(_dumps({"type": "step", **entry}))
    else:
        term = parse_texts(g, tuple(texts), tuple(late))
    if args.format == "json":
        print(_dumps(item_to_json(term)))
    else:
        st = EditState(items=items, caret=0)
        print(render_text(render(g, st), ascii_mode=args.ascii))
    return 0


def cmd_relations(g, args) -> int:
    table = machinery(g).table
    for row in table.rows(ascii_mode=args.ascii):
        print(row)
    return 0


def cmd_coherence(g, args) -> int:
    from .relations import check_coherence

    issues = [str(v) for v in validate(g)]
    m = machinery(g)
    issues += [str(f) for f in check_coherence(m.elab, m.table)]
    for line in issues:
        print(line)
    print(f"{len(issues)} violation(s)")
    return 1 if issues else 0


def cmd_session(g, args) -> int:
    print(_dumps(hello()), flush=True)
    st = initial_state()
    print(_dumps({"type": "render", "model": render(g, st)}), flush=True)
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except json.JSONDecodeError:
            req = None
        if isinstance(req, dict) and "type" not in req and "kind" in req:
            req = {"type": "event", "event": req}
        st, resp = handle_request(g, st, req)
        print(_dumps(resp), flush=True)
    return 0


def cmd_serve(g, args) -> int:
    import asyncio

    from websockets.asyncio.server import serve

    async def handler(ws):
        st = initial_state()
        await ws.send(_dumps(hello()))
        await ws.send(_dumps({"type": "render", "model": render(g, st)}))
        async for msg in ws:
            try:
                req = json.loads(msg)
            except json.JSONDecodeError:
                req = None
            st, resp = handle_request(g, st, req)
            await ws.send(_dumps(resp))

    async def amain():
        async with serve(handler, "127.0.0.1", args.port) as server:
            port = server.sockets[0].getsockname()[1] if server.sockets else args.port
            print(f"listening on ws://127.0.0.1:{port}", flush=True)
            await asyncio.get_running_loop().create_future()

    try:
        asyncio.run(amain())
    except KeyboardInterrupt:
        pass
    return 0


def cmd_bench(g, args) -> int:
    rng = random.Random(args.seed)
    sizes = [250, 500, 1000, 2000]
    samples = []
    print("size,parse_ms,edit_ms")
    for size in sizes:
        texts = tuple(sample_program(g, rng, size))
        editor._INCR.clear()
        t0 = time.perf_counter()
        parse_texts(g, texts)
        parse_ms = (time.perf_counter() - t0) * 1000.0
        st = EditState(items=tuple(BufferItem(t, "token") for t in texts), caret=0)
        render(g, st)  # warm the prefix cache, as an editor session would be
        st = EditState(items=st.items, caret=10**9)
        t0 = time.perf_counter()
        st = editor.apply(g, st, editor.Event("insert", text="1"))
        render(g, st)
        edit_ms = (time.perf_counter() - t0) * 1000.0
        print(f"{len(texts)},{parse_ms:.2f},{edit_ms:.2f}")
        samples.append((len(texts), max(parse_ms, 1e-6)))
    xs = [math.log(n) for n, _ in samples]
    ys = [math.log(ms) for _, ms in samples]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)
    print(f"parse exponent: {slope:.2f}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="artifact", description=__doc__)
    ap.add_argument(
        "--grammar",
        default=os.environ.get("TYLR_GRAMMAR"),
        help="grammar JSON path, or 'hazel' for the built-in grammar (env TYLR_GRAMMAR)",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("parse", help="mold and parse source text")
    p.add_argument("source", nargs="?", help="source text (stdin when omitted)")
    p.add_argument("--format", choices=("json", "text", "debug"), default="text")
    p.add_argument("--ascii", action="store_true", help="ascii grout markers")
    p.add_argument("--trace", action="store_true", help="print each molding choice")

    p = sub.add_parser("relations", help="dump the precedence relation table")
    p.add_argument("--ascii", action="store_true")

    sub.add_parser("coherence", help="check grammar assumptions and table coherence")

    sub.add_parser("session", help="line-JSON editor session on stdin/stdout")

    p = sub.add_parser("serve", help="editor sessions over WebSocket")
    p.add_argument("--port", type=int, default=8716)

    p = sub.add_parser("bench", help="parse/edit timing on random programs")
    p.add_argument("--seed", type=int, default=0)

    args = ap.parse_args(argv)
    if not args.grammar:
        ap.error("--grammar is required (or set TYLR_GRAMMAR)")
    try:
        g = _load_grammar(args.grammar)
    except (OSError, GrammarError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 1
    cmd = {
        "parse": cmd_parse,
        "relations": cmd_relations,
        "coherence": cmd_coherence,
        "session": cmd_session,
        "serve": cmd_serve,
        "bench": cmd_bench,
    }[args.cmd]
    try:
        return cmd(g, args)
    except BrokenPipeError:
        try:
            sys.stdout.close()
        except OSError:
            pass
        return 0


if __name__ == "__main__":
    raise SystemExit(main())
