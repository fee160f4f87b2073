"""Launch the bridge: triplemine-bridge --masked-model ... --causal-model ..."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Serve masked + causal LM scoring over HTTP.")
    parser.add_argument("--masked-model", default="bert-large-uncased", help="Masked LM name or path.")
    parser.add_argument("--causal-model", default="gpt2", help="Causal LM name or path.")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8311)
    parser.add_argument("--max-tokens", type=int, default=128)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    app = create_app(args.masked_model, args.causal_model, max_tokens=args.max_tokens)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")


if __name__ == "__main__":
    main()
