"""Run the shim: ``t2i-shim --mode mock --fixtures DIR [--port 8099]``."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import ShimConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="t2i-shim", description=__doc__)
    parser.add_argument("--mode", choices=("mock", "real"), default="mock")
    parser.add_argument("--fixtures", help="fixture directory (mock mode)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8099)
    parser.add_argument("--binding", action="append", default=[],
                        metavar="ROLE=MODEL",
                        help="override a real-mode model binding")
    args = parser.parse_args(argv)

    bindings = dict(item.split("=", 1) for item in args.binding)
    config = ShimConfig(mode=args.mode, fixture_dir=args.fixtures,
                        host=args.host, port=args.port, bindings=bindings)
    uvicorn.run(create_app(config), host=config.host, port=config.port,
                log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
