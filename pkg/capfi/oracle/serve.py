"""Serve a saved builtin model as an external oracle.

Usage::

    python -m capfi.oracle.serve weights.json [--name NAME]
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, TextIO

import numpy as np
from loguru import logger

from capfi.oracle.builtin import BuiltinModel, load_model
from capfi.oracle.protocol import Bye, Hello, PredictRequest, ScoreResponse, decode, encode
from capfi.utils.exceptions import CapfiError, OracleProtocolError


def serve(model: BuiltinModel, stdin: TextIO, stdout: TextIO, name: Optional[str] = None) -> int:
    """Answer predict requests until ``bye`` or end of input.

    Returns:
        Number of requests served.
    """
    hello = Hello(name=name or model.name, version=model.version, layout=model.layout.signature)
    stdout.write(encode(hello))
    stdout.flush()

    served = 0
    for line in stdin:
        if not line.strip():
            continue
        message = decode(line)
        if isinstance(message, Bye):
            break
        if not isinstance(message, PredictRequest):
            raise OracleProtocolError(f"Unexpected record {line.strip()!r}")
        if len(message.features) != model.layout.size:
            raise OracleProtocolError(
                f"Request {message.id} has {len(message.features)} features, "
                f"layout needs {model.layout.size}"
            )
        score = float(model.predict_proba(np.asarray([message.features]))[0])
        stdout.write(encode(ScoreResponse(id=message.id, score=score)))
        stdout.flush()
        served += 1
    return served


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Serve a builtin CAPFI model over wire protocol v1")
    parser.add_argument("weights", type=Path, help="Model file written by save_model")
    parser.add_argument("--name", default=None, help="Override the advertised oracle name")
    args = parser.parse_args(argv)

    # stdout carries the protocol; diagnostics go to stderr only
    logger.remove()
    logger.add(sys.stderr, level="WARNING")

    try:
        model = load_model(args.weights)
        served = serve(model, sys.stdin, sys.stdout, args.name)
    except CapfiError as exc:
        logger.error(str(exc))
        return 1
    logger.debug(f"Served {served} requests")
    return 0


if __name__ == "__main__":
    sys.exit(main())
