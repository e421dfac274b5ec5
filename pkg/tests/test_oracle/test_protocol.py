"""Tests for the newline-delimited JSON oracle protocol."""

import json

import pytest

from capfi.oracle.protocol import Bye, Hello, PredictRequest, ScoreResponse, decode, decode_as, encode
from capfi.utils.exceptions import OracleProtocolError


def test_encode_is_one_line():
    line = encode(PredictRequest(id=3, features=[0.5, 1.0]))
    assert line.endswith("\n") and line.count("\n") == 1
    assert json.loads(line) == {"type": "predict", "id": 3, "features": [0.5, 1.0]}


def test_decode_dispatches_on_type():
    assert isinstance(decode('{"type": "bye"}'), Bye)
    hello = decode('{"type": "hello", "name": "m", "version": "2", "layout": "sig"}')
    assert hello == Hello(name="m", version="2", layout="sig")


def test_unknown_fields_are_ignored():
    response = decode_as('{"type": "score", "id": 1, "score": 0.25, "extra": [1, 2]}\n', ScoreResponse)
    assert (response.id, response.score) == (1, 0.25)


@pytest.mark.parametrize(
    "line",
    [
        "not json",
        "[1, 2]",
        '{"type": "shout"}',
        '{"type": "score", "id": 1, "score": 1.5}',
        '{"type": "score", "id": -1, "score": 0.5}',
        '{"type": "hello", "name": "", "version": "1", "layout": "x"}',
    ],
)
def test_bad_records(line):
    with pytest.raises(OracleProtocolError):
        decode(line)


def test_decode_as_checks_type():
    with pytest.raises(OracleProtocolError, match="'score'"):
        decode_as('{"type": "bye"}', ScoreResponse)


def test_encode_rejects_nan():
    with pytest.raises(ValueError):
        encode(PredictRequest(id=0, features=[float("nan")]))
