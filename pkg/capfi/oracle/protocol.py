"""Oracle wire protocol v1: newline-delimited JSON records over standard streams.

Session::

    oracle  -> {"type": "hello", "name": ..., "version": ..., "layout": ..., "protocol": 1}
    toolkit -> {"type": "predict", "id": 0, "features": [...]}
    oracle  -> {"type": "score", "id": 0, "score": 0.73}
    ...
    toolkit -> {"type": "bye"}

Requests are answered strictly in order, one response per request. Unknown
fields are ignored; a hello without ``protocol`` is taken as version 1.
"""

import json
from typing import Literal, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from capfi.utils.exceptions import OracleProtocolError

PROTOCOL_VERSION = 1


class _Message(BaseModel):
    model_config = ConfigDict(extra="ignore", frozen=True)


class Hello(_Message):
    """Handshake sent by the oracle on startup."""

    type: Literal["hello"] = "hello"
    name: str = Field(min_length=1)
    version: str
    layout: str
    protocol: int = PROTOCOL_VERSION


class PredictRequest(_Message):
    """One feature vector to score."""

    type: Literal["predict"] = "predict"
    id: int = Field(ge=0)
    features: list[float]


class ScoreResponse(_Message):
    """Score for the request with the same id."""

    type: Literal["score"] = "score"
    id: int = Field(ge=0)
    score: float = Field(ge=0.0, le=1.0)


class Bye(_Message):
    """Shutdown notice."""

    type: Literal["bye"] = "bye"


Message = Union[Hello, PredictRequest, ScoreResponse, Bye]
MessageT = TypeVar("MessageT", Hello, PredictRequest, ScoreResponse, Bye)

_BY_TYPE: dict[str, Type[_Message]] = {
    "hello": Hello,
    "predict": PredictRequest,
    "score": ScoreResponse,
    "bye": Bye,
}


def encode(message: _Message) -> str:
    """Serialize a record as one line (newline included)."""
    return json.dumps(message.model_dump(), separators=(",", ":"), allow_nan=False) + "\n"


def decode(line: str) -> Message:
    """Parse one record of any known type.

    Raises:
        OracleProtocolError: Quoting the offending line.
    """
    text = line.strip()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise OracleProtocolError(f"Malformed oracle record {text!r}: {exc}") from exc
    if not isinstance(raw, dict) or raw.get("type") not in _BY_TYPE:
        raise OracleProtocolError(f"Unknown oracle record {text!r}")
    try:
        return _BY_TYPE[raw["type"]].model_validate(raw)  # type: ignore[return-value]
    except ValidationError as exc:
        raise OracleProtocolError(f"Invalid oracle record {text!r}: {exc.errors()[0]['msg']}") from exc


def decode_as(line: str, expected: Type[MessageT]) -> MessageT:
    """Parse a record that must be of type ``expected``."""
    message = decode(line)
    if not isinstance(message, expected):
        raise OracleProtocolError(
            f"Expected a '{expected.model_fields['type'].default}' record, got {line.strip()!r}"
        )
    return message
