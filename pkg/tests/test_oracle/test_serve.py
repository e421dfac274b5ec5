"""Tests for serving a saved builtin model over the wire protocol."""

import io
import json

import numpy as np
import pytest

from capfi.config.settings import BuiltinOracleConfig, TrainingConfig
from capfi.features.transforms import feature_matrix
from capfi.oracle.builtin import save_model, train_builtin
from capfi.oracle.protocol import Bye, PredictRequest, encode
from capfi.oracle.serve import main, serve
from capfi.utils.exceptions import OracleProtocolError


@pytest.fixture
def model(pool):
    return train_builtin(pool, config=BuiltinOracleConfig(name="served", training=TrainingConfig(epochs=10)))


def test_serve_answers_in_order(model, pool):
    features = feature_matrix(pool, model.layout)[:3]
    requests = "".join(encode(PredictRequest(id=i, features=row.tolist())) for i, row in enumerate(features))
    stdin = io.StringIO(requests + "\n" + encode(Bye()) + encode(PredictRequest(id=9, features=[0.0])))
    stdout = io.StringIO()

    served = serve(model, stdin, stdout)
    assert served == 3
    lines = [json.loads(line) for line in stdout.getvalue().splitlines()]
    assert lines[0] == {
        "type": "hello", "name": "served", "version": "1", "layout": model.layout.signature, "protocol": 1
    }
    assert [line["id"] for line in lines[1:]] == [0, 1, 2]
    np.testing.assert_allclose([line["score"] for line in lines[1:]], model.predict_proba(features), atol=1e-15)


def test_serve_name_override(model):
    stdout = io.StringIO()
    serve(model, io.StringIO(""), stdout, name="renamed")
    assert json.loads(stdout.getvalue())["name"] == "renamed"


def test_serve_rejects_wrong_width(model):
    stdin = io.StringIO(encode(PredictRequest(id=0, features=[1.0, 2.0])))
    with pytest.raises(OracleProtocolError, match="layout needs"):
        serve(model, stdin, io.StringIO())


def test_serve_rejects_unexpected_records(model):
    stdin = io.StringIO('{"type": "score", "id": 0, "score": 0.5}\n')
    with pytest.raises(OracleProtocolError):
        serve(model, stdin, io.StringIO())


def test_main_reports_bad_weights(tmp_path):
    assert main([str(tmp_path / "missing.json")]) == 1


def test_main_serves_stdin(tmp_path, model, monkeypatch, capsys):
    weights = save_model(model, tmp_path / "model.json")
    monkeypatch.setattr("sys.stdin", io.StringIO(encode(Bye())))
    assert main([str(weights)]) == 0
    hello = json.loads(capsys.readouterr().out.splitlines()[0])
    assert hello["layout"] == model.layout.signature
