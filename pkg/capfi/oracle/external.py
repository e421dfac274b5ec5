"""External oracle: a child process speaking wire protocol v1 on stdin/stdout."""

import shlex
import subprocess
import threading
from typing import Optional, Sequence, Union

import numpy as np
from loguru import logger

from capfi.data.models import ModalityDims
from capfi.features.transforms import FeatureLayout
from capfi.oracle.base import Oracle, OracleKind, OracleMetadata
from capfi.oracle.protocol import (
    PROTOCOL_VERSION,
    Bye,
    Hello,
    PredictRequest,
    ScoreResponse,
    decode_as,
    encode,
)
from capfi.utils.exceptions import LayoutMismatchError, OracleProtocolError


class ExternalOracle(Oracle):
    """Wrap a model process; requests are served strictly one at a time.

    The feature layout is the one the process announces in its handshake,
    rebuilt against the manifest's ``dims``. ``expected_layout`` pins it.
    """

    def __init__(
        self,
        command: Union[str, Sequence[str]],
        dims: ModalityDims,
        expected_layout: Optional[FeatureLayout] = None,
    ):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise OracleProtocolError("Empty oracle command")
        self.command = argv
        self._lock = threading.Lock()
        self._next_id = 0

        logger.info(f"Starting external oracle: {' '.join(argv)}")
        try:
            self.process: Optional[subprocess.Popen] = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise OracleProtocolError(f"Cannot start oracle '{argv[0]}': {exc}") from exc

        try:
            hello = decode_as(self._read_line(), Hello)
            if hello.protocol != PROTOCOL_VERSION:
                raise OracleProtocolError(
                    f"Oracle '{hello.name}' speaks protocol v{hello.protocol}, "
                    f"toolkit speaks v{PROTOCOL_VERSION}"
                )
            layout = self._handshake_layout(hello, dims, expected_layout)
        except (OracleProtocolError, LayoutMismatchError):
            self.close()
            raise
        metadata = OracleMetadata(
            name=hello.name, version=hello.version, layout=hello.layout, kind=OracleKind.EXTERNAL
        )
        super().__init__(metadata, layout)
        logger.info(f"External oracle '{hello.name}' v{hello.version} ready ({hello.layout})")

    @staticmethod
    def _handshake_layout(
        hello: Hello, dims: ModalityDims, expected: Optional[FeatureLayout]
    ) -> FeatureLayout:
        if expected is not None and hello.layout != expected.signature:
            raise LayoutMismatchError(
                f"Oracle '{hello.name}' expects layout '{hello.layout}', run uses '{expected.signature}'"
            )
        try:
            return FeatureLayout.from_signature(hello.layout, dims)
        except ValueError as exc:
            raise LayoutMismatchError(f"Oracle '{hello.name}': {exc}") from exc

    def _read_line(self) -> str:
        assert self.process is not None and self.process.stdout is not None
        line = self.process.stdout.readline()
        if not line:
            code = self.process.poll()
            raise OracleProtocolError(
                f"Oracle process closed its output (exit code {code})"
            )
        return line

    def _send(self, text: str) -> None:
        assert self.process is not None and self.process.stdin is not None
        try:
            self.process.stdin.write(text)
            self.process.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise OracleProtocolError(f"Oracle process is gone: {exc}") from exc

    def predict_matrix(self, features: np.ndarray) -> np.ndarray:
        """Send one request per row and collect the matching responses.

        Raises:
            OracleProtocolError: On a closed process, malformed record or id mismatch.
        """
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if self.process is None:
            raise OracleProtocolError(f"Oracle '{self.name}' is closed")

        scores = np.empty(features.shape[0], dtype=np.float64)
        with self._lock:
            for row, vector in enumerate(features):
                request_id = self._next_id
                self._next_id += 1
                self._send(encode(PredictRequest(id=request_id, features=vector.tolist())))
                response = decode_as(self._read_line(), ScoreResponse)
                if response.id != request_id:
                    raise OracleProtocolError(
                        f"Oracle '{self.name}' answered id {response.id}, expected {request_id}"
                    )
                scores[row] = response.score
        return scores

    def close(self) -> None:
        """Say goodbye and reap the process."""
        process = self.process
        if process is None:
            return
        self.process = None
        try:
            if process.stdin is not None and not process.stdin.closed:
                process.stdin.write(encode(Bye()))
                process.stdin.flush()
                process.stdin.close()
        except (BrokenPipeError, OSError):
            pass
        try:
            process.wait(timeout=5)
        except subprocess.TimeoutExpired:
            logger.warning(f"Oracle process {process.pid} did not exit; killing it")
            process.kill()
            process.wait()
        if process.stdout is not None:
            process.stdout.close()

    def __del__(self) -> None:
        if getattr(self, "process", None) is not None:
            self.close()
