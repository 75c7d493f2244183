"""JSON-over-HTTP client shared by the remote backends."""

from __future__ import annotations

import logging
import threading
import time

import requests

from .core import BackendError

log = logging.getLogger(__name__)


class JsonHttpClient:
    """POST a JSON object, expect a JSON object back.

    Timeouts, connection errors, non-2xx statuses and non-object bodies are
    retried ``retries`` times with exponential backoff
    (``backoff_s * 2**attempt``) before a ``BackendError`` is raised.
    At most ``max_inflight`` requests run concurrently per client.
    """

    def __init__(
        self,
        endpoint: str,
        timeout_s: float = 30.0,
        retries: int = 3,
        max_inflight: int = 4,
        backoff_s: float = 0.5,
        session: requests.Session | None = None,
    ):
        if retries < 0:
            raise ValueError("retries must be >= 0")
        if max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self.retries = retries
        self.backoff_s = backoff_s
        self._slots = threading.BoundedSemaphore(max_inflight)
        self._session = session or requests.Session()
        self.latencies: list[float] = []

    def post_json(self, payload: dict) -> dict:
        last_exc: BaseException | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                with self._slots:
                    start = time.perf_counter()
                    resp = self._session.post(self.endpoint, json=payload, timeout=self.timeout_s)
                    elapsed = time.perf_counter() - start
                resp.raise_for_status()
                data = resp.json()
                if not isinstance(data, dict):
                    raise ValueError(f"expected a JSON object, got {type(data).__name__}")
            except (requests.RequestException, ValueError) as exc:
                last_exc = exc
                log.warning("POST %s failed (attempt %d/%d): %s",
                            self.endpoint, attempt + 1, self.retries + 1, exc)
                continue
            self.latencies.append(elapsed)
            return data
        raise BackendError(
            f"POST {self.endpoint} failed after {self.retries + 1} attempts: {last_exc}",
            cause=last_exc,
        )
