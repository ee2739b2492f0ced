"""Thin client over the HTTP API.

With a base URL the client talks to a running server over HTTP; without
one it mounts the application in-process (same wire format, no sockets),
which is how the CLI runs standalone.
"""

from __future__ import annotations

from typing import Optional

import httpx

from ..errors import HaarlabError


class ServiceError(HaarlabError):
    """Non-2xx response from the service."""


class ServiceClient:
    def __init__(self, base_url: Optional[str] = None, timeout: float = 3600.0):
        if base_url:
            self._client = httpx.Client(base_url=base_url, timeout=timeout)
        else:
            from fastapi.testclient import TestClient

            from .app import create_app

            self._client = TestClient(create_app())
        self.base_url = base_url

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code != 200:
            try:
                detail = response.json().get("detail", response.text)
            except Exception:
                detail = response.text
            raise ServiceError(f"{path} failed ({response.status_code}): {detail}")
        return response.json()

    def health(self) -> dict:
        response = self._client.get("/health")
        if response.status_code != 200:
            raise ServiceError(f"/health failed ({response.status_code})")
        return response.json()

    def sample(self, **payload) -> dict:
        return self._post("/sample", payload)

    def spectrum(self, **payload) -> dict:
        return self._post("/spectrum", payload)

    def convolve(self, **payload) -> dict:
        return self._post("/convolve", payload)

    def norm_oracle(self, **payload) -> dict:
        return self._post("/norm-oracle", payload)

    def polynomial_oracle(self, polynomial: str) -> dict:
        return self._post("/norm-oracle/polynomial", {"polynomial": polynomial})

    def run_experiment(self, config_text: str) -> dict:
        return self._post("/experiment/run", {"config_text": config_text})

    def verify(self, manifest: dict) -> dict:
        return self._post("/verify", {"manifest": manifest})
