"""HTTP backends: chat-completion generation and remote retrieval.

Wire format for generation is the common chat-completion shape: POST
``{model, messages, temperature, max_tokens}``, answer read from
``choices[0].message.content``.  Transport and HTTP failures are retried
once per call, then surface as :class:`TransportError`; a 2xx reply with
the wrong shape is a :class:`ResponseFormatError` (no retry).
"""

from __future__ import annotations

import httpx

from .errors import ResponseFormatError, TransportError
from .retrieval import Document


class ChatCompletionClient:
    concurrency_safe = True

    def __init__(self, endpoint: str, model: str, api_key: str | None = None,
                 timeout: float = 60.0, max_tokens: int = 1024,
                 transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint
        self.model = model
        self.max_tokens = max_tokens
        headers = {}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def complete(self, messages: list[tuple[str, str]], temperature: float = 0.0,
                 max_tokens: int | None = None, timeout: float | None = None) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": role, "content": content} for role, content in messages],
            "temperature": temperature,
            "max_tokens": max_tokens or self.max_tokens,
        }
        response = self._post(payload, timeout)
        try:
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ResponseFormatError(f"malformed completion payload: {exc}") from exc

    def _post(self, payload: dict, timeout: float | None) -> httpx.Response:
        last_error = None
        for _ in range(2):  # one retry
            try:
                response = self._client.post(self.endpoint, json=payload,
                                             timeout=timeout if timeout is not None else httpx.USE_CLIENT_DEFAULT)
            except httpx.HTTPError as exc:
                last_error = TransportError(f"request to {self.endpoint} failed: {exc}")
                continue
            if response.status_code >= 400:
                last_error = TransportError(f"{self.endpoint} answered HTTP {response.status_code}")
                continue
            return response
        raise last_error

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class ChatGenerator:
    """Adapts a :class:`ChatCompletionClient` to the executor's Generator."""

    concurrency_safe = True

    def __init__(self, client: ChatCompletionClient, temperature: float = 0.0):
        self.client = client
        self.temperature = temperature

    def generate(self, messages: list[tuple[str, str]]) -> str:
        return self.client.complete(messages, temperature=self.temperature)


class RemoteRetriever:
    """Retriever talking to an HTTP service: POST {query, k} -> {documents}."""

    concurrency_safe = True

    def __init__(self, endpoint: str, timeout: float = 60.0,
                 transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def retrieve(self, query: str, k: int) -> list[Document]:
        last_error = None
        for _ in range(2):
            try:
                response = self._client.post(self.endpoint, json={"query": query, "k": k})
            except httpx.HTTPError as exc:
                last_error = TransportError(f"request to {self.endpoint} failed: {exc}")
                continue
            if response.status_code >= 400:
                last_error = TransportError(f"{self.endpoint} answered HTTP {response.status_code}")
                continue
            try:
                records = response.json()["documents"]
                return [
                    Document(r["id"], r["title"], r["content"], float(r.get("score", 0.0)))
                    for r in records
                ]
            except (ValueError, KeyError, TypeError) as exc:
                raise ResponseFormatError(f"malformed retrieval payload: {exc}") from exc
        raise last_error

    def close(self) -> None:
        self._client.close()
