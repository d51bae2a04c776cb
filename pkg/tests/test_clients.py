"""HTTP client behavior: auth, retries, error mapping."""

from __future__ import annotations

import httpx
import pytest

from queryc import (
    ChatCompletionClient,
    ChatGenerator,
    Document,
    RemoteRetriever,
    ResponseFormatError,
    TransportError,
)

URL = "http://backend.invalid/v1/chat/completions"


def chat_response(content="hello"):
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


class Replay:
    """Serves canned responses (or raises canned exceptions) in order."""

    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.requests = []

    def transport(self):
        def handle(request):
            self.requests.append(request)
            outcome = self.outcomes.pop(0)
            if isinstance(outcome, Exception):
                raise outcome
            return outcome
        return httpx.MockTransport(handle)


def make_client(replay, **kw):
    return ChatCompletionClient(URL, "test-model", transport=replay.transport(), **kw)


def test_bearer_header_only_with_key():
    replay = Replay([chat_response(), chat_response()])
    with make_client(replay, api_key="sk-secret") as client:
        client.complete([("user", "hi")])
    assert replay.requests[0].headers["authorization"] == "Bearer sk-secret"

    replay2 = Replay([chat_response()])
    with make_client(replay2) as client:
        client.complete([("user", "hi")])
    assert "authorization" not in replay2.requests[0].headers


def test_complete_returns_message_content():
    replay = Replay([chat_response("the answer")])
    with make_client(replay) as client:
        assert client.complete([("user", "q")]) == "the answer"


def test_retries_once_on_server_error():
    replay = Replay([httpx.Response(500, text="boom"), chat_response("ok")])
    with make_client(replay) as client:
        assert client.complete([("user", "q")]) == "ok"
    assert len(replay.requests) == 2


def test_two_failures_surface_transport_error():
    replay = Replay([httpx.Response(500), httpx.Response(503)])
    with make_client(replay) as client:
        with pytest.raises(TransportError):
            client.complete([("user", "q")])
    assert len(replay.requests) == 2


def test_connect_error_retried_then_raised():
    replay = Replay([httpx.ConnectError("refused"), httpx.ConnectError("refused")])
    with make_client(replay) as client:
        with pytest.raises(TransportError):
            client.complete([("user", "q")])
    assert len(replay.requests) == 2


def test_malformed_success_body_not_retried():
    replay = Replay([httpx.Response(200, json={"surprise": True})])
    with make_client(replay) as client:
        with pytest.raises(ResponseFormatError):
            client.complete([("user", "q")])
    assert len(replay.requests) == 1


def test_per_call_overrides_reach_the_wire():
    replay = Replay([chat_response()])
    with make_client(replay, max_tokens=64) as client:
        client.complete([("user", "q")], temperature=0.7, max_tokens=16)
    import json
    payload = json.loads(replay.requests[0].content)
    assert payload["temperature"] == 0.7
    assert payload["max_tokens"] == 16


def test_chat_generator_adapts_messages():
    replay = Replay([chat_response("generated")])
    with make_client(replay) as client:
        gen = ChatGenerator(client, temperature=0.2)
        assert gen.generate([("system", "be terse"), ("user", "q")]) == "generated"
    import json
    payload = json.loads(replay.requests[0].content)
    assert payload["temperature"] == 0.2
    assert [m["role"] for m in payload["messages"]] == ["system", "user"]


def test_remote_retriever_round_trip():
    def handle(request):
        import json
        payload = json.loads(request.content)
        assert payload == {"query": "who?", "k": 2}
        return httpx.Response(200, json={"documents": [
            {"id": "a", "title": "T", "content": "C", "score": 1.5},
            {"id": "b", "title": "U", "content": "D"},
        ]})

    retriever = RemoteRetriever("http://search.invalid/retrieve",
                                transport=httpx.MockTransport(handle))
    docs = retriever.retrieve("who?", k=2)
    assert docs == [Document("a", "T", "C", 1.5), Document("b", "U", "D", 0.0)]


def test_remote_retriever_transport_error():
    retriever = RemoteRetriever(
        "http://search.invalid/retrieve",
        transport=httpx.MockTransport(lambda r: httpx.Response(502)))
    with pytest.raises(TransportError):
        retriever.retrieve("q", k=1)
