import json
import math

import httpx
import pytest

from lmprior.remote import (
    AUTH_TOKEN_ENV,
    CompletionsAdapter,
    ContextOverflowError,
    FunctionClient,
    HashClient,
    MultiTokenLabelError,
    RemoteLabelClient,
    RemoteProtocolError,
    TransportFailureError,
)


def native_handler(responses):
    """MockTransport handler for the native label-probability protocol."""

    def handle(request):
        body = json.loads(request.content)
        labels = body["candidates"]
        probs = []
        counts = []
        for label in labels:
            prob, count = responses.get(label, (0.5, 1))
            probs.append(prob)
            counts.append(count)
        return httpx.Response(200, json={"probabilities": probs, "token_counts": counts})

    return handle


def make_client(handler):
    return RemoteLabelClient(
        "http://test/api", "m1", transport=httpx.MockTransport(handler), retry_wait=0.0
    )


class TestNativeProtocol:
    def test_probability_passthrough(self):
        client = make_client(native_handler({"spam": (0.8125, 1)}))
        assert client.label_confidence("msg:", "spam") == pytest.approx(0.8125)

    def test_multi_token_label_is_hard_error(self):
        client = make_client(native_handler({"Sci/Tech": (0.5, 3)}))
        with pytest.raises(MultiTokenLabelError) as err:
            client.label_confidence("msg:", "Sci/Tech")
        assert "Sci/Tech" in str(err.value)

    def test_determinism_probe(self):
        client = make_client(native_handler({"ham": (0.612345, 1)}))
        values = [client.label_confidence("p", "ham") for _ in range(10)]
        assert all(round(v, 6) == round(values[0], 6) for v in values)

    def test_retry_then_success(self):
        calls = {"n": 0}

        def flaky(request):
            calls["n"] += 1
            if calls["n"] < 3:
                return httpx.Response(503)
            return httpx.Response(
                200, json={"probabilities": [0.25], "token_counts": [1]}
            )

        client = make_client(flaky)
        assert client.label_confidence("p", "x") == pytest.approx(0.25)
        assert calls["n"] == 3

    def test_transport_failure_after_retries(self):
        def always_down(request):
            raise httpx.ConnectError("down")

        client = make_client(always_down)
        with pytest.raises(TransportFailureError):
            client.label_confidence("p", "x")

    def test_context_overflow(self):
        client = make_client(lambda request: httpx.Response(413))
        with pytest.raises(ContextOverflowError):
            client.label_confidence("p" * 10, "x")

    def test_malformed_response(self):
        client = make_client(lambda request: httpx.Response(200, json={"nope": 1}))
        with pytest.raises(RemoteProtocolError):
            client.label_confidence("p", "x")

    def test_auth_header_from_environment(self, monkeypatch):
        seen = {}

        def handle(request):
            seen["auth"] = request.headers.get("authorization")
            return httpx.Response(200, json={"probabilities": [0.5], "token_counts": [1]})

        monkeypatch.setenv(AUTH_TOKEN_ENV, "sekrit")
        client = make_client(handle)
        client.label_confidence("p", "x")
        assert seen["auth"] == "Bearer sekrit"


class TestCompletionsAdapter:
    def make(self, tokens, offsets, logprobs):
        def handle(request):
            return httpx.Response(
                200,
                json={
                    "choices": [
                        {
                            "logprobs": {
                                "tokens": tokens,
                                "text_offset": offsets,
                                "token_logprobs": logprobs,
                            }
                        }
                    ]
                },
            )

        return CompletionsAdapter(
            "http://test/v1/completions",
            "m1",
            transport=httpx.MockTransport(handle),
            retry_wait=0.0,
        )

    def test_single_token_label(self):
        # prompt "Label:" has 6 chars; the label token starts at offset 6
        adapter = self.make(["Label", ":", " ham"], [0, 5, 6], [None, -0.1, -0.25])
        assert adapter.label_confidence("Label:", " ham") == pytest.approx(math.exp(-0.25))

    def test_multi_token_label(self):
        adapter = self.make(
            ["Label", ":", " Sci", "/Tech"], [0, 5, 6, 10], [None, -0.1, -0.3, -0.2]
        )
        with pytest.raises(MultiTokenLabelError):
            adapter.label_confidence("Label:", " Sci/Tech")


class TestLocalClients:
    def test_function_client(self):
        client = FunctionClient(lambda prompt, label: 0.25 if label == "a" else 0.75)
        assert client.label_probabilities("p", ["a", "b"]) == [0.25, 0.75]

    def test_hash_client_deterministic_and_bounded(self):
        a = HashClient(seed=1)
        b = HashClient(seed=1)
        v = a.label_confidence("prompt", "label")
        assert v == b.label_confidence("prompt", "label")
        assert 0.0 < v <= 1.0
        assert a.label_confidence("prompt", "other") != v

    def test_hash_client_seed_sensitivity(self):
        assert HashClient(1).label_confidence("p", "l") != HashClient(2).label_confidence(
            "p", "l"
        )
