"""Clients that score label tokens against a hosted language model.

Two wire formats are supported:

- the native JSON protocol: POST {model_id, prompt, candidates: [...]}
  returning {probabilities: [...], token_counts: [...]};
- an adapter for completions-style endpoints that expose per-token
  log-probabilities, mapped onto the same client interface.

All clients implement ``label_probabilities(prompt, labels)`` and
``label_confidence(prompt, label)``; local deterministic clients with the
same interface live here too, for offline runs and tests.
"""

import hashlib
import math
import os
import time

import httpx

AUTH_TOKEN_ENV = "LMPRIOR_AUTH_TOKEN"
DEFAULT_TIMEOUT = 30.0
DEFAULT_RETRIES = 3
DEFAULT_MAX_CONCURRENCY = 4


class RemoteProtocolError(RuntimeError):
    """The endpoint returned something the protocol does not allow."""


class TransportFailureError(RuntimeError):
    """Request failed after all retries; safe to retry later."""


class MultiTokenLabelError(ValueError):
    """A verbalizer label does not render to exactly one token."""

    def __init__(self, label, token_count):
        self.label = label
        self.token_count = token_count
        super().__init__(
            "label %r renders to %d tokens; labels must be single-token"
            % (label, token_count)
        )


class ContextOverflowError(ValueError):
    """Prompt exceeds the remote context limit."""


def _auth_headers():
    token = os.environ.get(AUTH_TOKEN_ENV)
    return {"Authorization": "Bearer " + token} if token else {}


class RemoteLabelClient:
    """Speaks the native label-probability protocol.

    Requests are idempotent probability reads, so transient transport
    failures are retried up to ``max_retries`` times with backoff.
    """

    def __init__(
        self,
        endpoint,
        model_id,
        timeout=DEFAULT_TIMEOUT,
        max_retries=DEFAULT_RETRIES,
        transport=None,
        retry_wait=0.5,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.max_retries = max_retries
        self.retry_wait = retry_wait
        self._client = httpx.Client(
            timeout=timeout, transport=transport, headers=_auth_headers()
        )

    def close(self):
        self._client.close()

    def _post(self, body):
        last_error = None
        for attempt in range(self.max_retries):
            try:
                resp = self._client.post(self.endpoint, json=body)
            except httpx.HTTPError as exc:
                last_error = exc
                if attempt + 1 < self.max_retries:
                    time.sleep(self.retry_wait * (attempt + 1))
                continue
            if resp.status_code == 413:
                raise ContextOverflowError("prompt exceeds the remote context limit")
            if resp.status_code >= 500:
                last_error = RemoteProtocolError("server error %d" % resp.status_code)
                if attempt + 1 < self.max_retries:
                    time.sleep(self.retry_wait * (attempt + 1))
                continue
            if resp.status_code != 200:
                raise RemoteProtocolError("unexpected status %d" % resp.status_code)
            return resp.json()
        raise TransportFailureError("request failed after %d attempts: %s"
                                    % (self.max_retries, last_error))

    def label_probabilities(self, prompt, labels):
        body = {"model_id": self.model_id, "prompt": prompt, "candidates": list(labels)}
        data = self._post(body)
        probs = data.get("probabilities")
        counts = data.get("token_counts")
        if probs is None or counts is None or len(probs) != len(labels):
            raise RemoteProtocolError("malformed response: %r" % (data,))
        for label, count in zip(labels, counts):
            if count != 1:
                raise MultiTokenLabelError(label, count)
        return [float(p) for p in probs]

    def label_confidence(self, prompt, label):
        return self.label_probabilities(prompt, [label])[0]


class CompletionsAdapter:
    """Maps the client interface onto a completions endpoint with logprobs.

    Token boundaries come from an echoed scoring request (prompt + label,
    max_tokens=0, echo + logprobs), which both verifies that the label is a
    single token and yields its log-probability after the prompt.
    """

    def __init__(
        self,
        endpoint,
        model_id,
        timeout=DEFAULT_TIMEOUT,
        max_retries=DEFAULT_RETRIES,
        transport=None,
        retry_wait=0.5,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.max_retries = max_retries
        self.retry_wait = retry_wait
        self._client = httpx.Client(
            timeout=timeout, transport=transport, headers=_auth_headers()
        )

    def close(self):
        self._client.close()

    def _post(self, body):
        last_error = None
        for attempt in range(self.max_retries):
            try:
                resp = self._client.post(self.endpoint, json=body)
            except httpx.HTTPError as exc:
                last_error = exc
                if attempt + 1 < self.max_retries:
                    time.sleep(self.retry_wait * (attempt + 1))
                continue
            if resp.status_code != 200:
                raise RemoteProtocolError("unexpected status %d" % resp.status_code)
            return resp.json()
        raise TransportFailureError("request failed after %d attempts: %s"
                                    % (self.max_retries, last_error))

    def label_confidence(self, prompt, label):
        body = {
            "model": self.model_id,
            "prompt": prompt + label,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 0,
            "temperature": 0,
        }
        data = self._post(body)
        try:
            logprobs = data["choices"][0]["logprobs"]
            tokens = logprobs["tokens"]
            offsets = logprobs["text_offset"]
            token_logprobs = logprobs["token_logprobs"]
        except (KeyError, IndexError) as exc:
            raise RemoteProtocolError("malformed completions response") from exc
        label_tokens = [i for i, off in enumerate(offsets) if off >= len(prompt)]
        if len(label_tokens) != 1:
            raise MultiTokenLabelError(label, len(label_tokens))
        return math.exp(token_logprobs[label_tokens[0]])

    def label_probabilities(self, prompt, labels):
        return [self.label_confidence(prompt, label) for label in labels]


class FunctionClient:
    """Local client wrapping a deterministic confidence function."""

    def __init__(self, fn):
        self.fn = fn

    def label_confidence(self, prompt, label):
        return float(self.fn(prompt, label))

    def label_probabilities(self, prompt, labels):
        return [self.label_confidence(prompt, label) for label in labels]


class HashClient(FunctionClient):
    """Deterministic pseudo-random confidences derived from a digest.

    Useful as a fully offline stand-in with stable, platform-independent
    outputs: confidence = integer(sha256(seed, prompt, label)) scaled
    into (0, 1).
    """

    def __init__(self, seed=0):
        self.seed = seed
        super().__init__(self._confidence)

    def _confidence(self, prompt, label):
        digest = hashlib.sha256(
            ("%d\x00%s\x00%s" % (self.seed, prompt, label)).encode("utf-8")
        ).digest()
        return (int.from_bytes(digest[:8], "big") + 1) / (2.0 ** 64 + 2)
