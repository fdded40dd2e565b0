import math

import pytest

from rotree.errors import AuthError, BackendUnavailable, MalformedResponse
from rotree.policy import (
    BackendConfig,
    ChatBackend,
    RateLimiter,
    RecordedTransport,
    RetryPolicy,
    TapTransport,
    TransportError,
    chat_complete,
    completion_body,
)


def backend(transport, attempts=3, **kw):
    cfg = BackendConfig(endpoint="https://example.invalid/v1/chat/completions", model_name="m",
                        api_key_source=None, retry=RetryPolicy(attempts, (1.0, 2.0, 4.0)), **kw)
    sleeps = []
    return ChatBackend(cfg, transport, sleep=sleeps.append), sleeps


def test_recorded_replay():
    b, _ = backend(RecordedTransport(["hello there"]))
    assert chat_complete("hi", b) == "hello there"


def test_retry_then_success():
    t = RecordedTransport([TransportError("reset"), (503, {"error": "busy"}), "ok"])
    b, sleeps = backend(t)
    assert chat_complete("hi", b) == "ok"
    assert t.calls == 3 and sleeps == [1.0, 2.0]


def test_exhaustion_carries_last_error():
    last = TransportError("timeout #3")
    t = RecordedTransport([TransportError("a"), TransportError("b"), last])
    b, _ = backend(t)
    with pytest.raises(BackendUnavailable) as err:
        chat_complete("hi", b)
    assert err.value.last_error is last and t.calls == 3


def test_auth_errors(monkeypatch):
    monkeypatch.delenv("ROTREE_TEST_KEY", raising=False)
    cfg = BackendConfig(api_key_source="ROTREE_TEST_KEY")
    t = RecordedTransport(["x"])
    with pytest.raises(AuthError):
        ChatBackend(cfg, t).complete([{"role": "user", "content": "hi"}])
    assert t.calls == 0
    monkeypatch.setenv("ROTREE_TEST_KEY", "k")
    with pytest.raises(AuthError):
        ChatBackend(cfg, RecordedTransport([(401, {})])).complete([{"role": "user", "content": "hi"}])


def test_key_goes_in_header(monkeypatch):
    monkeypatch.setenv("ROTREE_TEST_KEY", "sekrit")
    seen = {}

    def transport(url, headers, payload):
        seen.update(headers)
        return 200, completion_body("x")

    ChatBackend(BackendConfig(api_key_source="ROTREE_TEST_KEY"), transport).complete([{"role": "user", "content": "q"}])
    assert seen["Authorization"] == "Bearer sekrit"


def test_wire_format():
    tap = TapTransport(RecordedTransport(["x"]))
    b, _ = backend(tap, temperature=0.3, max_tokens=17)
    chat_complete([{"role": "system", "content": "s"}, {"role": "user", "content": "u"}], b)
    payload = tap.payloads[0]
    assert payload == {"model": "m", "messages": [{"role": "system", "content": "s"}, {"role": "user", "content": "u"}],
                       "temperature": 0.3, "max_tokens": 17}
    assert tap.prompts == ["u"]


def test_malformed_responses():
    b, _ = backend(RecordedTransport([(200, {"choices": []})]))
    with pytest.raises(MalformedResponse):
        chat_complete("hi", b)
    b, _ = backend(RecordedTransport([(400, {"error": "bad"})]))
    with pytest.raises(MalformedResponse):
        chat_complete("hi", b)


def test_label_probability_normalizes():
    tops = [{"token": "good", "logprob": math.log(0.6)}, {"token": "bad", "logprob": math.log(0.2)},
            {"token": "maybe", "logprob": math.log(0.2)}]
    b, _ = backend(RecordedTransport([(200, completion_body("good", tops))]), logprobs=True)
    assert b.label_probability("p", "good", "bad") == pytest.approx(0.75)
    b, _ = backend(RecordedTransport([(200, completion_body("x", [{"token": "x", "logprob": 0.0}]))]))
    with pytest.raises(MalformedResponse):
        b.label_probability("p", "good", "bad")


def test_rate_limiter_spaces_calls():
    now = [0.0]
    slept = []

    def sleep(d):
        slept.append(d)
        now[0] += d

    rl = RateLimiter(4.0, clock=lambda: now[0], sleep=sleep)
    for _ in range(3):
        rl.wait()
    assert slept == [pytest.approx(0.25), pytest.approx(0.25)]
    RateLimiter(0).wait()


def test_config_round_trip_and_validation():
    cfg = BackendConfig(model_name="x", retry=RetryPolicy(2, (0.5,)))
    assert BackendConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ValueError):
        RetryPolicy(0)
    with pytest.raises(ValueError):
        BackendConfig(temperature=-1)
