import json

import httpx
import pytest

from mnemokey.clients import MASK_TOKEN, STUB_FILL_POOL, BigramPerplexity, HashingEmbedder, HttpGenerator, StubGenerator
from mnemokey.cue import build_prompt, VocabEntry
from mnemokey.errors import ClientError, EmbedderError


def test_stub_is_seeded():
    prompt = build_prompt(VocabEntry("x", ("가다",)), ["나"])
    a = StubGenerator(1).complete(prompt, 4)
    assert a == StubGenerator(1).complete(prompt, 4)
    assert a != StubGenerator(2).complete(prompt, 4)
    assert len(a) == 4
    for text in a:
        obj = json.loads(text)
        assert obj["목표 단어"] == "가다" and "<가다>" in obj["이야기"] and "나" in obj["이야기"]


def test_stub_fill_ins():
    out = StubGenerator(0).complete(f"문장: 그는 {MASK_TOKEN} 했다", 5)
    assert len(out) == 5 and set(out) <= set(STUB_FILL_POOL)


def test_stub_rejects_unknown_prompt():
    with pytest.raises(ClientError):
        StubGenerator(0).complete("hello", 1)


def test_hashing_embedder():
    e = HashingEmbedder()
    assert e.dim == 64
    v = e.vec("낭비하다")
    assert len(v) == 64 and v == HashingEmbedder().vec("낭비하다")
    assert any(v)
    assert e.vec("  낭비하다 ") == v
    with pytest.raises(EmbedderError):
        e.vec("  ")


def test_bigram_perplexity():
    s = BigramPerplexity.from_file()
    fluent = s.ppl("그는 시장에서 사과를 샀다.")
    assert fluent > 1.0
    assert fluent == s.ppl("그는 시장에서 사과를 샀다.")
    assert s.ppl("뷁쉙퓛뛝") > fluent


def _recorder(responses):
    calls = []

    def handler(request):
        calls.append(request)
        r = responses.pop(0)
        if isinstance(r, Exception):
            raise r
        return r

    return handler, calls


def ok(n):
    return httpx.Response(200, json={"candidates": [f"c{i}" for i in range(n)]})


def make(responses, **kw):
    handler, calls = _recorder(responses)
    sleeps = []
    gen = HttpGenerator("http://gen.invalid/v1", model="m", transport=httpx.MockTransport(handler),
                        sleep=sleeps.append, **kw)
    return gen, calls, sleeps


def test_http_success_payload():
    gen, calls, sleeps = make([ok(2)], api_key="secret")
    assert gen.complete("p", 2, 0.5) == ["c0", "c1"]
    body = json.loads(calls[0].content)
    assert body == {"prompt": "p", "n": 2, "temperature": 0.5, "model": "m"}
    assert calls[0].headers["Authorization"] == "Bearer secret"
    assert sleeps == []


def test_http_retries_with_backoff():
    gen, calls, sleeps = make([httpx.Response(503), httpx.ConnectError("down"), ok(1)])
    assert gen.complete("p", 1) == ["c0"]
    assert len(calls) == 3 and sleeps == [0.5, 1.0]


def test_http_gives_up_after_two_retries():
    gen, calls, sleeps = make([httpx.Response(500), httpx.Response(429), httpx.Response(502)])
    with pytest.raises(ClientError):
        gen.complete("p", 1)
    assert len(calls) == 3


def test_http_client_errors_are_not_retried():
    gen, calls, _ = make([httpx.Response(400, text="bad")])
    with pytest.raises(ClientError):
        gen.complete("p", 1)
    assert len(calls) == 1


@pytest.mark.parametrize("payload", [{"nope": []}, {"candidates": ["a"]}, {"candidates": [1, 2]}])
def test_http_malformed(payload):
    gen, _, _ = make([httpx.Response(200, json=payload)])
    with pytest.raises(ClientError):
        gen.complete("p", 2)


def test_http_key_from_environment(monkeypatch):
    monkeypatch.setenv("MY_KEY", "k123")
    handler, calls = _recorder([ok(1)])
    gen = HttpGenerator.from_env("http://gen.invalid", key_env="MY_KEY", transport=httpx.MockTransport(handler))
    gen.complete("p", 1)
    assert calls[0].headers["Authorization"] == "Bearer k123"
    monkeypatch.delenv("MY_KEY")
    handler, calls = _recorder([ok(1)])
    gen = HttpGenerator.from_env("http://gen.invalid", key_env="MY_KEY", transport=httpx.MockTransport(handler))
    gen.complete("p", 1)
    assert "Authorization" not in calls[0].headers
