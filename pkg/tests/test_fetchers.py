"""Fetcher behavior: cache round-trip and network error mapping."""

import io
import json
import urllib.error
import urllib.request

import pytest

from tweetevents.errors import ParseError, TransportError
from tweetevents.fetchers import (
    BEARER_TOKEN_ENV,
    CachedFileFetcher,
    DictFetcher,
    TwitterApiFetcher,
    write_cache,
)


class TestDictFetcher:
    def test_resolve(self):
        f = DictFetcher({"1": "hello"})
        assert f.resolve("1") == "hello"
        assert f.resolve("2") is None


class TestCachedFileFetcher:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        write_cache({"2": "second", "1": "first ✓"}, path)
        f = CachedFileFetcher(path)
        assert len(f) == 2
        assert f.resolve("1") == "first ✓"
        assert f.resolve("2") == "second"
        assert f.resolve("3") is None

    def test_sorted_deterministic_output(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_cache({"9": "x", "10": "y"}, a)
        write_cache({"10": "y", "9": "x"}, b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_record_names_line(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        path.write_text('{"tweet_id":"1","text":"ok"}\n{"tweet_id":"2"}\n')
        with pytest.raises(ParseError) as err:
            CachedFileFetcher(path)
        assert err.value.line == 2

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        path.write_text('\n{"tweet_id":"1","text":"ok"}\n\n')
        assert CachedFileFetcher(path).resolve("1") == "ok"


def fake_urlopen(handler):
    def opener(request, timeout=None):
        result = handler(request)
        if isinstance(result, Exception):
            raise result
        body = io.BytesIO(json.dumps(result).encode())
        body.__enter__ = lambda *a: body
        body.__exit__ = lambda *a: False
        return body
    return opener


class TestTwitterApiFetcher:
    def test_requires_token(self, monkeypatch):
        monkeypatch.delenv(BEARER_TOKEN_ENV, raising=False)
        with pytest.raises(TransportError):
            TwitterApiFetcher()

    def test_token_from_env(self, monkeypatch):
        monkeypatch.setenv(BEARER_TOKEN_ENV, "tok")
        TwitterApiFetcher()

    def test_resolves_text(self, monkeypatch):
        monkeypatch.setattr(urllib.request, "urlopen",
                            fake_urlopen(lambda req: {"data": {"text": "tweet body"}}))
        f = TwitterApiFetcher(bearer_token="tok")
        assert f.resolve("1") == "tweet body"

    def test_api_error_payload_is_not_found(self, monkeypatch):
        monkeypatch.setattr(urllib.request, "urlopen",
                            fake_urlopen(lambda req: {"errors": [{"title": "Not Found Error"}]}))
        assert TwitterApiFetcher(bearer_token="tok").resolve("1") is None

    def test_http_404_is_not_found(self, monkeypatch):
        err = urllib.error.HTTPError("url", 404, "nope", {}, None)
        monkeypatch.setattr(urllib.request, "urlopen", fake_urlopen(lambda req: err))
        assert TwitterApiFetcher(bearer_token="tok").resolve("1") is None

    @pytest.mark.parametrize("code", [401, 429, 500])
    def test_other_http_codes_are_transport(self, monkeypatch, code):
        err = urllib.error.HTTPError("url", code, "boom", {}, None)
        monkeypatch.setattr(urllib.request, "urlopen", fake_urlopen(lambda req: err))
        with pytest.raises(TransportError):
            TwitterApiFetcher(bearer_token="tok").resolve("1")

    def test_network_failure_is_transport(self, monkeypatch):
        err = urllib.error.URLError("no route")
        monkeypatch.setattr(urllib.request, "urlopen", fake_urlopen(lambda req: err))
        with pytest.raises(TransportError):
            TwitterApiFetcher(bearer_token="tok").resolve("1")

    def test_sends_bearer_header(self, monkeypatch):
        seen = {}

        def handler(request):
            seen["auth"] = request.get_header("Authorization")
            seen["url"] = request.full_url
            return {"data": {"text": "x"}}

        monkeypatch.setattr(urllib.request, "urlopen", fake_urlopen(handler))
        TwitterApiFetcher(bearer_token="tok").resolve("99")
        assert seen["auth"] == "Bearer tok"
        assert seen["url"].endswith("/99")
