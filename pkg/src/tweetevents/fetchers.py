"""Tweet text fetchers for corpus hydration.

A fetcher exposes ``resolve(tweet_id) -> str | None``: the tweet text, or
``None`` when the tweet is definitively unavailable (deleted, suspended,
...). Infrastructure problems raise :class:`TransportError` instead, so
callers can retry without mistaking an outage for a deleted tweet.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request

from .errors import ParseError, TransportError

#: Environment variable read by the network fetcher for API credentials.
BEARER_TOKEN_ENV = "TWITTER_BEARER_TOKEN"


class DictFetcher:
    """In-memory fetcher; ids absent from the mapping are NOT_FOUND."""

    def __init__(self, texts):
        self._texts = dict(texts)

    def resolve(self, tweet_id):
        return self._texts.get(tweet_id)


class CachedFileFetcher:
    """Offline fetcher backed by a local JSONL cache.

    Cache format: one ``{"tweet_id": ..., "text": ...}`` object per line.
    Tweets disappear over time, so a cache written once keeps runs
    reproducible.
    """

    def __init__(self, path):
        self._texts = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                if not raw.strip():
                    continue
                try:
                    record = json.loads(raw)
                    self._texts[str(record["tweet_id"])] = record["text"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ParseError(f"bad cache record: {exc}", line=lineno) from exc

    def __len__(self):
        return len(self._texts)

    def resolve(self, tweet_id):
        return self._texts.get(tweet_id)


def write_cache(texts, path):
    """Write a ``tweet_id -> text`` mapping in CachedFileFetcher format."""
    with open(path, "w", encoding="utf-8") as fh:
        for tweet_id in sorted(texts):
            fh.write(json.dumps({"tweet_id": tweet_id, "text": texts[tweet_id]},
                                sort_keys=True, separators=(",", ":"), ensure_ascii=False))
            fh.write("\n")


class TwitterApiFetcher:
    """Fetcher hitting the official tweet-lookup API over the network.

    Requires a bearer token in the ``TWITTER_BEARER_TOKEN`` environment
    variable (or passed explicitly). HTTP 404 and "not found"-class API
    errors are NOT_FOUND; connection problems, timeouts and 5xx raise
    :class:`TransportError`.
    """

    url_template = "https://api.twitter.com/2/tweets/{tweet_id}"

    def __init__(self, bearer_token=None, timeout=10.0):
        self._token = bearer_token or os.environ.get(BEARER_TOKEN_ENV)
        if not self._token:
            raise TransportError(
                f"no bearer token: set {BEARER_TOKEN_ENV} or pass bearer_token"
            )
        self._timeout = timeout

    def resolve(self, tweet_id):
        request = urllib.request.Request(
            self.url_template.format(tweet_id=tweet_id),
            headers={"Authorization": f"Bearer {self._token}"},
        )
        try:
            with urllib.request.urlopen(request, timeout=self._timeout) as response:
                payload = json.load(response)
        except urllib.error.HTTPError as exc:
            if exc.code == 404:
                return None
            # Auth/rate-limit/5xx problems are infrastructure, not deletion.
            raise TransportError(f"HTTP {exc.code} for tweet {tweet_id}") from exc
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise TransportError(f"network failure for tweet {tweet_id}: {exc}") from exc
        if "errors" in payload and "data" not in payload:
            return None
        return payload.get("data", {}).get("text")
