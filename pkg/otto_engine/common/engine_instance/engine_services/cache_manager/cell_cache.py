import logging
import os
import time
from typing import Optional

from otto_engine.common.engine_instance.local_shared_model.rule_model import CacheCommand

log = logging.getLogger("CACHE")

REDIS_URL_ENV = "OTTO_REDIS_URL"


class cell_cache:
    """Key/value store for finished sweep cells; redis when configured, in-process otherwise."""

    def __init__(self, url: Optional[str] = None):
        self._store = {}
        self._redis = None
        url = url if url is not None else os.getenv(REDIS_URL_ENV)
        if url:
            try:
                import redis
                self._redis = redis.Redis.from_url(url, decode_responses=True)
                self._redis.ping()
                log.info(f"using redis at {url}")
            except Exception as ex:
                log.warning(f"redis unavailable ({ex}); falling back to in-process store")
                self._redis = None

    @property
    def backend(self) -> str:
        return "redis" if self._redis is not None else "memory"

    def invoke_trigger(self, command: CacheCommand, args):
        key = args[0]
        value = args[1] if len(args) > 1 else None
        expiry = args[2] if len(args) > 2 and args[2] else None

        if command is CacheCommand.S_GET:
            return self._get(key, value)
        if command is CacheCommand.S_SET:
            return self._set(key, value, expiry)
        return None

    def _get(self, key: str, default_value):
        if self._redis is not None:
            stored = self._redis.get(key)
            return default_value if stored is None else stored

        item = self._store.get(key)
        if not item:
            return default_value
        stored, exp_at = item
        if exp_at and int(time.time()) > exp_at:
            del self._store[key]
            return default_value
        return stored

    def _set(self, key: str, value: str, expiry) -> bool:
        if self._redis is not None:
            self._redis.set(key, value, ex=int(expiry) if expiry else None)
            return True
        exp_at = int(time.time()) + int(expiry) if expiry else None
        self._store[key] = (value, exp_at)
        return True

    def clear(self) -> None:
        self._store.clear()


def configured_cache() -> Optional[cell_cache]:
    """A cache only when OTTO_REDIS_URL is set; one-off runs go without."""
    if not os.getenv(REDIS_URL_ENV):
        return None
    return cell_cache()
