# cowkit/deps.py
from functools import lru_cache

from .core.config import Settings


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Process-wide settings, loaded once."""
    return Settings.load()


def reload_settings() -> Settings:
    """Drop the cached settings and read them again (after env or file changes)."""
    get_settings.cache_clear()
    return get_settings()


__all__ = ["get_settings", "reload_settings"]
