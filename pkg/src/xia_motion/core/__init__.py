from .config import settings, Settings
from .log import configure_logging

__all__ = ["settings", "Settings", "configure_logging"]
