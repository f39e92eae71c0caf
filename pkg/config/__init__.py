"""Configuration package for wellsep."""

from .settings import Settings, settings

__all__ = ["Settings", "settings"]
