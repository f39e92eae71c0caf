"""Utility helpers."""

from .storage import dumps, read_json, write_json

__all__ = ["dumps", "read_json", "write_json"]
