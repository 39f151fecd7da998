"""Data conversion helpers."""
