"""Application configuration helpers."""
