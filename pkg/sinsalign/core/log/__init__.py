"""Logging utilities for the core package."""
