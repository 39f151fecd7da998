"""Shared infrastructure: logging, configuration files, results, progress and units."""
