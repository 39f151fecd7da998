"""Tests for the ``sinsalign.core.handler`` package."""
