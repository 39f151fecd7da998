"""Tests for the ``sinsalign.core.data`` package."""
