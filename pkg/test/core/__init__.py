"""Tests for the ``sinsalign.core`` package."""
