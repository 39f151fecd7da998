"""Tests for the ``sinsalign.core.domain`` package."""
