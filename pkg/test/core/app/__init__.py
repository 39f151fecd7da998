"""Tests for the ``sinsalign.core.app`` package."""
