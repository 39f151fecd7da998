"""Tests for the ``sinsalign.bench`` package."""
