"""Tests for the ``sinsalign.core.log`` package."""
