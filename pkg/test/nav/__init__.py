"""Tests for the ``sinsalign.nav`` package."""
