"""Tests for the ``sinsalign.nav.fgo`` package."""
