"""Test suite of the sinsalign package."""
