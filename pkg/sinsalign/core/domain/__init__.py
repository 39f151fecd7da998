"""Generic domain containers."""
