"""Configuration-driven benchmark of the alignment methods."""
