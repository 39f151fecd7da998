"""Progress tracking handlers."""
