"""Helpers for reading TOML configuration files."""

from pathlib import Path


class TomlConfigFile:
    """Read a TOML configuration document from disk."""

    def __init__(self, toml_path: Path):
        """Store and validate the path to the TOML file."""

        self.toml_path = Path(toml_path)
        if not self.toml_path.exists():
            raise FileNotFoundError(f"File {self.toml_path} does not exist.")
        if not self.toml_path.is_file():
            raise IsADirectoryError(f"Path {self.toml_path} is not a file.")

    def read_text(self) -> str:
        """Return the raw document text."""

        return self.toml_path.read_text(encoding="utf-8")

