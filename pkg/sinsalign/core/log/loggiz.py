"""Console/file handler setup for the package logger."""

import logging
import os
from datetime import datetime

from rich.logging import RichHandler

from sinsalign.core.log.alignLogger import logger as package_logger

default_console_log_level = logging.INFO
default_console_log_format = "%(message)s"
default_file_log_level = logging.DEBUG
default_file_log_format = "%(asctime)s - [%(levelname)s] %(name)s: %(message)s"


class Loggiz:
    """Static helper that attaches console and file handlers to the package logger."""

    @staticmethod
    def _reset_handlers(target_logger: logging.Logger) -> None:
        """Close and remove every non-null handler from a logger."""

        for handler in list(target_logger.handlers):
            if isinstance(handler, logging.NullHandler):
                continue
            handler.flush()
            handler.close()
            target_logger.removeHandler(handler)

    @staticmethod
    def setup(
        app_name: str = "align",
        setup_console: bool = True,
        setup_file: bool = False,
        console_level: int = default_console_log_level,
        file_level: int = default_file_log_level,
        file_log_base_path: str = "",
        file_log_folder_name: str = "logs",
        target_logger: logging.Logger = package_logger,
    ) -> str | None:
        """Configure console and/or file logging handlers and return the log file path, if any.

        :param app_name: Prefix of the timestamped log file name.
        :param setup_console: Attach a rich console handler.
        :param setup_file: Attach a file handler under ``file_log_base_path/file_log_folder_name``.
        """
        Loggiz._reset_handlers(target_logger)
        target_logger.setLevel(min(console_level, file_level) if setup_file else console_level)

        if setup_console:
            console_handler = RichHandler(show_path=False, markup=False)
            console_handler.setLevel(console_level)
            console_handler.setFormatter(logging.Formatter(default_console_log_format))
            target_logger.addHandler(console_handler)

        if setup_file:
            log_folder_dir = os.path.join(file_log_base_path, file_log_folder_name)
            os.makedirs(log_folder_dir, exist_ok=True)
            file_full_path = os.path.join(log_folder_dir, Loggiz.create_timestamp_log_file_name(app_name))
            file_handler = logging.FileHandler(file_full_path, encoding="utf-8")
            file_handler.setLevel(file_level)
            file_handler.setFormatter(logging.Formatter(default_file_log_format))
            target_logger.addHandler(file_handler)
            return file_full_path
        return None

    @staticmethod
    def teardown(target_logger: logging.Logger = package_logger) -> None:
        """Remove the handlers installed by :meth:`setup`."""

        Loggiz._reset_handlers(target_logger)

    @staticmethod
    def create_timestamp_log_file_name(app_name: str) -> str:
        """Create a timestamped log file name for an application."""

        timestamp = datetime.now().strftime("%Y-%m-%d_%H-%M-%S")
        return f"{app_name}_{timestamp}.log"
