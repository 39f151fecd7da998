"""Shared package logger configuration."""

import logging

SINS_ALIGN_LOGGER_NAME = "SinsAlign"
logger = logging.getLogger(SINS_ALIGN_LOGGER_NAME)
logger.addHandler(logging.NullHandler())
