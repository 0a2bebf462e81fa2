"""
Process Configuration Settings

This module defines the process-level settings for the strip spectrum toolkit.
It loads environment variables (optionally from a .env file) and provides
default values for every knob that does not affect numerical results.

Environment Variables:
    STRIP_DEBUG: Enable debug logging (true/false)
    STRIP_LOG_LEVEL: Logging level name (default: WARNING, INFO in debug mode)
    STRIP_OUTPUT_DIR: Default output directory for run artifacts (default: runs)
    STRIP_MAX_CHECK_TIME: Timeout in seconds for one verification check (default: 900)

Features:
    - Environment variable loading via python-dotenv
    - Configuration validation
    - Default values for all settings

Note:
    Numerical inputs (geometry, measure, potential, mesh controls, seeds) live
    only in the run configuration file so that a run is reproducible from that
    file alone.
"""

import logging
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

class Settings:
    """
    Process settings configuration class.

    Loads configuration from environment variables and provides validation.
    All settings have sensible defaults and can be overridden via environment variables.
    """

    def __init__(self):
        # Logging
        self.debug: bool = os.getenv("STRIP_DEBUG", "false").lower() == "true"
        default_level = "INFO" if self.debug else "WARNING"
        self.log_level: str = os.getenv("STRIP_LOG_LEVEL", default_level).upper()

        # Run artifacts
        self.output_dir: str = os.getenv("STRIP_OUTPUT_DIR", "runs")

        # Verification battery
        self.max_check_time: float = float(os.getenv("STRIP_MAX_CHECK_TIME", "900"))

        # Report schema version written into every JSON artifact
        self.schema_version: str = "1.0"

    def validate(self) -> None:
        """
        Validate that settings are usable.

        Raises:
            ValueError: If the log level is unknown or the check timeout is not positive
        """
        # logging.getLevelNamesMapping is Python 3.11+; it returns a copy of _nameToLevel
        level_names = getattr(logging, "getLevelNamesMapping", lambda: dict(logging._nameToLevel))()
        if self.log_level not in level_names:
            raise ValueError(f"STRIP_LOG_LEVEL '{self.log_level}' is not a logging level")
        if not self.max_check_time > 0:
            raise ValueError("STRIP_MAX_CHECK_TIME must be positive")

# Global settings instance - used throughout the package
settings = Settings()
