"""Configuration management module"""

from .config_manager import ConfigManager, EvalSettings, parse_assignment, parse_key_value_file, parse_value

__all__ = ["ConfigManager", "EvalSettings", "parse_assignment", "parse_key_value_file", "parse_value"]
