"""Concern mining over tenant forum posts."""
__version__ = "0.1.0"
