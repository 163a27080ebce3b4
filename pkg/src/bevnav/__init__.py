"""Instance-aware bird's-eye-view semantic mapping and language-driven
grid navigation."""

__version__ = "0.1.0"
