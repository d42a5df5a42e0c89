"""aeronav: deterministic navigation and multi-agent coordination engine."""

__version__ = "0.1.0"
