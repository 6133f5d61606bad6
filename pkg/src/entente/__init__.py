"""Cross-engine differential testing and test transplantation for JS engines."""

__version__ = "0.1.0"
