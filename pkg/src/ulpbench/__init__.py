"""ulpbench: worst-case ULP error measurement for elementary math functions."""

__version__ = "0.1.0"
