"""TDMA capacity simulator for common-power wireless networks."""

__version__ = "0.1.0"
