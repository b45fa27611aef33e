"""centerbox: fixed-size center-point detection toolkit."""

__version__ = "0.1.0"
