"""Two- and three-body binding thresholds of 2D bosons and Borromean windows."""

__version__ = "0.1.0"
