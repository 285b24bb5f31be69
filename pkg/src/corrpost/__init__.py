"""Analytic posterior of Pearson's correlation under a four-parameter prior class."""

__version__ = "0.1.0"
