"""Edgeworth expansions of k-sample bootstrap distributions for smooth functions of means."""

__version__ = "0.1.0"
