"""Monte Carlo simulator of a multi-cell uplink with single- and two-hop D2D."""

__version__ = "0.1.0"
