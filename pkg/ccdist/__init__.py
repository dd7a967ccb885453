"""Central configurations of the n-body problem in mutual-distance coordinates."""

__version__ = "1.0.0"
