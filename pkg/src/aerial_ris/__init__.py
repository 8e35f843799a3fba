"""Max-min rate optimisation for a RIS carried by an omnidirectional UAV."""

__version__ = "0.1.0"
