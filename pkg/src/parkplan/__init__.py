"""Two-stage siting, sizing and scheduling of PHEV parking lots in radial industrial microgrids."""

__version__ = "0.1.0"
