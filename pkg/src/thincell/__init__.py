"""Density-matrix simulator for 85Rb ladder spectroscopy in ultrathin vapor cells."""

__version__ = "0.1.0"
