"""Scattering matrix and boundary operators for a Schrodinger operator with
a delta interaction supported on a deformed plane."""

__version__ = "0.1.0"
