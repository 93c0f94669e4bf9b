"""Forced-speed reaction-diffusion: variational waves, moving-frame evolution and persistence thresholds."""

__version__ = '1.0.0'
