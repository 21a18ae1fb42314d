"""Gait velocity estimation from in-home motion-sensor transition times."""
__version__ = "0.1.0"
