"""Laser-free trapped-ion geometric phase gates with adiabatically ramped spin-motion coupling."""
__version__ = "0.1.0"
