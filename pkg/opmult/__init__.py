"""
opmult: a numerical laboratory for weighted operator-valued Fourier multipliers
"""
__version__ = "0.3.0"
