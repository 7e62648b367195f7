"""Adaptive backstepping for incommensurate fractional-order strict-feedback
plants with dead-zone and saturation input nonlinearities."""

from . import fraccalc, foabc, nonsmooth, plant

__version__ = "0.1.0"
__all__ = ["fraccalc", "foabc", "nonsmooth", "plant"]
