"""maxnlinv: forward simulation and coefficient recovery for nonlinear
time-harmonic electromagnetic systems on the unit cube."""

__version__ = "0.1.0"
