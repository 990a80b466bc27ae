"""Microwave-crosstalk calibration simulator (python bindings)."""

from ._xtalksim import *  # noqa: F401,F403
from ._xtalksim import __version__  # noqa: F401
