"""Spectral mixing toolkit for divergence-free transport noise."""

from ._stmix import *  # noqa: F401,F403
from ._stmix import __doc__  # noqa: F401
