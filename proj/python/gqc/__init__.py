"""Python interface to the gqc library (games, comonads, decompositions,
logic). All functionality lives in the compiled extension module."""

from ._gqc import *  # noqa: F401,F403
