"""Self-similar CW-complexes: builders, operators, traces, invariants."""

from . import builders, complexes, invariants, operators, traces  # noqa: F401

__version__ = "0.1.0"
