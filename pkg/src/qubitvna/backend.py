"""Integrator backend selection.

The compiled extension is preferred when importable; the pure-Python twin
is the fallback. Set ``QUBITVNA_PURE_PYTHON=1`` to force the fallback (used
by the cross-implementation tests and the benchmark).
"""
import os

from . import _bloch_pure

IntegrationError = _bloch_pure.IntegrationError

if os.environ.get("QUBITVNA_PURE_PYTHON", "") == "1":
    _impl = _bloch_pure
    _BACKEND = "pure"
else:
    try:
        from . import _bloch_core as _impl

        _BACKEND = "compiled"
    except ImportError:
        _impl = _bloch_pure
        _BACKEND = "pure"


def active_backend():
    """Name of the integrator implementation in use: 'compiled' or 'pure'."""
    return _BACKEND


def bloch_evolve(*args, **kwargs):
    """Dispatch to the active implementation (see ``_bloch_pure`` for docs)."""
    return _impl.bloch_evolve(*args, **kwargs)
