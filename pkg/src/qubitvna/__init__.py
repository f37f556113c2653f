"""qubitvna: a driven two-level system as its own control-line analyzer.

Simulates the two-level dynamics, the tomography experiment, and the full
estimation pipeline that recovers the complex transfer function of the
longitudinal control line, then validates the recovery against known
ground-truth line models.
"""
__version__ = "0.1.0"

from .backend import active_backend

__all__ = ["active_backend", "__version__"]
