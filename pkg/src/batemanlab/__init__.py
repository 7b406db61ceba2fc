"""Bateman dual oscillators, information-loss constraints and emergent spectra."""

from batemanlab.core import (
    BatemanParams,
    Chart,
    CompositeParams,
    PhaseStateHyp,
    PhaseStateRot,
    PhaseStateXY,
    from_hyperbolic,
    from_rotated,
    to_hyperbolic,
    to_rotated,
)

__version__ = "0.1.0"
