"""Telescoping (boundary-inward shell) representations of lattice Gauss-Markov
random fields: exact sampling, Kalman/RTS estimation, and checks of the
continuous-index formulas and homotopy surfaces."""

from .errors import EnvelopeError, ModelError, NotPositiveDefiniteError
from .estimation import ObservationModel, denoise_image, direct_mmse, estimate
from .factor import TelescopingModel, factorize, factorize_oracle
from .lattice import LatticeSpec, NeighborhoodCoefficients, build_precision, joint_covariance
from .sampling import sample_field, sample_fields
from .shells import permute_system, shells

__version__ = "0.1.0"


def telescope(system):
    """Shells, permuted blocks and chain parameters of a precision system.

    Returns ``(dec, bt, model)``.
    """
    dec = shells(system.spec)
    bt = permute_system(system, dec)
    return dec, bt, factorize(bt, system.boundary_cov)
