"""Certified lower bounds on the noise robustness of multipartite entanglement structures.

A target state is mixed with a noise endpoint, ``rho(t) = t rho + (1 - t) sigma``.
For a structure class (full separability, k-partitionability, h-producibility,
squareability, ...) the package finds a large ``t`` together with an explicit
decomposition of ``rho(t)`` into product states allowed by that class, and
checks the decomposition independently.
"""

from .certify import Certificate, CertifyConfig, VerificationReport, certify, verify
from .ensemble import GdConfig
from .linalg import DensityMatrix, LayoutError, ValidationError
from .partitions import Partition, StructureFamily, StructureSpec, family
from .sdp import CertificationError
from .states import NoiseModel, load_state, make_state, mix, save_state

__version__ = "0.1.0"

__all__ = [
    "Certificate", "CertificationError", "CertifyConfig", "DensityMatrix", "GdConfig",
    "LayoutError", "NoiseModel", "Partition", "StructureFamily", "StructureSpec",
    "ValidationError", "VerificationReport", "certify", "family", "load_state",
    "make_state", "mix", "save_state", "verify",
]
