"""Secure untrusted-relay network toolkit.

Simulation and optimization of secrecy rates for amplify-and-forward
relay networks with hardware impairments: closed-form rate evaluation,
joint power-allocation/beamforming via successive convex inner
approximation with a feasibility-search initializer, and a trained MLP
surrogate that replaces the iterative solver at inference time.
"""

from .config import (
    ChannelRealization,
    ImpairmentProfile,
    NetworkConfig,
    default_config,
    derive_rng,
    generate_realization,
    load_config,
)
from .distortion import compute_tau, phi_matrices, project
from .nullspace import build_basis, lift
from .rates import evaluate_point, secrecy_rate

__version__ = "0.1.0"
