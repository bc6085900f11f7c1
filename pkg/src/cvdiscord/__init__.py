"""Correlations of hybrid two-mode optical channels under scattering and phase noise.

Modules: ``fock`` (truncated Fock-space algebra), ``states`` (the two channel
states), ``channels`` (scattering and phase noise), ``homodyne`` (quadrature
statistics, MID/AMID), ``discord`` (quantum discord and closed forms) and
``cli``.
"""

__version__ = "0.1.0"

from .channels import noisy_state, phase_average, scattering_mixture
from .discord import channel_discord, discord_dp_closed, discord_numeric
from .errors import ConvergenceError, NumericalIntegrityError, TruncationError
from .fock import DensityMatrix, HilbertSpec, Ket
from .homodyne import amid, jqp_closed, jqp_numeric, mid, projected_entropies
from .states import ChannelKind, ChannelParams, build_state_displaced, build_state_fock

__all__ = [
    "ChannelKind",
    "ChannelParams",
    "ConvergenceError",
    "DensityMatrix",
    "HilbertSpec",
    "Ket",
    "NumericalIntegrityError",
    "TruncationError",
    "amid",
    "build_state_displaced",
    "build_state_fock",
    "channel_discord",
    "discord_dp_closed",
    "discord_numeric",
    "jqp_closed",
    "jqp_numeric",
    "mid",
    "noisy_state",
    "phase_average",
    "projected_entropies",
    "scattering_mixture",
]
