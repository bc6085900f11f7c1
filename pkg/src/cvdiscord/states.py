"""The two hybrid channel states.

Both channels are ``N/sqrt(2) (a^dag +- b^dag)|alpha>|alpha>`` with
``alpha = alpha0/sqrt(2)``: the minus sign gives the displaced-photon channel
(DPC), the plus sign the photon-added channel (PAC).

Using ``a^dag|alpha> = D(alpha)|1> + alpha^*|alpha>`` the same ket has an
exact expansion on the orthonormal displaced qubit ``{D(alpha)|0>, D(alpha)|1>}``
of each mode, which is what ``build_state_displaced`` returns.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    DensityMatrix,
    HilbertSpec,
    Ket,
    check_truncation,
    coherent_vector,
    displaced_number_vector,
    lowering_matrix,
    truncation_dim,
)


class ChannelKind(enum.Enum):
    DPC = "dpc"
    PAC = "pac"

    @property
    def sign(self) -> int:
        return -1 if self is ChannelKind.DPC else 1

    @classmethod
    def parse(cls, value) -> "ChannelKind":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def _check_alpha0(alpha0) -> float:
    if isinstance(alpha0, complex) or np.iscomplexobj(alpha0):
        raise TypeError("alpha0 must be a nonnegative real number")
    a = float(alpha0)
    if not math.isfinite(a) or a < 0:
        raise ValueError(f"alpha0 must be a nonnegative real number, got {alpha0!r}")
    return a


@dataclass(frozen=True)
class ChannelParams:
    alpha0: float
    eta: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha0", _check_alpha0(self.alpha0))
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.sigma >= 0.0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")

    @property
    def alpha(self) -> float:
        return self.alpha0 / math.sqrt(2.0)

    @property
    def n0(self) -> float:
        return self.alpha0**2


def normalization(kind, alpha0: float) -> float:
    """``N``: 1 for DPC, ``1/sqrt(1 + alpha0^2)`` for PAC."""
    kind = ChannelKind.parse(kind)
    if kind is ChannelKind.DPC:
        return 1.0
    return 1.0 / math.sqrt(1.0 + alpha0**2)


def mode_amplitude(alpha0: float) -> float:
    return _check_alpha0(alpha0) / math.sqrt(2.0)


def default_space(alpha0: float, modes: int = 2) -> HilbertSpec:
    d = truncation_dim(mode_amplitude(alpha0))
    return HilbertSpec((d,) * modes)


def build_state_fock(kind, alpha0: float, space: HilbertSpec | None = None) -> Ket:
    """Two-mode Fock-basis ket ``N/sqrt(2) (a^dag +- b^dag)|alpha, alpha>``."""
    kind = ChannelKind.parse(kind)
    alpha0 = _check_alpha0(alpha0)
    alpha = alpha0 / math.sqrt(2.0)
    space = space or default_space(alpha0)
    if space.n_modes != 2:
        raise ValueError("channel states live on two modes")
    da, db = space.mode_dims
    check_truncation(alpha, da)
    check_truncation(alpha, db)
    # one extra level so the raised top component is not clipped
    ca = coherent_vector(alpha, da + 1)
    cb = coherent_vector(alpha, db + 1)
    ra = (lowering_matrix(da + 1).T @ ca)[:da]
    rb = (lowering_matrix(db + 1).T @ cb)[:db]
    psi = np.kron(ra, cb[:db]) + kind.sign * np.kron(ca[:da], rb)
    psi *= normalization(kind, alpha0) / math.sqrt(2.0)
    return Ket(space, psi).normalize()


def build_state_displaced(kind, alpha0: float) -> np.ndarray:
    """Coefficients on ``|00>, |01>, |10>, |11>`` of the displaced qubit pair.

    Index 0 of a mode is ``D(alpha)|0>`` and index 1 is ``D(alpha)|1>``; mode A
    is the more significant index.
    """
    kind = ChannelKind.parse(kind)
    alpha0 = _check_alpha0(alpha0)
    alpha = alpha0 / math.sqrt(2.0)
    pref = normalization(kind, alpha0) / math.sqrt(2.0)
    c = np.zeros(4, dtype=complex)
    c[0] = pref * (np.conj(alpha) + kind.sign * np.conj(alpha))
    c[1] = pref * kind.sign
    c[2] = pref
    return c


def pure_displaced_density(kind, alpha0: float) -> DensityMatrix:
    """Pure state as a 4x4 density matrix in the displaced-qubit basis."""
    c = build_state_displaced(kind, alpha0)
    alpha = mode_amplitude(alpha0)
    return DensityMatrix(HilbertSpec((2, 2)), np.outer(c, c.conj()), (alpha, alpha))


def displaced_basis(alpha: complex, dim: int, levels: int = 2) -> np.ndarray:
    """Columns are the Fock amplitudes of ``D(alpha)|n>``, n < levels."""
    return np.stack([displaced_number_vector(alpha, n, dim) for n in range(levels)], axis=1)


def gram_matrix(alpha0: float, dim: int | None = None) -> np.ndarray:
    """Overlaps of ``{|alpha>, D(alpha)|1>}`` computed in a truncated Fock space."""
    alpha = mode_amplitude(alpha0)
    dim = dim or truncation_dim(alpha)
    v = displaced_basis(alpha, dim)
    return v.conj().T @ v


def embed_displaced(rho: DensityMatrix, space: HilbertSpec | None = None) -> DensityMatrix:
    """Map a displaced-basis density matrix into the plain Fock basis of ``space``."""
    if rho.displacements is None:
        raise ValueError("density matrix is already in the Fock basis")
    levels = rho.space.mode_dims
    if space is None:
        space = HilbertSpec(tuple(truncation_dim(d) for d in rho.displacements))
    if space.n_modes != rho.space.n_modes:
        raise ValueError("mode count mismatch")
    v = None
    for disp, lv, dim in zip(rho.displacements, levels, space.mode_dims):
        check_truncation(disp, dim)
        b = displaced_basis(disp, dim, lv)
        v = b if v is None else np.kron(v, b)
    mat = v @ rho.matrix @ v.conj().T
    return DensityMatrix(space, 0.5 * (mat + mat.conj().T), None, dict(rho.meta))


def ket_overlap(a: Ket, b: Ket) -> float:
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
