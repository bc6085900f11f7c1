"""Quantum discord from B to A and the quadrature-variance relations.

Bob measures with a displaced qubit POVM ``D(alpha)|i_M><i_M|D(alpha)^dag``
where ``|0_M> = cos(t/2)|0> + e^{i p} sin(t/2)|1>``. Outside the displaced
qubit span the POVM is completed by the complement projector; for these
channels Bob's reduced state never leaves that span, so the complement weight
only certifies the truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .channels import noisy_state, scattering_mixture
from .errors import ConvergenceError, NumericalIntegrityError, TruncationError
from .fock import (
    DensityMatrix,
    HilbertSpec,
    displaced_number_vector,
    entropy_from_spectrum,
    partial_trace,
    von_neumann_entropy,
)
from .optimize import grid_then_simplex
from .states import ChannelKind, mode_amplitude

LEAKAGE_TOL = 1e-6
CLAMP_TOL = 1e-8
ENDPOINT_TOL = 1e-6
PROB_CUTOFF = 1e-14
# minima closer than this are treated as degenerate when picking the reported angles
TIE_TOL = 1e-9
# angles this close to a pole or to a multiple of pi are snapped; near the poles
# the simplex only pins phi to about xatol/sin(theta)
ANGLE_TOL = 1e-5

# least-squares c_ij of alpha0^i eta^j for the photon-added channel, valid for
# alpha0 in [0, 10] and eta in [0.5, 1]
PAC_FIT_COEFFS = {
    (2, 3): 0.0317084,
    (1, 3): -0.398278,
    (3, 2): -0.002986,
    (2, 2): -0.0186853,
    (1, 2): 0.617212,
    (2, 1): 0.0557978,
    (1, 1): -0.7036,
    (4, 0): 0.000865144,
    (3, 0): -0.0192576,
    (2, 0): 0.133857,
    (1, 0): -0.280623,
    (0, 4): 0.519166,
    (0, 3): -0.466403,
    (0, 2): -0.308003,
    (0, 1): 1.113,
    (0, 0): 0.140178,
}


@dataclass(frozen=True)
class QubitPOVM:
    theta: float
    phi: float
    alpha: complex = 0.0

    def vectors(self) -> np.ndarray:
        """Rows are ``|0_M>`` and ``|1_M>`` on the qubit basis."""
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        e = np.exp(1j * self.phi)
        return np.array([[c, e * s], [s, -e * c]], dtype=complex)

    def qubit_elements(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.vectors()
        return np.outer(v[0], v[0].conj()), np.outer(v[1], v[1].conj())


def displaced_povm(theta: float, phi: float, alpha: complex, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """The two POVM elements as ``dim x dim`` Fock-basis matrices."""
    basis = np.stack([displaced_number_vector(alpha, n, dim) for n in (0, 1)], axis=1)
    out = []
    for v in QubitPOVM(theta, phi, alpha).vectors():
        w = basis @ v
        out.append(np.outer(w, w.conj()))
    return out[0], out[1]


def canonical_angles(theta: float, phi: float) -> tuple[float, float]:
    """Representative of the POVM with theta in [0, pi] and phi in [0, pi).

    ``(theta, phi)`` and ``(pi - theta, phi + pi)`` give the same two elements
    (relabelled), so phi can always be folded into [0, pi).
    """
    theta = math.remainder(theta, 2 * math.pi)
    if theta < 0:
        theta, phi = -theta, phi + math.pi
    # optimizer jitter around a multiple of pi is snapped onto it
    if abs(math.remainder(phi, math.pi)) < ANGLE_TOL:
        phi = math.pi * round(phi / math.pi)
    phi = phi % (2 * math.pi)
    if phi >= math.pi:
        theta, phi = math.pi - theta, phi - math.pi
    if min(theta, math.pi - theta) < ANGLE_TOL:
        phi = 0.0
    return theta, phi


class _BobBlocks:
    """``R_jk = <e_j|_B rho |e_k>_B`` for Bob's displaced qubit vectors ``e_j``."""

    def __init__(self, rho: DensityMatrix, alpha: complex):
        if rho.space.n_modes != 2:
            raise ValueError("discord needs a two-mode state")
        da, db = rho.space.mode_dims
        if rho.displacements is not None and not rho.in_fock_basis:
            if abs(rho.displacements[1] - alpha) > 1e-12:
                raise ValueError("Bob's frame displacement must equal the POVM displacement")
            e = np.eye(db, 2, dtype=complex)
        else:
            e = np.stack([displaced_number_vector(alpha, n, db) for n in (0, 1)], axis=1)
        t = rho.matrix.reshape(da, db, da, db)
        # R[j, k] = sum_{b, b'} conj(e[b, j]) rho[a, b, a', b'] e[b', k]
        self.blocks = np.einsum("bj,abcd,dk->jkac", e.conj(), t, e)
        self.rho_a = partial_trace(rho, [0]).matrix
        self.leakage = float(np.real(np.trace(self.rho_a) - np.trace(self.blocks[0, 0]) - np.trace(self.blocks[1, 1])))
        if self.leakage > LEAKAGE_TOL:
            raise TruncationError(f"Bob's state leaks {self.leakage:.3g} outside the displaced qubit span")

    def branches(self, theta: float, phi: float):
        R = self.blocks
        out = []
        for v in QubitPOVM(theta, phi).vectors():
            # POVM vector m = sum_j v_j e_j, so <m|rho|m> = sum_jk conj(v_j) v_k R_jk
            sub = np.einsum("j,k,jkac->ac", v.conj(), v, R)
            out.append(sub)
        if self.leakage > PROB_CUTOFF:
            out.append(self.rho_a - R[0, 0] - R[1, 1])
        return out

    def conditional_entropy(self, theta: float, phi: float) -> float:
        total = 0.0
        for sub in self.branches(theta, phi):
            sub = 0.5 * (sub + sub.conj().T)
            p = float(np.real(np.trace(sub)))
            if p < PROB_CUTOFF:
                continue
            total += p * entropy_from_spectrum(np.linalg.eigvalsh(sub / p))
        return total


def _bob_alpha(rho: DensityMatrix, alpha) -> complex:
    if alpha is not None:
        return complex(alpha)
    if rho.displacements is None:
        raise ValueError("alpha is required for Fock-basis states")
    return rho.displacements[1]


def conditional_entropy(rho: DensityMatrix, povm: QubitPOVM) -> float:
    """``sum_i p_i S(rho_A|i)`` after Bob's displaced qubit measurement (bits)."""
    return _BobBlocks(rho, povm.alpha).conditional_entropy(povm.theta, povm.phi)


def branch_probabilities(rho: DensityMatrix, povm: QubitPOVM) -> list[float]:
    blocks = _BobBlocks(rho, povm.alpha)
    return [float(np.real(np.trace(b))) for b in blocks.branches(povm.theta, povm.phi)]


@dataclass(frozen=True)
class DiscordResult:
    value: float
    theta: float
    phi: float
    s_a: float
    s_b: float
    s_ab: float
    conditional_entropy: float
    converged: bool
    evaluations: int
    leakage: float
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def mutual_information(self) -> float:
        return self.s_a + self.s_b - self.s_ab

    @property
    def classical_correlation(self) -> float:
        return self.s_a - self.conditional_entropy


def _clamp(value: float) -> float:
    if value < -CLAMP_TOL:
        raise NumericalIntegrityError(f"discord {value:.3g} is negative beyond tolerance")
    return max(value, 0.0)


def discord_numeric(
    rho: DensityMatrix,
    alpha: complex | None = None,
    grid: int = 16,
    raise_on_stall: bool = True,
) -> DiscordResult:
    """Discord from B to A, minimizing over the displaced qubit POVM.

    ``rho`` is either a displaced-basis state (Bob's displacement is taken
    from its frame) or a two-mode Fock-basis state with ``alpha`` given.
    """
    alpha = _bob_alpha(rho, alpha)
    blocks = _BobBlocks(rho, alpha)
    s_a = von_neumann_entropy(DensityMatrix(HilbertSpec((rho.space.mode_dims[0],)), blocks.rho_a))
    s_b = von_neumann_entropy(partial_trace(rho, [1]))
    s_ab = von_neumann_entropy(rho)
    thetas = np.linspace(0.0, math.pi, grid)
    phis = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
    best = grid_then_simplex(blocks.conditional_entropy, thetas, phis)
    if not best.converged and raise_on_stall:
        raise ConvergenceError(f"discord optimizer stalled (spread {best.spread:.3g})")
    h_min = best.value
    theta, phi = canonical_angles(*best.x)
    evaluations = best.evaluations
    # The minimum is often a whole curve of measurement directions. Report the
    # equatorial member when there is one, with the smallest such phi.
    eq_phi, eq_val, n_eq = _equatorial_minimum(blocks.conditional_entropy, grid)
    evaluations += n_eq
    if eq_val <= h_min + TIE_TOL:
        theta, phi = canonical_angles(math.pi / 2, eq_phi)
        h_min = min(h_min, eq_val)
    value = _clamp(s_b - s_ab + h_min)
    return DiscordResult(
        value, theta, phi, s_a, s_b, s_ab, h_min, best.converged, evaluations, blocks.leakage
    )


def _equatorial_minimum(func, grid: int) -> tuple[float, float, int]:
    """Minimize ``func(pi/2, phi)`` over phi in [0, pi); ties go to the smaller phi."""
    # (pi/2, phi) and (pi/2, phi + pi) are the same measurement up to relabeling
    phis = np.linspace(0.0, math.pi, 4 * grid, endpoint=False)
    vals = np.array([func(math.pi / 2, p) for p in phis])
    i = int(np.flatnonzero(vals <= vals.min() + TIE_TOL)[0])
    h = phis[1] - phis[0]
    res = minimize_scalar(
        lambda p: func(math.pi / 2, p), bounds=(phis[i] - h, phis[i] + h),
        method="bounded", options={"xatol": 1e-10},
    )
    count = len(phis) + int(res.nfev)
    if res.fun < vals[i] - TIE_TOL:
        return float(res.x) % math.pi, float(res.fun), count
    return float(phis[i]), float(vals[i]), count


def phi_spread(rho: DensityMatrix, theta: float, alpha: complex | None = None, samples: int = 16) -> float:
    """Range of the conditional entropy over phi at fixed theta."""
    blocks = _BobBlocks(rho, _bob_alpha(rho, alpha))
    vals = [blocks.conditional_entropy(theta, p) for p in np.linspace(0, 2 * math.pi, samples, endpoint=False)]
    return float(max(vals) - min(vals))


def channel_discord(
    kind,
    alpha0: float,
    eta: float,
    sigma: float = 0.0,
    space: HilbertSpec | None = None,
    raise_on_stall: bool = True,
) -> DiscordResult:
    """Discord of a noisy channel; exact 4x4 route at sigma=0, Fock route otherwise."""
    if sigma == 0.0:
        res = discord_numeric(scattering_mixture(kind, alpha0, eta), raise_on_stall=raise_on_stall)
        # exact two-level frame per mode, nothing truncated
        meta = {"truncation_dim": 2, "phase_nodes": 0, "phase_change": 0.0, "phase_converged": True}
        return DiscordResult(**{**res.__dict__, "meta": meta})
    rho = noisy_state(kind, alpha0, eta, sigma, space)
    res = discord_numeric(rho, mode_amplitude(alpha0), raise_on_stall=raise_on_stall)
    meta = {k: rho.meta[k] for k in ("phase_nodes", "phase_change", "phase_converged") if k in rho.meta}
    meta["truncation_dim"] = rho.space.mode_dims[0]
    return DiscordResult(**{**res.__dict__, "meta": meta})


def _binary_entropy_pair(x: float) -> float:
    """Entropy (bits) of the spectrum {(1+x)/2, (1-x)/2}."""
    return entropy_from_spectrum([(1 + x) / 2, (1 - x) / 2])


def _discord_dp_entropic(eta: float) -> float:
    # S_B - S_AB + S_cond with S_B = 1 bit and branch spectra (1 +- sqrt(1-eta+eta^2))/2
    return 1.0 - _binary_entropy_pair(eta) + _binary_entropy_pair(math.sqrt(1 - eta + eta * eta))


def discord_dp_closed(eta: float) -> float:
    """Closed-form scattering-only discord of the displaced-photon channel (bits)."""
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if eta < ENDPOINT_TOL or 1.0 - eta < ENDPOINT_TOL:
        # the log/atanh divergences cancel pairwise; the entropic form is finite
        return _discord_dp_entropic(eta)
    r = math.sqrt((eta - 1.0) * eta + 1.0)
    num = math.log(4.0 / eta + 4.0) + 2.0 * eta * math.atanh(eta) - 2.0 * r * math.atanh(r)
    return num / math.log(4.0)


def discord_dp_from_variance(var: float) -> float:
    """Displaced-photon discord written through Alice's quadrature variance."""
    var = float(var)
    if not 0.5 <= var <= 1.0:
        raise ValueError(f"variance must lie in [1/2, 1], got {var}")
    if var - 0.5 < ENDPOINT_TOL / 2 or 1.0 - var < ENDPOINT_TOL / 2:
        return _discord_dp_entropic(2.0 * var - 1.0)
    d1 = math.sqrt(4 * var * var - 6 * var + 3)
    d2 = 2 - 4 * var
    num = math.log(8 * var / (2 * var - 1)) - 2 * d1 * math.atanh(d1) + d2 * math.atanh(d2 / 2)
    return num / math.log(4.0)


def discord_pa_fit(alpha0: float, eta: float) -> float:
    """Published polynomial approximation of the photon-added discord.

    An approximation only; the exact value comes from ``channel_discord``.
    """
    if not (0.0 <= alpha0 <= 10.0 and 0.5 <= eta <= 1.0):
        raise ValueError("fit is valid only for alpha0 in [0, 10] and eta in [0.5, 1]")
    return float(sum(c * alpha0**i * eta**j for (i, j), c in PAC_FIT_COEFFS.items()))


def qvar_dp(lam: float, alpha0: float, eta: float, sigma: float) -> float:
    """Alice's quadrature variance for the displaced-photon channel."""
    s2 = sigma * sigma
    return 0.5 * math.exp(-2 * s2) * (
        alpha0**2 * eta * math.expm1(s2) * (math.exp(s2) - math.cos(2 * lam)) + (eta + 1) * math.exp(2 * s2)
    )


def qvar_pa(lam: float, alpha0: float, eta: float, sigma: float) -> float:
    """Alice's quadrature variance for the photon-added channel."""
    s2 = sigma * sigma
    a2 = alpha0**2
    w = eta * math.exp(-2 * s2) * (
        -2 * (alpha0**3 + 2 * alpha0) ** 2 * math.exp(s2) * math.cos(lam) ** 2
        + (a2 * a2 + 4 * a2 + 3) * a2 * math.cos(2 * lam)
        + (a2**3 + 2 * a2 * a2 - 1) * math.exp(2 * s2)
    )
    return 0.5 * (2 * eta + w / (a2 + 1) ** 2 + 1)


def qvar(kind, lam: float, alpha0: float, eta: float, sigma: float) -> float:
    kind = ChannelKind.parse(kind)
    f = qvar_dp if kind is ChannelKind.DPC else qvar_pa
    return f(lam, alpha0, eta, sigma)


def dpc_spectrum(eta: float) -> np.ndarray:
    """Nonzero-padded spectrum of the scattered displaced-photon state, descending."""
    return np.array([(1 + eta) / 2, (1 - eta) / 2, 0.0, 0.0])


def pac_spectrum(alpha0: float, eta: float) -> np.ndarray:
    a2 = alpha0**2
    r = math.sqrt(a2 * a2 + 2 * a2 + eta * eta)
    return np.array([(a2 + 1 + r) / (2 * (a2 + 1)), (a2 + 1 - r) / (2 * (a2 + 1)), 0.0, 0.0])


def pac_branch_spectrum(alpha0: float, eta: float) -> np.ndarray:
    """Spectrum of each of Alice's conditional states at the optimal photon-added POVM."""
    a2 = alpha0**2
    r = math.sqrt(a2 * a2 + 2 * a2 + (eta - 1) * eta + 1) / (a2 + 1)
    return np.array([0.5 * (1 + r), 0.5 * (1 - r)])


@dataclass(frozen=True)
class ParametricPoint:
    kind: str
    alpha0: float
    eta: float
    sigma: float
    lam: float
    variance: float
    discord: float
    theta: float
    phi: float
    converged: bool
    limit: str = ""
    truncation_dim: int = 2
    phase_converged: bool = True


def qd_variance_point(
    kind, alpha0: float, eta: float, sigma: float, lam: float = math.pi / 2, raise_on_stall: bool = True
) -> ParametricPoint:
    kind = ChannelKind.parse(kind)
    res = channel_discord(kind, alpha0, eta, sigma, raise_on_stall=raise_on_stall)
    limit = ""
    if eta <= ENDPOINT_TOL:
        limit = "eta->0"
    elif 1 - eta <= ENDPOINT_TOL and sigma == 0.0:
        limit = "eta->1"
    return ParametricPoint(
        kind.value, alpha0, eta, sigma, lam, qvar(kind, lam, alpha0, eta, sigma), res.value,
        res.theta, res.phi, res.converged, limit, int(res.meta.get("truncation_dim", 2)),
        bool(res.meta.get("phase_converged", True)),
    )


def qd_variance_parametric(kind, alpha0: float, etas=(1.0,), sigmas=(0.0,), lam: float = math.pi / 2) -> list[ParametricPoint]:
    """(variance, discord) pairs over an eta x sigma grid, eta-major order."""
    return [qd_variance_point(kind, alpha0, e, s, lam) for e in etas for s in sigmas]
