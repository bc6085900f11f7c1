"""Scattering loss and Gaussian phase noise on Alice's arm (mode A).

Scattering mixes mode A with a vacuum ancilla on a beam splitter of
transmittance ``eta`` and discards the ancilla. Written on the displaced
qubit basis the result is exact and 4x4: mode A ends up displaced by
``alpha*sqrt(eta)`` while Bob's mode keeps ``alpha``.

Phase noise averages ``U_A(phi) rho U_A(phi)^dag`` over a zero-mean normal
``phi`` with standard deviation ``sigma`` (radians). The displaced basis is not
closed under that rotation, so this step runs in the plain Fock basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite

from .errors import ConvergenceError
from .fock import (
    DensityMatrix,
    HilbertSpec,
    Ket,
    apply_local,
    beamsplitter_local,
    partial_trace,
    truncation_dim,
)
from .states import (
    ChannelKind,
    build_state_displaced,
    build_state_fock,
    embed_displaced,
    mode_amplitude,
    normalization,
)

GH_NODES = (41, 81, 161, 321, 641, 1281)
PHASE_TOL = 1e-9


def _check_eta(eta: float) -> float:
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return eta


@dataclass(frozen=True)
class ScatteringComponents:
    """``rho(eta) = p1 rho1 + p2 rho2`` on the displaced qubit basis."""

    p1: float
    rho1: np.ndarray
    p2: float
    rho2: np.ndarray
    displacements: tuple[complex, complex]


def scattering_components(kind, alpha0: float, eta: float) -> ScatteringComponents:
    # ancilla left in D|1>: only the A-excited amplitudes leak, weight sqrt(1-eta);
    # ancilla left in D|0>: A's excitation survives with weight sqrt(eta)
    eta = _check_eta(eta)
    c = build_state_displaced(kind, alpha0).reshape(2, 2)
    kept = c.copy()
    kept[1, :] *= math.sqrt(eta)
    lost = np.zeros_like(c)
    lost[0, :] = math.sqrt(1.0 - eta) * c[1, :]
    v2 = kept.reshape(-1)
    v1 = lost.reshape(-1)
    p1 = float(np.vdot(v1, v1).real)
    p2 = float(np.vdot(v2, v2).real)
    rho1 = np.outer(v1, v1.conj()) / p1 if p1 > 0 else np.zeros((4, 4), dtype=complex)
    rho2 = np.outer(v2, v2.conj()) / p2
    alpha = mode_amplitude(alpha0)
    return ScatteringComponents(p1, rho1, p2, rho2, (alpha * math.sqrt(eta), alpha))


def scattering_probabilities(kind, alpha0: float, eta: float) -> tuple[float, float]:
    """Closed-form mixture weights ``p1 = N^2 (1-eta)/2`` and ``p2 = N^2 (|a|^2 (1-+1)^2 + 1 + eta)/2``."""
    kind = ChannelKind.parse(kind)
    n2 = normalization(kind, alpha0) ** 2
    a2 = mode_amplitude(alpha0) ** 2
    return 0.5 * n2 * (1.0 - eta), 0.5 * n2 * (a2 * (1.0 + kind.sign) ** 2 + 1.0 + eta)


def scattering_mixture(kind, alpha0: float, eta: float) -> DensityMatrix:
    """Mixed state after scattering, 4x4 on ``{D(a sqrt(eta))|j>} x {D(a)|k>}``."""
    comp = scattering_components(kind, alpha0, eta)
    mat = comp.p1 * comp.rho1 + comp.p2 * comp.rho2
    mat = 0.5 * (mat + mat.conj().T)
    return DensityMatrix(HilbertSpec((2, 2)), mat, comp.displacements)


def scattering_fock_oracle(kind, alpha0: float, eta: float, space: HilbertSpec | None = None) -> DensityMatrix:
    """Brute-force scattering: beam splitter against a vacuum ancilla, then trace it out.

    ``space`` is the two-mode (A, B) output space, or a three-mode space whose
    last mode is the ancilla. The ancilla defaults to A's dimension.
    """
    eta = _check_eta(eta)
    if space is None:
        d = truncation_dim(mode_amplitude(alpha0))
        space = HilbertSpec((d, d, d))
    if space.n_modes == 2:
        space = HilbertSpec(space.mode_dims + (space.mode_dims[0],))
    if space.n_modes != 3:
        raise ValueError("oracle needs a (A, B) or (A, B, ancilla) space")
    da, db, dc = space.mode_dims
    if dc != da:
        raise ValueError("ancilla must share mode A's dimension")
    pure = build_state_fock(kind, alpha0, HilbertSpec((da, db)))
    vac = np.zeros(dc, dtype=complex)
    vac[0] = 1.0
    ket = Ket(space, np.kron(pure.amplitudes, vac))
    theta = math.acos(math.sqrt(eta))
    out = apply_local(beamsplitter_local(da, theta), ket, [0, 2])
    return partial_trace(out.to_density(), [0, 1])


def dephasing_weights(sigma: float, dim: int, nodes: int) -> np.ndarray:
    """Gauss-Hermite estimate of ``<exp(i phi d)>`` for d = -(dim-1)..(dim-1)."""
    x, w = roots_hermite(nodes)
    phi = math.sqrt(2.0) * sigma * x
    d = np.arange(-(dim - 1), dim)
    # fixed summation order over nodes keeps results bit-reproducible
    return (w[None, :] * np.exp(1j * np.outer(d, phi))).sum(axis=1) / math.sqrt(math.pi)


def _dephase(rho: DensityMatrix, weights: np.ndarray, mode: int) -> np.ndarray:
    dims = rho.space.mode_dims
    n = rho.space.n_modes
    da = dims[mode]
    m = np.arange(da)
    fac = weights[(m[:, None] - m[None, :]) + da - 1]
    shape = [1] * (2 * n)
    shape[mode] = da
    shape[n + mode] = da
    t = rho.matrix.reshape(dims + dims) * fac.reshape(shape)
    out = t.reshape(rho.space.dim, rho.space.dim)
    return 0.5 * (out + out.conj().T)


def phase_average(rho: DensityMatrix, sigma: float, mode: int = 0, tol: float = PHASE_TOL) -> DensityMatrix:
    """Average over Gaussian phase noise on ``mode`` with node doubling.

    The output ``meta`` records the node count used and the max elementwise
    change from the previous rule (the convergence certificate).
    """
    if not rho.in_fock_basis:
        raise ValueError("phase averaging needs a plain Fock-basis density matrix; embed first")
    sigma = float(sigma)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    rho.space.check_mode(mode)
    if sigma == 0.0:
        return rho.with_matrix(rho.matrix, phase_nodes=0, phase_change=0.0, phase_converged=True)
    da = rho.space.mode_dims[mode]
    prev = _dephase(rho, dephasing_weights(sigma, da, GH_NODES[0]), mode)
    for nodes in GH_NODES[1:]:
        cur = _dephase(rho, dephasing_weights(sigma, da, nodes), mode)
        change = float(np.max(np.abs(cur - prev)))
        if change <= tol:
            return DensityMatrix(
                rho.space, cur, None,
                {**rho.meta, "phase_nodes": nodes, "phase_change": change, "phase_converged": True},
            )
        prev = cur
    raise ConvergenceError(f"phase average not converged (last change {change:.3g} > {tol:g})")


def exact_dephasing(rho: DensityMatrix, sigma: float, mode: int = 0) -> DensityMatrix:
    """Closed-form phase average using ``<exp(i phi d)> = exp(-sigma^2 d^2 / 2)``."""
    da = rho.space.mode_dims[mode]
    d = np.arange(-(da - 1), da)
    return rho.with_matrix(_dephase(rho, np.exp(-0.5 * sigma**2 * d**2).astype(complex), mode))


def noisy_state(kind, alpha0: float, eta: float, sigma: float, space: HilbertSpec | None = None) -> DensityMatrix:
    """Scattering followed by phase noise on A, as a Fock-basis density matrix."""
    rho = scattering_mixture(kind, alpha0, eta)
    if space is None:
        d = truncation_dim(mode_amplitude(alpha0))
        space = HilbertSpec((d, d))
    fock = embed_displaced(rho, space)
    return phase_average(fock, sigma)
