"""Homodyne statistics of two-mode states: joint quadrature distributions,
their differential entropies, and the measurement-induced disturbance.

Quadratures are ``X_lam = (a exp(-i lam) + a^dag exp(i lam)) / sqrt(2)``, so a
coherent state ``|alpha>`` has ``<X_lam> = sqrt(2) Re(alpha exp(-i lam))``.
With that operator the eigenstate overlap is
``<X_lam|n> = exp(-i n lam) psi_n(X)``.

All entropies here are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import curve_fit

from .errors import ConvergenceError, TruncationError
from .fock import HilbertSpec, Ket, eig_hermitian, entropy_from_spectrum, truncation_dim
from .optimize import grid_then_simplex
from .states import ChannelKind, build_state_fock, mode_amplitude, normalization

TWO_PI = 2.0 * math.pi
ENTROPY_TOL = 1e-4
PURITY_TOL = 1e-8
TOP_LEVEL_TOL = 1e-8
COVERAGE_TOL = 1e-8
MAX_DOUBLINGS = 3
EXTRA_LEVELS = 10
# MID values closer than this count as the same minimum (quadrature noise is ~1e-6)
MID_TIE_TOL = 1e-5


def quad_wavefunctions(nmax: int, x) -> np.ndarray:
    """``psi_n(x)`` for n = 0..nmax, shape ``(len(x), nmax + 1)``.

    Uses the normalized Hermite recurrence, which stays finite for large n.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.size, nmax + 1))
    out[:, 0] = math.pi**-0.25 * np.exp(-0.5 * x**2)
    if nmax >= 1:
        out[:, 1] = math.sqrt(2.0) * x * out[:, 0]
    for n in range(1, nmax):
        out[:, n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[:, n] - math.sqrt(n / (n + 1)) * out[:, n - 1]
    return out


def quad_overlap(n: int, x, lam: float = 0.0):
    """``<X_lam|n>``; scalar in, scalar out."""
    vals = quad_wavefunctions(n, x)[:, n] * np.exp(-1j * n * lam)
    return complex(vals[0]) if np.ndim(x) == 0 else vals


def overlap_matrix(dim: int, x, lam: float) -> np.ndarray:
    """Rows ``<X_lam = x_i|n>`` for n < dim."""
    return quad_wavefunctions(dim - 1, x) * np.exp(-1j * np.arange(dim) * lam)[None, :]


@dataclass(frozen=True)
class LOPhases:
    lam_a: float
    lam_b: float

    def __post_init__(self):
        for name in ("lam_a", "lam_b"):
            v = float(getattr(self, name))
            if not 0.0 <= v < TWO_PI:
                raise ValueError(f"{name} must lie in [0, 2pi), got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def wrap(cls, lam_a: float, lam_b: float) -> "LOPhases":
        return cls(float(lam_a) % TWO_PI, float(lam_b) % TWO_PI)


@lru_cache(maxsize=16)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class QuadGrid:
    lower: float
    upper: float
    nodes: int = 201
    rule: str = "gauss-legendre"

    def __post_init__(self):
        if not self.upper > self.lower:
            raise ValueError("grid needs upper > lower")
        if self.nodes < 101:
            raise ValueError("grid needs at least 101 nodes")
        if self.rule not in ("gauss-legendre", "trapezoid"):
            raise ValueError(f"unknown rule {self.rule!r}")

    @classmethod
    def for_alpha0(cls, alpha0: float, nodes: int = 201) -> "QuadGrid":
        half = float(alpha0) + 8.0
        return cls(-half, half, nodes)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        if self.rule == "gauss-legendre":
            t, w = _legendre(self.nodes)
            mid = 0.5 * (self.upper + self.lower)
            half = 0.5 * (self.upper - self.lower)
            return mid + half * t, half * w
        x = np.linspace(self.lower, self.upper, self.nodes)
        w = np.full(self.nodes, x[1] - x[0])
        w[[0, -1]] *= 0.5
        return x, w

    def refined(self) -> "QuadGrid":
        return QuadGrid(self.lower, self.upper, 2 * self.nodes - (self.rule == "trapezoid"), self.rule)


def jqp_terms(alpha0: float, xa, xb, lam_a: float, lam_b: float):
    """Polynomial pieces ``(a1, a2)`` of the closed-form distribution.

    ``a1 = |u_A|^2 + |u_B|^2`` and ``a2 = -2 Re(u_A conj(u_B))`` with
    ``u = exp(-i lam)(2X - alpha0 exp(-i lam))``.
    """
    ua = np.exp(-1j * lam_a) * (2.0 * np.asarray(xa) - alpha0 * np.exp(-1j * lam_a))
    ub = np.exp(-1j * lam_b) * (2.0 * np.asarray(xb) - alpha0 * np.exp(-1j * lam_b))
    return np.abs(ua) ** 2 + np.abs(ub) ** 2, -2.0 * np.real(ua * np.conj(ub))


def jqp_closed(kind, alpha0: float, xa, xb, lam_a: float, lam_b: float):
    """Closed-form joint quadrature density of the pure channel state."""
    kind = ChannelKind.parse(kind)
    if alpha0 < 0:
        raise ValueError("alpha0 must be nonnegative")
    a1, a2 = jqp_terms(alpha0, xa, xb, lam_a, lam_b)
    # DPC pairs with +a2, PAC with -a2
    poly = a1 - kind.sign * a2
    gauss = np.exp(-((np.asarray(xa) - alpha0 * math.cos(lam_a)) ** 2) - (np.asarray(xb) - alpha0 * math.cos(lam_b)) ** 2)
    return normalization(kind, alpha0) ** 2 / (4.0 * math.pi) * poly * gauss


class _Components:
    """A two-mode state as weighted pure tensors, validated once."""

    def __init__(self, state):
        if isinstance(state, _Components):
            self.__dict__.update(state.__dict__)
            return
        if isinstance(state, Ket):
            if state.space.n_modes != 2:
                raise ValueError("need a two-mode state")
            self.weights = np.array([1.0])
            self.tensors = [state.as_tensor()]
            self.dims = state.space.mode_dims
        else:
            if state.space.n_modes != 2 or not state.in_fock_basis:
                raise ValueError("need a two-mode Fock-basis density matrix")
            vals, vecs = eig_hermitian(state.matrix)
            self.dims = state.space.mode_dims
            keep = np.flatnonzero(vals > 1e-14)
            self.weights = vals[keep]
            self.tensors = [vecs[:, k].reshape(self.dims) for k in keep]
        self.rho_a = sum(p * t @ t.conj().T for p, t in zip(self.weights, self.tensors))
        self.rho_b = sum(p * t.T @ t.conj() for p, t in zip(self.weights, self.tensors))
        for mode, red in enumerate((self.rho_a, self.rho_b)):
            top = float(red[-1, -1].real)
            if top > TOP_LEVEL_TOL:
                raise TruncationError(
                    f"mode {mode} has population {top:.2e} in its top Fock level; enlarge the truncation"
                )

    @property
    def purity(self) -> float:
        return float(np.sum(self.weights**2))

    def grid(self, xa, xb, lam_a: float, lam_b: float) -> np.ndarray:
        fa = overlap_matrix(self.dims[0], xa, lam_a)
        fb = overlap_matrix(self.dims[1], xb, lam_b)
        out = np.zeros((fa.shape[0], fb.shape[0]))
        for p, psi in zip(self.weights, self.tensors):
            out += p * np.abs(fa @ psi @ fb.T) ** 2
        return out

    def points(self, xa, xb, lam_a: float, lam_b: float) -> np.ndarray:
        fa = overlap_matrix(self.dims[0], xa, lam_a)
        fb = overlap_matrix(self.dims[1], xb, lam_b)
        out = np.zeros(fa.shape[0])
        for p, psi in zip(self.weights, self.tensors):
            out += p * np.abs(np.einsum("in,nm,im->i", fa, psi, fb)) ** 2
        return out


def jqp_grid(state, xa, xb, lam_a: float, lam_b: float) -> np.ndarray:
    """``P(xa_i, xb_j)`` on the outer product of two point sets.

    Each pure component ``psi`` contributes ``|Phi_A psi Phi_B^T|^2``.
    """
    return _Components(state).grid(xa, xb, lam_a, lam_b)


def jqp_numeric(state, xa, xb, lam_a: float, lam_b: float):
    """``Tr[Pi_A(xa) x Pi_B(xb) rho]`` at matching points ``(xa[i], xb[i])``."""
    xa_arr, xb_arr = np.broadcast_arrays(np.atleast_1d(np.asarray(xa, float)), np.atleast_1d(np.asarray(xb, float)))
    out = _Components(state).points(xa_arr.ravel(), xb_arr.ravel(), lam_a, lam_b).reshape(xa_arr.shape)
    return float(out.ravel()[0]) if np.ndim(xa) == 0 and np.ndim(xb) == 0 else out


def _diff_entropy(p: np.ndarray, w: np.ndarray) -> float:
    pos = p > 0
    return float(-np.sum((w * p * np.log2(np.where(pos, p, 1.0)))[pos]))


@dataclass(frozen=True)
class ProjectedEntropies:
    s_a: float
    s_b: float
    s_ab: float
    nodes: int
    change: float
    mass: float

    @property
    def mutual_information(self) -> float:
        return self.s_a + self.s_b - self.s_ab


def _entropies_on(state, lam_a: float, lam_b: float, grid: QuadGrid):
    x, w = grid.points()
    p = state.grid(x, x, lam_a, lam_b)
    pa = p @ w
    pb = w @ p
    s_ab = _diff_entropy(p, np.outer(w, w))
    return _diff_entropy(pa, w), _diff_entropy(pb, w), s_ab, float(w @ p @ w)


def projected_entropies(state, lam_a: float, lam_b: float, grid: QuadGrid | None = None, tol: float = ENTROPY_TOL) -> ProjectedEntropies:
    """Differential entropies of the homodyne outcome distributions, in bits.

    The grid is doubled until the joint entropy moves by less than ``tol``.
    """
    state = _Components(state)
    if grid is None:
        grid = QuadGrid.for_alpha0(_guess_alpha0(state))
    prev = _entropies_on(state, lam_a, lam_b, grid)
    for _ in range(MAX_DOUBLINGS):
        grid = grid.refined()
        cur = _entropies_on(state, lam_a, lam_b, grid)
        change = abs(cur[2] - prev[2])
        if change < tol:
            if abs(cur[3] - 1.0) > COVERAGE_TOL:
                raise ValueError(f"grid misses probability mass {abs(cur[3] - 1.0):.2e}; widen the bounds")
            return ProjectedEntropies(cur[0], cur[1], cur[2], grid.nodes, change, cur[3])
        prev = cur
    raise ConvergenceError(f"projected entropies not converged (last change {change:.3g} bits)")


def _guess_alpha0(state: _Components) -> float:
    # mean photon number of mode A bounds the quadrature displacement
    n = float(np.real(np.arange(state.dims[0]) @ np.diag(state.rho_a)))
    return math.sqrt(2.0 * max(n, 0.0))


def _require_pure(state) -> tuple[_Components, float]:
    comp = _Components(state)
    if comp.purity < 1.0 - PURITY_TOL:
        raise ValueError("MID is only defined here for pure states")
    return comp, entropy_from_spectrum(np.linalg.eigvalsh(comp.rho_a))


def _mid_value(state, s_a: float, lam_a: float, lam_b: float, grid) -> float:
    return 2.0 * s_a - projected_entropies(state, lam_a, lam_b, grid).mutual_information


def mid(state, lam_a: float, lam_b: float, grid: QuadGrid | None = None) -> float:
    """Quantum minus homodyne mutual information of a pure two-mode state, bits."""
    state, s_a = _require_pure(state)
    return _mid_value(state, s_a, lam_a, lam_b, grid)


def mid_map(state, lam_a, lam_b, grid: QuadGrid | None = None) -> np.ndarray:
    """MID on the outer product of two phase arrays."""
    state, s_a = _require_pure(state)
    return np.array([[_mid_value(state, s_a, la, lb, grid) for lb in lam_b] for la in lam_a])


@dataclass(frozen=True)
class AmidResult:
    value: float
    lam_a: float
    lam_b: float
    evaluations: int
    converged: bool
    meta: dict = field(default_factory=dict)


def amid(state, grid_points: int = 24, grid: QuadGrid | None = None, raise_on_stall: bool = True) -> AmidResult:
    """Minimum of MID over both LO phases.

    Shifting either phase by pi only reflects that quadrature, which leaves
    every differential entropy unchanged, so the search runs over [0, pi)^2:
    a ``grid_points``-square grid seeds a simplex search. When the minimum is
    degenerate the first grid node (smallest phases) that reaches it is
    reported instead of wherever the simplex stopped.
    """
    state, s_a = _require_pure(state)
    if grid is None:
        grid = QuadGrid.for_alpha0(_guess_alpha0(state))
    axis = np.linspace(0.0, math.pi, grid_points, endpoint=False)
    cache: dict[tuple[float, float], float] = {}

    def f(la, lb):
        key = (float(la) % math.pi, float(lb) % math.pi)
        if key not in cache:
            cache[key] = _mid_value(state, s_a, key[0], key[1], grid)
        return cache[key]

    best = grid_then_simplex(f, axis, axis, spread_tol=1e-6, xatol=1e-6, fatol=1e-10)
    if not best.converged and raise_on_stall:
        raise ConvergenceError(f"AMID optimizer stalled (spread {best.spread:.3g})")
    value = best.value
    lam_a, lam_b = (x % math.pi for x in best.x)
    for la in axis:
        hit = next((lb for lb in axis if f(la, lb) <= value + MID_TIE_TOL), None)
        if hit is not None:
            lam_a, lam_b = float(la), float(hit)
            value = min(value, f(la, hit))
            break
    return AmidResult(float(value), float(lam_a), float(lam_b), len(cache), best.converged, {"s_a": s_a})


def homodyne_state(kind, alpha0: float) -> Ket:
    """Pure channel state with headroom above the standard truncation.

    The extra levels bring the overlap sums to ~1e-12 agreement with the
    closed-form distribution.
    """
    d = truncation_dim(mode_amplitude(alpha0)) + EXTRA_LEVELS
    return build_state_fock(kind, alpha0, HilbertSpec((d, d)))


def channel_amid(kind, alpha0: float, **kwargs) -> AmidResult:
    return amid(homodyne_state(kind, alpha0), grid=QuadGrid.for_alpha0(alpha0), **kwargs)


def reduced_entropy_closed(kind, alpha0: float) -> float:
    """Entanglement entropy (bits) of the pure channel state."""
    kind = ChannelKind.parse(kind)
    if kind is ChannelKind.DPC:
        return 1.0
    a2 = alpha0**2
    r = alpha0 * math.sqrt(a2 + 2.0)
    return (math.log(2.0 * (a2 + 1.0)) - r * math.atanh(r / (a2 + 1.0)) / (a2 + 1.0)) / math.log(2.0)


def amid_model(n0, a, b, c):
    return 1.0 / (a + np.exp(b * (np.asarray(n0) - c)))


@dataclass(frozen=True)
class AmidFit:
    a: float
    b: float
    c: float
    stderr: tuple[float, float, float]


def fit_amid(n0, values, p0=(0.5, 2.0, 1.0)) -> AmidFit:
    """Least-squares fit of ``1/(a + exp(b (n0 - c)))``."""
    popt, pcov = curve_fit(amid_model, np.asarray(n0, float), np.asarray(values, float), p0=p0, maxfev=20000)
    err = np.sqrt(np.clip(np.diag(pcov), 0.0, None))
    return AmidFit(float(popt[0]), float(popt[1]), float(popt[2]), tuple(float(e) for e in err))
