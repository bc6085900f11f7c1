"""Truncated Fock-space linear algebra.

Every mode ``i`` of a :class:`HilbertSpec` is truncated to the number states
``|0>, ..., |mode_dims[i]-1>``. Multi-mode vectors use row-major (``np.kron``)
ordering with mode 0 as the most significant index.

Beam-splitter convention: ``beamsplitter_op`` returns the unitary ``U`` with
``U a_i^dag U^dag = sum_j B_ij a_j^dag`` where ``B`` is the 2x2 matrix

    [[ cos(t) e^{i phi_t},   sin(t) e^{i phi_r}],
     [-sin(t) e^{-i phi_r},  cos(t) e^{-i phi_t}]]

so with ``phi_t=0, phi_r=pi`` the input mode ``a`` is sent to
``cos(t) a - sin(t) c``. At ``t=pi/4`` this is the 50/50 splitter used to
generate the channels, and ``t=arccos(sqrt(eta))`` is the scattering model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm, logm

from .errors import NumericalIntegrityError, TruncationError

HERMITIAN_TOL = 1e-12
NEGATIVE_EIG_TOL = 1e-10
ZERO_EIG_CUTOFF = 1e-14


def truncation_dim(alpha: complex) -> int:
    """Per-mode Fock dimension adequate for a coherent amplitude ``alpha``.

    Keeps the Poisson tail below ~1e-10 even after one extra photon is added.
    """
    a = abs(alpha)
    return int(math.ceil(a * a + 6.0 * a + 12.0))


def check_truncation(alpha: complex, dim: int) -> None:
    a = abs(alpha)
    if a * a + 6.0 * a + 10.0 > dim:
        raise TruncationError(
            f"dimension {dim} too small for amplitude |alpha|={a:.4g} "
            f"(need > {a * a + 6.0 * a + 10.0:.4g})"
        )


@dataclass(frozen=True)
class HilbertSpec:
    """Tensor product of truncated single-mode Fock spaces."""

    mode_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.mode_dims)
        if not dims:
            raise ValueError("at least one mode is required")
        if any(d < 2 for d in dims):
            raise ValueError(f"every mode dimension must be >= 2, got {dims}")
        object.__setattr__(self, "mode_dims", dims)

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.mode_dims))

    def check_mode(self, mode: int) -> None:
        if not 0 <= mode < self.n_modes:
            raise IndexError(f"mode {mode} out of range for {self.n_modes} modes")


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Ket:
    space: HilbertSpec
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.size != self.space.dim:
            raise ValueError(f"ket length {amps.size} != space dimension {self.space.dim}")
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "Ket":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return Ket(self.space, self.amplitudes / n)

    def to_density(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(self.space, np.outer(v, v.conj()))

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.mode_dims)


@dataclass(frozen=True)
class DensityMatrix:
    """Density matrix over ``space``.

    ``displacements`` marks a displaced-number-state basis: when set, the basis
    of mode ``i`` is ``D(displacements[i])|n>`` instead of ``|n>``.
    """

    space: HilbertSpec
    matrix: np.ndarray
    displacements: tuple[complex, ...] | None = None
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.space.dim
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match space dimension {d}")
        object.__setattr__(self, "matrix", m)
        if self.displacements is not None:
            disp = tuple(complex(x) for x in self.displacements)
            if len(disp) != self.space.n_modes:
                raise ValueError("one displacement per mode is required")
            object.__setattr__(self, "displacements", disp)

    @property
    def in_fock_basis(self) -> bool:
        return self.displacements is None or all(x == 0 for x in self.displacements)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def with_matrix(self, matrix, **meta) -> "DensityMatrix":
        merged = dict(self.meta)
        merged.update(meta)
        return DensityMatrix(self.space, matrix, self.displacements, merged)

    def check(self, trace_tol: float = 1e-10) -> "DensityMatrix":
        """Raise :class:`NumericalIntegrityError` unless the invariants hold."""
        herr = self.hermiticity_error()
        if herr > HERMITIAN_TOL:
            raise NumericalIntegrityError(f"density matrix not Hermitian (max dev {herr:.3g})")
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise NumericalIntegrityError(f"trace {tr.real:.12g} deviates from 1")
        lo = float(np.linalg.eigvalsh(self.matrix)[0])
        if lo < -NEGATIVE_EIG_TOL:
            raise NumericalIntegrityError(f"negative eigenvalue {lo:.3g}")
        return self


@dataclass(frozen=True)
class Operator:
    space: HilbertSpec
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.space.dim
        if m.shape != (d, d):
            raise ValueError(f"operator shape {m.shape} does not match space dimension {d}")
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self.space, self.matrix @ other.matrix)
        if isinstance(other, Ket):
            return Ket(self.space, self.matrix @ other.amplitudes)
        return NotImplemented

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def conjugate(self, rho: DensityMatrix) -> DensityMatrix:
        """Return ``U rho U^dag``."""
        u = self.matrix
        out = u @ rho.matrix @ u.conj().T
        return rho.with_matrix(0.5 * (out + out.conj().T))


# ---------------------------------------------------------------------------
# single-mode building blocks


def lowering_matrix(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def lift(local: np.ndarray, space: HilbertSpec, modes: Sequence[int]) -> np.ndarray:
    """Embed an operator acting on ``modes`` into the full space (identity elsewhere)."""
    modes = list(modes)
    for m in modes:
        space.check_mode(m)
    if len(set(modes)) != len(modes):
        raise ValueError("repeated mode index")
    dims = space.mode_dims
    rest = [m for m in range(space.n_modes) if m not in modes]
    sub = int(np.prod([dims[m] for m in modes]))
    other = int(np.prod([dims[m] for m in rest])) if rest else 1
    if local.shape != (sub, sub):
        raise ValueError(f"local operator shape {local.shape} != ({sub}, {sub})")
    full = np.kron(local, np.eye(other))
    order = modes + rest
    n = space.n_modes
    shape = [dims[m] for m in order]
    full = full.reshape(shape + shape)
    inv = np.argsort(order)
    full = full.transpose(list(inv) + [n + i for i in inv])
    return full.reshape(space.dim, space.dim)


def annihilation_op(space: HilbertSpec, mode: int) -> Operator:
    space.check_mode(mode)
    return Operator(space, lift(lowering_matrix(space.mode_dims[mode]), space, [mode]))


def creation_op(space: HilbertSpec, mode: int) -> Operator:
    """Raising operator; the top Fock level is mapped to zero."""
    space.check_mode(mode)
    return Operator(space, lift(lowering_matrix(space.mode_dims[mode]).T, space, [mode]))


def number_op(space: HilbertSpec, mode: int) -> Operator:
    space.check_mode(mode)
    n = np.diag(np.arange(space.mode_dims[mode], dtype=float)).astype(complex)
    return Operator(space, lift(n, space, [mode]))


def quadrature_matrix(dim: int, lam: float) -> np.ndarray:
    """Single-mode ``X_lam = (a e^{-i lam} + a^dag e^{i lam}) / sqrt(2)``."""
    a = lowering_matrix(dim)
    return (a * np.exp(-1j * lam) + a.T * np.exp(1j * lam)) / math.sqrt(2.0)


def displacement_op(space: HilbertSpec, mode: int, alpha: complex) -> Operator:
    """``exp(alpha a^dag - alpha^* a)`` by matrix exponential on the truncated mode."""
    space.check_mode(mode)
    dim = space.mode_dims[mode]
    check_truncation(alpha, dim)
    a = lowering_matrix(dim)
    gen = alpha * a.T - np.conj(alpha) * a
    return Operator(space, lift(expm(gen), space, [mode]))


def phase_op(space: HilbertSpec, mode: int, phi: float) -> Operator:
    """``exp(i phi n)`` on the selected mode."""
    space.check_mode(mode)
    diag = np.exp(1j * phi * np.arange(space.mode_dims[mode]))
    return Operator(space, lift(np.diag(diag), space, [mode]))


def beamsplitter_matrix(theta: float, phi_t: float = 0.0, phi_r: float = math.pi) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [
            [c * np.exp(1j * phi_t), s * np.exp(1j * phi_r)],
            [-s * np.exp(-1j * phi_r), c * np.exp(-1j * phi_t)],
        ]
    )


def beamsplitter_local(dim: int, theta: float, phi_t: float = 0.0, phi_r: float = math.pi) -> np.ndarray:
    """Two-mode (dim x dim) Fock representation of the beam splitter.

    The generator conserves total photon number, so the truncated unitary is
    exact on every state with ``n_1 + n_2 <= dim - 1``.
    """
    b = beamsplitter_matrix(theta, phi_t, phi_r)
    if np.allclose(b, np.eye(2)):
        return np.eye(dim * dim, dtype=complex)
    gen2 = logm(b).T
    a = lowering_matrix(dim)
    eye = np.eye(dim)
    ops = [np.kron(a, eye), np.kron(eye, a)]
    gen = sum(gen2[k, l] * ops[k].conj().T @ ops[l] for k in range(2) for l in range(2))
    return expm(gen)


def beamsplitter_op(
    space: HilbertSpec,
    modes: tuple[int, int],
    theta: float,
    phi_t: float = 0.0,
    phi_r: float = math.pi,
) -> Operator:
    i, j = modes
    if i == j:
        raise ValueError("beam splitter needs two distinct modes")
    space.check_mode(i)
    space.check_mode(j)
    if space.mode_dims[i] != space.mode_dims[j]:
        raise ValueError("beam splitter modes must have equal truncation dimensions")
    local = beamsplitter_local(space.mode_dims[i], theta, phi_t, phi_r)
    return Operator(space, lift(local, space, [i, j]))


def apply_local(local: np.ndarray, ket: Ket, modes: Sequence[int]) -> Ket:
    """Apply an operator on ``modes`` to a ket without forming the full matrix."""
    space = ket.space
    modes = list(modes)
    dims = space.mode_dims
    psi = ket.as_tensor()
    rest = [m for m in range(space.n_modes) if m not in modes]
    order = modes + rest
    psi = psi.transpose(order).reshape(int(np.prod([dims[m] for m in modes])), -1)
    psi = local @ psi
    psi = psi.reshape([dims[m] for m in order]).transpose(np.argsort(order))
    return Ket(space, psi.reshape(-1))


def coherent_vector(alpha: complex, dim: int) -> np.ndarray:
    """Fock amplitudes ``e^{-|a|^2/2} a^n / sqrt(n!)`` for n < dim."""
    out = np.empty(dim, dtype=complex)
    out[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        out[n] = out[n - 1] * alpha / math.sqrt(n)
    return out


def displaced_number_vector(alpha: complex, n: int, dim: int) -> np.ndarray:
    """Fock amplitudes of ``D(alpha)|n>`` via ``D|n> = (a^dag - alpha^*) D|n-1> / sqrt(n)``."""
    ext = dim + n
    v = coherent_vector(alpha, ext)
    up = lowering_matrix(ext).T
    for k in range(1, n + 1):
        v = (up @ v - np.conj(alpha) * v) / math.sqrt(k)
    return v[:dim]


def tensor(*items):
    """Tensor product of kets or of density matrices (Fock basis)."""
    if all(isinstance(x, Ket) for x in items):
        space = HilbertSpec(tuple(d for x in items for d in x.space.mode_dims))
        amps = items[0].amplitudes
        for x in items[1:]:
            amps = np.kron(amps, x.amplitudes)
        return Ket(space, amps)
    if all(isinstance(x, DensityMatrix) for x in items):
        space = HilbertSpec(tuple(d for x in items for d in x.space.mode_dims))
        mat = items[0].matrix
        for x in items[1:]:
            mat = np.kron(mat, x.matrix)
        disp = None
        if any(x.displacements is not None for x in items):
            disp = tuple(
                d
                for x in items
                for d in (x.displacements or (0j,) * x.space.n_modes)
            )
        return DensityMatrix(space, mat, disp)
    raise TypeError("tensor() takes only kets or only density matrices")


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Trace out every mode not listed in ``keep``; kept modes stay in ascending order."""
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    space = rho.space
    for m in keep:
        space.check_mode(m)
    n = space.n_modes
    dims = space.mode_dims
    t = rho.matrix.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = [letters[n + i] if i in keep else row[i] for i in range(n)]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    sub = HilbertSpec(tuple(dims[i] for i in keep))
    red = reduced.reshape(sub.dim, sub.dim)
    red = 0.5 * (red + red.conj().T)
    disp = None if rho.displacements is None else tuple(rho.displacements[i] for i in keep)
    return DensityMatrix(sub, red, disp)


def eig_hermitian(rho) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and matching eigenvector columns."""
    mat = rho.matrix if isinstance(rho, (DensityMatrix, Operator)) else np.asarray(rho)
    dev = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
    if dev > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(mat)))):
        raise NumericalIntegrityError(f"matrix not Hermitian (max dev {dev:.3g})")
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    return vals[::-1], vecs[:, ::-1]


def entropy_from_spectrum(vals) -> float:
    """Shannon entropy (bits) of an eigenvalue list after clamping tiny negatives."""
    vals = np.asarray(vals, dtype=float)
    if vals.size and vals.min() < -NEGATIVE_EIG_TOL:
        raise NumericalIntegrityError(f"negative eigenvalue {vals.min():.3g}")
    vals = vals[vals > ZERO_EIG_CUTOFF]
    return float(-np.sum(vals * np.log2(vals))) + 0.0


def von_neumann_entropy(rho) -> float:
    """``-Tr rho log2 rho`` in bits."""
    vals, _ = eig_hermitian(rho)
    return entropy_from_spectrum(vals)
