"""Driven-dissipative model assembly: Hamiltonian, dissipators, generator.

The master equation is

    d rho/dt  =  i [H, rho]  +  sum_i ( 2 L_i rho L_i^dag - {L_i^dag L_i, rho} )

with H = omega a^dag a + lambda (a^2 + a^dag^2) and jump operators
L_1 = sqrt(kappa1) a, L_2 = sqrt(kappa2) a^2, L_d = sqrt(kappad) a^dag a.
The dissipator carries the factor-2 normalization (no 1/2 on the
anticommutator); every rate-dependent formula in the package (gap, critical
boundary, |alpha|^2) assumes it.

Orientation of the coherent term: the sign of i is fixed so that the dark
cat states of the two-photon-loss model sit at arg(alpha) = +pi/4 and the
mean-field phase is arccos(-omega/(2 lambda))/2 in [0, pi/2]. The opposite
sign is the elementwise-conjugate (transposition-equivalent) generator with
cats at -pi/4; spectra, gaps, and fidelities are identical either way.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fock import FockSpace, Operator, annihilation, number

SUPEROP_WARN_DIM = 100
VECTORIZATION = "column-stacking"


@dataclass(frozen=True)
class LindbladModel:
    """Parameter bundle for one physical configuration.

    omega   : detuning / frequency of the mode
    lam     : two-photon drive strength
    kappa1  : one-photon loss rate (breaks the strong parity symmetry)
    kappa2  : two-photon loss rate
    kappad  : dephasing rate
    space   : truncated Fock space the operators act on
    """

    omega: float
    lam: float
    kappa1: float
    kappa2: float
    kappad: float
    space: FockSpace

    def __post_init__(self):
        for name in ("kappa1", "kappa2", "kappad"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        vals = (self.omega, self.lam, self.kappa1, self.kappa2, self.kappad)
        if not all(np.isfinite(vals)):
            raise ValueError("model parameters must be finite")

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def N(self) -> float:
        """Thermodynamic-limit parameter N = lambda / kappa2 (steady photon scale)."""
        if self.kappa2 == 0:
            return float("inf")
        return self.lam / self.kappa2

    def total_rate(self) -> float:
        return self.kappa1 + self.kappa2 + self.kappad


@dataclass(frozen=True, eq=False)
class SuperOperator:
    """Dense d^2 x d^2 matrix form of the generator.

    `vectorization` records the stacking convention the matrix assumes;
    consumers must read the tag instead of assuming one.
    """

    space: FockSpace
    matrix: np.ndarray
    vectorization: str = VECTORIZATION


def vec(mat: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization: |m><n| maps to index n*d + m."""
    return np.asarray(mat).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


def hamiltonian(model: LindbladModel) -> Operator:
    a = annihilation(model.space).matrix
    H = model.omega * (a.conj().T @ a) + model.lam * (a @ a + a.conj().T @ a.conj().T)
    return Operator(model.space, H)


def jump_operators(model: LindbladModel) -> list[Operator]:
    """The active dissipators, in the fixed order (loss, two-photon loss, dephasing)."""
    a = annihilation(model.space).matrix
    ops = []
    if model.kappa1 > 0:
        ops.append(Operator(model.space, np.sqrt(model.kappa1) * a))
    if model.kappa2 > 0:
        ops.append(Operator(model.space, np.sqrt(model.kappa2) * (a @ a)))
    if model.kappad > 0:
        ops.append(Operator(model.space, np.sqrt(model.kappad) * (a.conj().T @ a)))
    return ops


def jump_operator_names(model: LindbladModel) -> list[str]:
    names = []
    if model.kappa1 > 0:
        names.append("L1")
    if model.kappa2 > 0:
        names.append("L2")
    if model.kappad > 0:
        names.append("Ld")
    return names


def apply(model: LindbladModel, rho: Operator) -> Operator:
    """Direct action of the generator on a density matrix."""
    if rho.space != model.space:
        raise ValueError("state and model live on different spaces")
    H = hamiltonian(model).matrix
    r = rho.matrix
    out = 1j * (H @ r - r @ H)
    for L in jump_operators(model):
        Lm = L.matrix
        LdL = Lm.conj().T @ Lm
        out += 2.0 * Lm @ r @ Lm.conj().T - LdL @ r - r @ LdL
    return Operator(model.space, out)


def apply_adjoint(model: LindbladModel, x: Operator) -> Operator:
    """Hilbert-Schmidt adjoint action (Heisenberg picture) on an observable."""
    if x.space != model.space:
        raise ValueError("observable and model live on different spaces")
    H = hamiltonian(model).matrix
    m = x.matrix
    out = -1j * (H @ m - m @ H)
    for L in jump_operators(model):
        Lm = L.matrix
        LdL = Lm.conj().T @ Lm
        out += 2.0 * Lm.conj().T @ m @ Lm - LdL @ m - m @ LdL
    return Operator(model.space, out)


def _superop_matrix(model: LindbladModel) -> np.ndarray:
    d = model.dim
    if d > SUPEROP_WARN_DIM:
        warnings.warn(
            f"assembling a {d * d} x {d * d} superoperator (dim={d}); "
            "this may exhaust memory",
            RuntimeWarning,
            stacklevel=3,
        )
    I = np.eye(d)
    H = hamiltonian(model).matrix
    # column stacking: vec(A X B) = (B^T kron A) vec(X)
    M = 1j * (np.kron(I, H) - np.kron(H.T, I))
    for L in jump_operators(model):
        Lm = L.matrix
        LdL = Lm.conj().T @ Lm
        M += 2.0 * np.kron(Lm.conj(), Lm) - np.kron(I, LdL) - np.kron(LdL.T, I)
    return M


def superoperator(model: LindbladModel) -> SuperOperator:
    """Matrix M with M vec(rho) = vec(apply(model, rho))."""
    return SuperOperator(model.space, _superop_matrix(model))


def adjoint_superoperator(model: LindbladModel) -> SuperOperator:
    """Matrix of the Hilbert-Schmidt adjoint map (equals M^dag of the generator)."""
    d = model.dim
    I = np.eye(d)
    H = hamiltonian(model).matrix
    M = -1j * (np.kron(I, H) - np.kron(H.T, I))
    for L in jump_operators(model):
        Lm = L.matrix
        LdL = Lm.conj().T @ Lm
        M += 2.0 * np.kron(Lm.T, Lm.conj().T) - np.kron(I, LdL) - np.kron(LdL.T, I)
    return SuperOperator(model.space, M)


def guard_band(dim: int) -> int:
    """First Fock index of the truncation guard band (top 10% of levels)."""
    return dim - max(1, dim // 10)


def guard_population(rho: Operator) -> float:
    """Diagonal population in the guard band, relative to the total trace."""
    g = guard_band(rho.dim)
    diag = np.real(np.diag(rho.matrix))
    total = abs(np.sum(diag))
    if total == 0:
        return 0.0
    return float(np.sum(np.abs(diag[g:])) / total)


def boundary_leakage(op) -> float:
    """Relative weight an operator or ket carries in the truncation guard band.

    For a Ket this is the probability mass on the top 10% of Fock levels; for
    an Operator it is the Hilbert-Schmidt mass of rows/columns in the band.
    """
    from .fock import Ket

    if isinstance(op, Ket):
        g = guard_band(op.dim)
        total = float(np.vdot(op.amplitudes, op.amplitudes).real)
        if total == 0:
            return 0.0
        return float(np.sum(np.abs(op.amplitudes[g:]) ** 2) / total)
    mat = op.matrix if isinstance(op, Operator) else np.asarray(op)
    d = mat.shape[0]
    g = guard_band(d)
    total = float(np.sum(np.abs(mat) ** 2))
    if total == 0:
        return 0.0
    hot = np.sum(np.abs(mat[g:, :]) ** 2) + np.sum(np.abs(mat[:g, g:]) ** 2)
    return float(hot / total)


@lru_cache(maxsize=8)
def _cached_superop_matrix(model: LindbladModel) -> np.ndarray:
    mat = _superop_matrix(model)
    mat.setflags(write=False)
    return mat


def superop_matrix(model: LindbladModel) -> np.ndarray:
    """Cached read-only superoperator matrix (models are immutable)."""
    return _cached_superop_matrix(model)
