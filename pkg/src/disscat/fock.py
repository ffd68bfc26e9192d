"""Truncated Fock-space operator algebra and state constructors.

Everything lives on a hard Fock cutoff: basis |0>, ..., |dim-1>. Constructors
that promise normalization verify that the discarded tail carries less than
TAIL_TOL of the weight and fail loudly instead of silently renormalizing a bad
truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAIL_TOL = 1e-8
NORM_TOL = 1e-12


class TruncationError(ValueError):
    """Weight discarded beyond the Fock cutoff exceeds the trusted tail."""


class DegenerateCat(ValueError):
    """The requested cat superposition is the zero vector (odd branch at alpha=0)."""


@dataclass(frozen=True)
class FockSpace:
    """Truncated single-mode Fock space with states |0> ... |dim-1>."""

    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise ValueError(f"Fock cutoff must be an integer >= 2, got {self.dim!r}")


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex dim x dim matrix on a truncated Fock space."""

    space: FockSpace
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.space.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match dim {d}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.space.dim

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        if other.space != self.space:
            raise ValueError("operators live on different spaces")
        return Operator(self.space, self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class Ket:
    """Complex dim-vector on a truncated Fock space."""

    space: FockSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.dim,):
            raise ValueError(f"amplitude shape {amps.shape} does not match dim {self.space.dim}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.space.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def projector(self) -> Operator:
        return Operator(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


def required_dim(nbar: float) -> int:
    """Smallest trusted cutoff for states with mean photon number nbar."""
    return int(max(math.ceil(4.0 * nbar), 30))


def auto_dim(n_scale: float) -> int:
    """Sweep cutoff policy: 4N + 20 with a floor of 40, rounded up to even.

    Even cutoffs keep the two parity sectors the same size.
    """
    d = int(max(math.ceil(4.0 * n_scale) + 20, 40))
    return d + (d % 2)


def annihilation(space: FockSpace) -> Operator:
    d = space.dim
    a = np.zeros((d, d), dtype=complex)
    a[np.arange(d - 1), np.arange(1, d)] = np.sqrt(np.arange(1, d))
    return Operator(space, a)


def creation(space: FockSpace) -> Operator:
    return annihilation(space).dag()


def number(space: FockSpace) -> Operator:
    return Operator(space, np.diag(np.arange(space.dim).astype(complex)))


def parity(space: FockSpace) -> Operator:
    """Bose parity exp(i pi n): diagonal (-1)^n."""
    signs = 1.0 - 2.0 * (np.arange(space.dim) % 2)
    return Operator(space, np.diag(signs.astype(complex)))


def fock_state(space: FockSpace, n: int) -> Ket:
    if not 0 <= n < space.dim:
        raise ValueError(f"Fock index {n} outside cutoff {space.dim}")
    amps = np.zeros(space.dim, dtype=complex)
    amps[n] = 1.0
    return Ket(space, amps)


def _coherent_amplitudes(space: FockSpace, alpha: complex) -> np.ndarray:
    """Unnormalized-by-truncation amplitudes e^{-|a|^2/2} a^n / sqrt(n!)."""
    amps = np.empty(space.dim, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, space.dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return amps


def coherent_state(space: FockSpace, alpha: complex) -> Ket:
    """Normalized coherent state, truncated then renormalized.

    Raises TruncationError when the weight beyond the cutoff exceeds TAIL_TOL.
    """
    amps = _coherent_amplitudes(space, alpha)
    kept = float(np.vdot(amps, amps).real)
    if 1.0 - kept > TAIL_TOL:
        raise TruncationError(
            f"coherent state |alpha|^2={abs(alpha)**2:.3g} keeps only {kept:.12f} "
            f"of its weight at dim={space.dim} (need tail < {TAIL_TOL:g}); "
            f"use dim >= {required_dim(abs(alpha)**2)}"
        )
    return Ket(space, amps / math.sqrt(kept))


def cat_state(space: FockSpace, alpha: complex, branch: str) -> Ket:
    """Normalized even/odd cat state |alpha> +/- |-alpha>.

    The exact normalization constant is 1/sqrt(2 (1 +/- e^{-2|alpha|^2})); the
    truncated amplitudes are checked against it before renormalizing.
    """
    if branch not in ("even", "odd"):
        raise ValueError(f"branch must be 'even' or 'odd', got {branch!r}")
    sign = 1.0 if branch == "even" else -1.0
    if branch == "odd" and alpha == 0:
        raise DegenerateCat("odd cat at alpha=0 is the zero vector")
    plus = _coherent_amplitudes(space, alpha)
    minus = _coherent_amplitudes(space, -alpha)
    amps = plus + sign * minus
    kept = float(np.vdot(amps, amps).real)
    exact = 2.0 * (1.0 + sign * math.exp(-2.0 * abs(alpha) ** 2))
    if exact - kept > TAIL_TOL * exact:
        raise TruncationError(
            f"{branch} cat at |alpha|^2={abs(alpha)**2:.3g} loses "
            f"{(exact - kept) / exact:.3e} of its weight at dim={space.dim}; "
            f"use dim >= {required_dim(abs(alpha)**2)}"
        )
    return Ket(space, amps / math.sqrt(kept))
