"""Analytic spectrum of the quadratic limit (no two-photon loss, no dephasing).

With only one-photon loss the generator is quadratic in mode operators and
diagonalizes exactly: a single pair of complex energies

    eps_pm = -kappa1 +/- sqrt(4 lambda^2 - omega^2)

generates the whole spectrum as {n eps_+ + m eps_-}. The analytic form is
valid in the unbroken phase (Re eps_+ < 0); past the boundary the steady
state carries an infinite photon number and no truncated spectrum converges.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np


class BrokenPhase(ValueError):
    """Analytic quadratic spectrum requested outside its domain of validity."""


@dataclass(frozen=True)
class QuadraticSpectrum:
    eps_plus: complex
    eps_minus: complex
    modes: tuple  # (n, m, n*eps_plus + m*eps_minus), sorted like the ED spectra


def single_particle(omega: float, lam: float, kappa1: float) -> tuple[complex, complex]:
    """The two single-quasiparticle complex energies.

    For 4 lambda^2 < omega^2 the root is taken as +i sqrt(omega^2-4 lambda^2);
    both signs appear through the +/- so the returned set is branch-free.
    """
    if kappa1 < 0:
        raise ValueError("kappa1 must be nonnegative")
    root = cmath.sqrt(complex(4.0 * lam * lam - omega * omega))
    return (-kappa1 + root, -kappa1 - root)


def many_body(sp: tuple[complex, complex], n_max: int = 5, m_max: int = 5) -> QuadraticSpectrum:
    """Grid of many-body eigenvalues n*eps_+ + m*eps_- up to the excitation cutoffs."""
    eps_plus, eps_minus = sp
    if eps_plus.real > 1e-12:
        raise BrokenPhase(
            f"Re(eps_+) = {eps_plus.real:.3e} > 0: the quadratic spectrum formula "
            "only holds in the unbroken phase"
        )
    modes = [(n, m, n * eps_plus + m * eps_minus)
             for n in range(n_max + 1) for m in range(m_max + 1)]
    lam_vals = np.array([mo[2] for mo in modes])
    order = np.lexsort((lam_vals.imag, np.abs(lam_vals.imag), -lam_vals.real))
    return QuadraticSpectrum(eps_plus=eps_plus, eps_minus=eps_minus,
                             modes=tuple(modes[i] for i in order))


def analytic_gap(omega: float, lam: float, kappa1: float) -> float:
    """Dissipative gap kappa1 - Re sqrt(4 lambda^2 - omega^2), clipped at zero."""
    root = cmath.sqrt(complex(4.0 * lam * lam - omega * omega))
    return max(kappa1 - root.real, 0.0)
