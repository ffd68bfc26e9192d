"""Mean-field steady state of the order parameter <a>.

The field equation closes as

    d<a>/dt = 2 i lam <a^dag> + (i omega - kappa1 - kappad) <a> - 2 kappa2 <a^dag a^2>,

(the expectation of the generator acting on a; see lindblad for the
orientation convention) and carries the Z2 covariance alpha -> -alpha.
Factorizing <a^dag a^2> ~ |alpha|^2 alpha gives the critical boundary

    (kappa1 + kappad) / omega = sqrt(4 (lam/omega)^2 - 1)

and, in the broken phase,

    |alpha|^2 = [sqrt(4 lam^2 - omega^2) - (kappa1 + kappad)] / (2 kappa2),
    arg(alpha) = arccos(-omega / (2 lam)) / 2  in [0, pi/2].
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .lindblad import LindbladModel


@dataclass(frozen=True)
class MeanFieldSolution:
    alpha: complex
    population: float
    phase: str  # 'broken' | 'unbroken'
    boundary_lambda: float

    @property
    def broken(self) -> bool:
        return self.phase == "broken"


def boundary_lambda(omega: float, kappa1: float, kappad: float) -> float:
    """Critical drive strength at fixed (omega, kappa1, kappad).

    Algebraically sqrt(omega^2 + (kappa1+kappad)^2)/2, which extends
    continuously to omega = 0 where the boundary is 2 lam = kappa1 + kappad.
    """
    kappa = kappa1 + kappad
    return 0.5 * math.hypot(omega, kappa)


def solve(model: LindbladModel) -> MeanFieldSolution:
    """Steady-state order parameter; the partner root is always -alpha."""
    kappa = model.kappa1 + model.kappad
    lam_c = boundary_lambda(model.omega, model.kappa1, model.kappad)
    disc = 4.0 * model.lam ** 2 - model.omega ** 2
    if model.lam <= lam_c or disc <= 0:
        return MeanFieldSolution(alpha=0j, population=0.0, phase="unbroken",
                                 boundary_lambda=lam_c)
    theta = 0.5 * math.acos(max(-1.0, min(1.0, -model.omega / (2.0 * model.lam))))
    if model.kappa2 == 0:
        # No nonlinearity to saturate the instability: flag a diverging population.
        return MeanFieldSolution(alpha=math.inf * cmath.exp(1j * theta),
                                 population=math.inf, phase="broken",
                                 boundary_lambda=lam_c)
    population = (math.sqrt(disc) - kappa) / (2.0 * model.kappa2)
    alpha = math.sqrt(population) * cmath.exp(1j * theta)
    return MeanFieldSolution(alpha=alpha, population=population, phase="broken",
                             boundary_lambda=lam_c)


def residual(model: LindbladModel, alpha: complex) -> complex:
    """d<a>/dt at the mean-field closure; vanishes exactly at fixed points."""
    return (2j * model.lam * alpha.conjugate()
            + (1j * model.omega - model.kappa1 - model.kappad) * alpha
            - 2.0 * model.kappa2 * abs(alpha) ** 2 * alpha)
