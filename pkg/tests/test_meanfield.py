import cmath
import math

import numpy as np
import pytest

from disscat.fock import FockSpace, Operator, annihilation, coherent_state
from disscat.lindblad import LindbladModel, apply
from disscat.meanfield import boundary_lambda, residual, solve
from disscat.thirdq import analytic_gap


def model(omega=0.0, lam=0.0, k1=0.0, k2=1.0, kd=0.0, dim=4):
    return LindbladModel(omega, lam, k1, k2, kd, FockSpace(dim))


def test_pure_drive_cat_amplitude():
    N = 5.0
    mf = solve(model(lam=N, k2=1.0))
    assert mf.phase == "broken"
    assert mf.population == pytest.approx(N)
    assert cmath.phase(mf.alpha) == pytest.approx(math.pi / 4)


def test_unbroken_below_threshold():
    mf = solve(model(omega=1.0, lam=0.3, k2=1.0))
    assert mf.phase == "unbroken"
    assert mf.alpha == 0
    assert mf.population == 0.0


def test_exact_boundary_population_vanishes():
    # omega=1, kappa1+kappad=2: critical at lam = sqrt(5)/2
    lam_c = math.sqrt(5) / 2
    mf = solve(model(omega=1.0, lam=lam_c, k1=1.5, kd=0.5, k2=1.0))
    assert mf.boundary_lambda == pytest.approx(lam_c)
    assert mf.population == 0.0
    just_above = solve(model(omega=1.0, lam=lam_c * (1 + 1e-6), k1=1.5, kd=0.5, k2=1.0))
    assert just_above.phase == "broken"
    assert 0 < just_above.population < 1e-4


def test_residual_trivial_fixed_point():
    assert residual(model(omega=0.7, lam=1.2, k1=0.3, kd=0.1), 0j) == 0


def test_residual_vanishes_at_solution(rng):
    for _ in range(20):
        m = model(omega=rng.uniform(-1, 1), lam=rng.uniform(0.8, 3.0),
                  k1=rng.uniform(0, 0.5), k2=rng.uniform(0.2, 2.0),
                  kd=rng.uniform(0, 0.5))
        mf = solve(m)
        if mf.phase != "broken":
            continue
        scale = max(abs(mf.alpha), 1.0)
        assert abs(residual(m, mf.alpha)) < 1e-12 * scale * max(m.lam, 1.0)
        # Z2 covariance: the partner root is -alpha
        assert abs(residual(m, -mf.alpha)) < 1e-12 * scale * max(m.lam, 1.0)


def test_residual_sign_flip_symmetry(rng):
    m = model(omega=0.4, lam=1.5, k1=0.2, kd=0.1, k2=0.7)
    for _ in range(10):
        alpha = complex(rng.normal(), rng.normal())
        assert abs(residual(m, alpha)) == pytest.approx(abs(residual(m, -alpha)), rel=1e-12)


def test_kappa2_zero_broken_population_infinite():
    mf = solve(model(omega=1.0, lam=2.0, k1=0.5, k2=0.0))
    assert mf.phase == "broken"
    assert math.isinf(mf.population)


def test_boundary_consistent_with_analytic_gap():
    # the phase flag flips exactly where the quadratic-limit gap reaches zero
    # (kappad folded into kappa1)
    omega = 1.0
    for kappa in (0.5, 1.0, 2.0, 3.0):
        lam_c = boundary_lambda(omega, kappa, 0.0)
        assert analytic_gap(omega, lam_c, kappa) == pytest.approx(0.0, abs=1e-12)
        assert analytic_gap(omega, lam_c * 0.99, kappa) > 0
        assert solve(model(omega=omega, lam=lam_c * 1.01, k1=kappa)).phase == "broken"
        assert solve(model(omega=omega, lam=lam_c * 0.99, k1=kappa)).phase == "unbroken"


def test_omega_zero_boundary_limit():
    # continuity of the omega -> 0 limit: broken iff 2 lam > kappa1 + kappad
    assert solve(model(lam=1.01, k1=1.0, kd=1.0)).phase == "broken"
    assert solve(model(lam=0.99, k1=1.0, kd=1.0)).phase == "unbroken"


def test_dynamical_consistency_on_coherent_ansatz(rng):
    # Tr[a L(rho)] on a coherent state equals the mean-field right-hand side
    # (the cubic moment factorizes exactly for coherent states)
    alpha = 1.1 + 0.6j
    dim = max(int(4 * abs(alpha) ** 2) + 10, 30)
    m = model(omega=0.8, lam=0.9, k1=0.3, k2=0.4, kd=0.2, dim=dim)
    ket = coherent_state(m.space, alpha)
    rho = ket.projector()
    a = annihilation(m.space).matrix
    drho = apply(m, rho).matrix
    lhs = np.trace(a @ drho)
    rhs = residual(m, alpha)
    assert abs(lhs - rhs) < 1e-6 * max(abs(rhs), 1.0)
