import math

import numpy as np
import pytest

from conftest import random_density, random_hermitian
from disscat.fock import FockSpace, Operator, cat_state, fock_state, parity
from disscat.lindblad import LindbladModel, apply
from disscat.protocol import (
    QuenchSpec,
    evolve,
    evolve_many,
    extract_qubit_structure,
    fidelity,
    purity,
    run_quench,
    trace_distance,
)
from disscat.spectra import steady_states


def model(omega=0.0, lam=0.0, k1=0.0, k2=0.0, kd=0.0, dim=8):
    return LindbladModel(omega, lam, k1, k2, kd, FockSpace(dim))


def dfs_base(N, dim=None):
    dim = dim or max(int(4 * N) + 20, 40)
    return LindbladModel(0.0, float(N), 0.0, 1.0, 0.0, FockSpace(dim))


def test_evolve_identity_at_zero_time(rng):
    m = model(omega=0.5, lam=0.4, k2=0.3, dim=10)
    rho = Operator(m.space, random_density(rng, 10))
    out = evolve(m, rho, 0.0)
    assert np.array_equal(out.matrix, rho.matrix)


def test_steady_state_is_fixed_point():
    m = model(omega=1.0, k2=1.0, dim=14)
    (label, r, l), *_ = steady_states(m)
    t = 10.0 / m.kappa2
    out = evolve(m, r, t)
    assert np.linalg.norm(out.matrix - r.matrix) < 1e-9


def test_two_level_decay_closed_form():
    m = model(k1=1.0, dim=2)
    rho0 = fock_state(m.space, 1).projector()
    for t in (0.1, 0.5, 1.3):
        out = evolve(m, rho0, t).matrix
        expected = np.diag([1.0 - math.exp(-2.0 * t), math.exp(-2.0 * t)])
        assert np.linalg.norm(out - expected) < 1e-10


def test_evolve_methods_agree(rng):
    m = model(omega=0.4, lam=0.5, k1=0.2, k2=0.3, dim=8)
    rho = Operator(m.space, random_density(rng, 8))
    t = 0.7
    spectral = evolve(m, rho, t, method="spectral").matrix
    integrated = evolve(m, rho, t, method="integrate").matrix
    assert np.linalg.norm(spectral - integrated) < 1e-8


def test_evolve_preserves_trace_hermiticity_positivity(rng):
    m = model(omega=0.6, lam=1.2, k2=0.4, kd=0.1, dim=20)
    full = np.zeros((20, 20), dtype=complex)
    full[:12, :12] = random_density(rng, 12)
    out = evolve(m, Operator(m.space, full), 2.0).matrix
    assert abs(np.trace(out) - 1.0) < 1e-8
    assert np.linalg.norm(out - out.conj().T) < 1e-10
    assert np.linalg.eigvalsh(0.5 * (out + out.conj().T)).min() > -1e-8


def test_parity_conserved_under_strong_evolution(rng):
    m = model(omega=0.8, lam=0.9, k2=0.5, kd=0.2, dim=16)
    full = np.zeros((16, 16), dtype=complex)
    full[:10, :10] = random_density(rng, 10)
    P = parity(m.space).matrix
    value0 = np.trace(P @ full)
    for t in np.linspace(0.0, 10.0 / m.kappa2, 6):
        out = evolve(m, Operator(m.space, full), float(t)).matrix
        assert abs(np.trace(P @ out) - value0) < 1e-8


def test_fidelity_identity_and_orthogonal(rng):
    rho = Operator(FockSpace(4), random_density(rng, 4))
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    s = FockSpace(4)
    assert fidelity(fock_state(s, 0).projector(), fock_state(s, 1).projector()) == pytest.approx(0.0, abs=1e-12)


def test_fidelity_against_svd_oracle(rng):
    import scipy.linalg as la

    s = FockSpace(3)
    for _ in range(20):
        a = random_density(rng, 3)
        b = random_density(rng, 3)
        # independent route: nuclear norm of sqrt(a) sqrt(b)
        ra = la.sqrtm(a)
        rb = la.sqrtm(b)
        oracle = float(np.sum(np.linalg.svd(ra @ rb, compute_uv=False)) ** 2)
        value = fidelity(Operator(s, a), Operator(s, b))
        assert value == pytest.approx(oracle, abs=1e-10)


def test_fidelity_symmetry(rng):
    s = FockSpace(5)
    for _ in range(10):
        a = Operator(s, random_density(rng, 5))
        b = Operator(s, random_density(rng, 5))
        assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-10)


def test_fidelity_rejects_large_negativity(rng):
    s = FockSpace(3)
    bad = np.diag([1.2, -0.2, 0.0]).astype(complex)
    with pytest.raises(ValueError):
        fidelity(Operator(s, bad), Operator(s, np.eye(3) / 3))


def test_trace_distance_metric(rng):
    s = FockSpace(4)
    a = random_hermitian(rng, 4)
    assert trace_distance(a, a) == 0.0
    assert trace_distance(fock_state(s, 0).projector().matrix,
                          fock_state(s, 1).projector().matrix) == pytest.approx(1.0)
    for _ in range(50):
        x = random_hermitian(rng, 4)
        y = random_hermitian(rng, 4)
        z = random_hermitian(rng, 4)
        assert trace_distance(x, z) <= trace_distance(x, y) + trace_distance(y, z) + 1e-12


def test_quench_spec_validation():
    base = dfs_base(2, dim=30)
    with pytest.raises(ValueError):
        QuenchSpec(LindbladModel(0.1, 2.0, 0.0, 1.0, 0.0, base.space), tau_q=1.0)
    with pytest.raises(ValueError):
        QuenchSpec(base, tau_q=-1.0)
    with pytest.raises(ValueError):
        QuenchSpec(base, tau_q=1.0, c_even=1.0, c_odd=1.0)


def test_quench_without_error_is_perfect():
    base = dfs_base(3, dim=36)
    rep = run_quench(QuenchSpec(base, tau_q=3.0))
    assert 1.0 - rep.fidelity < 1e-9
    assert rep.corrected


def test_extract_qubit_structure_at_dfs_point():
    base = dfs_base(4, dim=40)
    spec = QuenchSpec(base, tau_q=0.0)
    rho_i = spec.initial_ket().projector()
    qubit, M, deviation = extract_qubit_structure(rho_i, base)
    assert deviation < 1e-10
    assert purity(M) == pytest.approx(1.0, abs=1e-10)
    expected = np.array([[0.5, -0.5j], [0.5j, 0.5]])
    assert np.allclose(qubit, expected, atol=1e-9)


def test_qubit_block_converges_with_N():
    devs = []
    for N in (3, 5):
        base = dfs_base(N)
        rep = run_quench(QuenchSpec(base, tau_q=10.0 / N, delta_kappad=0.03 * N))
        expected = np.array([[0.5, -0.5j], [0.5j, 0.5]])
        devs.append(np.linalg.norm(rep.qubit_block - expected))
    assert devs[1] < devs[0]


def test_weak_error_reports_fidelity_only():
    base = dfs_base(3, dim=36)
    rep = run_quench(QuenchSpec(base, tau_q=1.0, delta_kappa1=0.3 * 3))
    assert 0.0 <= rep.fidelity <= 1.0
    assert math.isnan(rep.purity_M)
    assert math.isnan(rep.gamma_f.real)


def test_cat_qubit_initial_state_is_dark():
    # a little cutoff headroom beyond the 4N+20 rule: the residual is set by
    # the clipped tail that the two-photon drive pushes past the cutoff
    base = dfs_base(5, dim=48)
    spec = QuenchSpec(base, tau_q=1.0)
    rho_i = spec.initial_ket().projector()
    out = apply(base, rho_i)
    assert np.linalg.norm(out.matrix) < 1e-9 * base.kappa2


def test_evolve_many_consistency(rng):
    m = model(omega=0.3, lam=0.4, k2=0.5, dim=12)
    full = np.zeros((12, 12), dtype=complex)
    full[:8, :8] = random_density(rng, 8)
    op = Operator(m.space, full)
    ts = [0.0, 0.2, 1.0]
    many = evolve_many(m, op, ts)
    for t, out in zip(ts, many):
        single = evolve(m, op, t)
        assert np.linalg.norm(out.matrix - single.matrix) < 1e-11
