import numpy as np
import pytest

from conftest import assert_multisets_close
from disscat.fock import FockSpace, fock_state
from disscat.lindblad import LindbladModel, superoperator, unvec, vec
from disscat.spectra import (
    DefectiveBlock,
    boundary_leakage_per_mode,
    dissipative_gap,
    eig_sectors,
    sector_eigenvalues,
    spectral_data,
    steady_states,
)
from disscat.symmetry import decompose_model
from disscat.thirdq import analytic_gap


def model(omega=0.0, lam=0.0, k1=0.0, k2=0.0, kd=0.0, dim=8):
    return LindbladModel(omega, lam, k1, k2, kd, FockSpace(dim))


def test_diagonal_sectors_hold_zero_modes():
    m = model(omega=1.0, lam=0.4, k2=0.6, kd=0.15, dim=16)
    spectral = spectral_data(m)
    assert len(spectral.sector("++").zero_modes) >= 1
    assert len(spectral.sector("--").zero_modes) >= 1


def test_two_photon_zero_modes_span_lowest_projectors():
    # two-photon loss with detuning only: kernel is |0><0| and |1><1|
    m = model(omega=1.0, k2=1.0, dim=12)
    states = steady_states(m)
    labels = [s[0] for s in states]
    assert labels == ["++", "--"]
    r_pp = states[0][1].matrix
    r_mm = states[1][1].matrix
    assert np.linalg.norm(r_pp - fock_state(m.space, 0).projector().matrix) < 1e-8
    assert np.linalg.norm(r_mm - fock_state(m.space, 1).projector().matrix) < 1e-8


def test_d2_single_photon_spectrum():
    omega = 0.7
    m = model(omega=omega, k1=1.0, dim=2)
    vals = np.concatenate(list(sector_eigenvalues(m).values()))
    expected = np.array([0.0, -2.0, -1.0 - 1j * omega, -1.0 + 1j * omega])
    for e in expected:
        assert np.min(np.abs(vals - e)) < 1e-12


def test_eigenvalue_sort_order():
    # d=2 one-photon loss: descending Re, |Im| ties broken by ascending Im
    omega = 0.7
    m = model(omega=omega, k1=1.0, dim=2)
    spectral = spectral_data(m)
    allw = np.concatenate([s.eigenvalues for s in spectral.sectors])
    ordered = sorted(allw, key=lambda z: (-z.real, abs(z.imag), z.imag))
    expected = [0.0, -1.0 - 1j * omega, -1.0 + 1j * omega, -2.0]
    assert np.allclose(ordered, expected, atol=1e-12)
    # the weak minus sector itself is sorted by the same rule
    w = spectral.sector("-").eigenvalues
    assert np.allclose(w, [-1.0 - 1j * omega, -1.0 + 1j * omega], atol=1e-12)


def test_biorthonormality_among_trusted_modes():
    m = model(omega=0.8, lam=0.5, k2=0.4, kd=0.2, dim=12)
    spectral = spectral_data(m)
    for sec in spectral.sectors:
        keep = sec.trusted_modes(1e-9)
        G = sec.left[:, keep].conj().T @ sec.right[:, keep]
        assert np.linalg.norm(G - np.eye(len(keep))) < 1e-8 * max(len(keep), 1)


def test_eigen_residuals():
    m = model(omega=0.8, lam=0.5, k1=0.1, k2=0.4, dim=12)
    decomp = decompose_model(m)
    spectral = eig_sectors(decomp)
    for sec, dsec in zip(spectral.sectors, decomp.sectors):
        B = dsec.block
        R = B @ sec.right - sec.right * sec.eigenvalues[None, :]
        assert np.linalg.norm(R, axis=0).max() < 1e-8 * np.linalg.norm(B)


def test_conjugate_sector_pairing():
    m = model(omega=0.6, lam=0.9, k2=0.5, kd=0.1, dim=14)
    spectral = spectral_data(m)
    w_pm = spectral.sector("+-").eigenvalues
    w_mp = spectral.sector("-+").eigenvalues
    # conjugate spectra, mode by mode after re-matching
    assert_multisets_close(w_pm.conj(), w_mp, atol=1e-9 * max(np.max(np.abs(w_pm)), 1.0))


def test_derived_conjugate_sector_matches_direct_diagonalization():
    m = model(omega=0.6, lam=0.9, k2=0.5, kd=0.1, dim=10)
    decomp = decompose_model(m)
    derived = eig_sectors(decomp, derive_conjugate=True)
    direct = eig_sectors(decomp, derive_conjugate=False)
    wd = derived.sector("-+").eigenvalues
    wx = direct.sector("-+").eigenvalues
    assert_multisets_close(wd, wx, atol=1e-9 * np.max(np.abs(wx)))
    # derived right modes are true eigenvectors of the -+ block
    B = decomp.sector("-+").block
    R = B @ derived.sector("-+").right - derived.sector("-+").right * wd[None, :]
    assert np.linalg.norm(R, axis=0).max() < 1e-8 * np.linalg.norm(B)


def test_block_union_equals_full_spectrum():
    m = model(omega=0.5, lam=0.7, k1=0.15, k2=0.3, kd=0.1, dim=12)
    vals = np.concatenate(list(sector_eigenvalues(m).values()))
    full = np.linalg.eigvals(superoperator(m).matrix)
    assert_multisets_close(vals, full, atol=1e-8 * np.max(np.abs(full)))


def test_gap_two_level():
    m = model(k1=1.0, dim=2)
    spectral = spectral_data(m)
    assert dissipative_gap(spectral) == pytest.approx(1.0, abs=1e-12)


def test_gap_matches_quadratic_limit_formula():
    # kappa1/omega = 2, lam/omega = 0.5: analytic gap = kappa1. This point is
    # the exceptional point of the quadratic model (eps_+ = eps_-), where
    # dense eigenvalues smear by ~sqrt(eps ||M||); tolerance reflects that.
    m = model(omega=1.0, lam=0.5, k1=2.0, dim=40)
    spectral = spectral_data(m, want_left=False)
    gap = dissipative_gap(spectral)
    assert gap == pytest.approx(analytic_gap(1.0, 0.5, 2.0), abs=1e-5)
    assert gap == pytest.approx(2.0, abs=1e-5)


def test_gap_nonnegative(rng):
    for _ in range(5):
        m = model(omega=rng.uniform(-1, 1), lam=rng.uniform(0, 1),
                  k1=rng.uniform(0, 1), k2=rng.uniform(0.1, 1),
                  kd=rng.uniform(0, 1), dim=8)
        assert dissipative_gap(spectral_data(m, want_left=False)) >= 0.0


def test_steady_state_count_strong_unbroken():
    m = model(omega=1.0, lam=0.3, k2=1.0, kd=0.01, dim=20)
    assert len(steady_states(m)) == 2


def test_steady_state_count_strong_broken_deep():
    # at the decoherence-free point the off-diagonal zeros are exact: 4 states
    m = model(lam=4.0, k2=1.0, dim=36)
    states = steady_states(m)
    assert len(states) == 4
    assert sorted(s[0] for s in states) == ["++", "+-", "-+", "--"]
    # diagonal-sector states are unit trace, Hermitian, PSD
    for label, r, l in states:
        if label in ("++", "--"):
            assert np.trace(r.matrix).real == pytest.approx(1.0, abs=1e-9)
            assert np.linalg.norm(r.matrix - r.matrix.conj().T) < 1e-9
            assert np.linalg.eigvalsh(0.5 * (r.matrix + r.matrix.conj().T)).min() > -1e-9
        else:
            assert np.linalg.norm(r.matrix) == pytest.approx(1.0, abs=1e-9)
        assert abs(np.vdot(vec(l.matrix), vec(r.matrix)) - 1.0) < 1e-8


def test_weak_broken_near_zero_mode():
    # broken weak model: one exact zero plus an exponentially split partner
    # (the partner crosses the fixed zero tolerance only at larger N; its
    # N-scaling is what the acceptance suite asserts)
    N = 8.0
    m = model(omega=N / 2, lam=N, k1=0.02 * N / 2, k2=1.0, kd=0.0, dim=52)
    vals = sector_eigenvalues(m)
    assert np.min(np.abs(vals["+"])) < 1e-8 * np.max(np.abs(vals["+"]))
    split = np.min(np.abs(vals["-"]))
    assert split < 1e-4 * np.max(np.abs(vals["-"]))


def test_exponential_splitting_cheap_probe():
    # smallest +- eigenvalue shrinks by more than e when N grows 3 -> 5
    vals = {}
    for N in (3.0, 5.0):
        m = model(omega=N / 2, lam=N, k2=1.0, kd=0.005 * N / 2, dim=28)
        w = sector_eigenvalues(m)["+-"]
        vals[N] = np.min(np.abs(w))
    assert vals[3.0] / vals[5.0] > np.e


def test_defective_block_on_slow_jordan_pair():
    # a literal Jordan pair among the slow modes must be surfaced
    from disscat.lindblad import SuperOperator
    from disscat.symmetry import decompose

    d = 4
    M = np.zeros((d * d, d * d), dtype=complex)
    pp = [0, 2, 8, 10]  # vec indices with both parities even (d=4)
    M[pp[0], pp[0]] = -0.1
    M[pp[0], pp[1]] = 1e4  # strong off-diagonal coupling: kappa ~ 1e10
    M[pp[1], pp[1]] = -0.1
    M[pp[2], pp[2]] = -1.0
    M[pp[3], pp[3]] = -5.0
    decomp = decompose(SuperOperator(FockSpace(d), M), "strong")
    with pytest.raises(DefectiveBlock):
        eig_sectors(decomp, want_left=True)


def test_quadratic_exceptional_point_flags_conditioning():
    # at 4 lam^2 = omega^2 the quadratic model is defective; depending on the
    # smear-vs-cluster-window race this either raises or surfaces huge
    # per-mode conditions, and the evolve layer budgets for both
    m = model(omega=0.2, lam=0.1, k1=1.0, dim=12)
    decomp = decompose_model(m)
    try:
        s = eig_sectors(decomp, want_left=True)
    except DefectiveBlock:
        return
    worst = max(float(sec.mode_conditions.max()) for sec in s.sectors)
    assert worst > 1e6


def test_gap_broken_mode_excludes_split_pair():
    N = 6.0
    m = model(omega=N / 2, lam=N, k2=1.0, kd=0.01 * N / 2, dim=44)
    spectral = spectral_data(m, want_left=False)
    g_plain = dissipative_gap(spectral)
    g_broken = dissipative_gap(spectral, broken=True)
    assert g_broken >= g_plain
    assert g_broken > 0.1  # a real relaxation rate, not the split pseudo-zero


def test_boundary_leakage_per_mode_shape():
    m = model(omega=1.0, lam=0.3, k1=0.4, k2=0.0, kd=0.0, dim=20)
    spectral = spectral_data(m, want_left=False)
    leak = boundary_leakage_per_mode(spectral, "+")
    assert leak.shape == (spectral.sector("+").size,)
    assert np.all(leak >= 0) and np.all(leak <= 1 + 1e-12)
