import math

import numpy as np
import pytest

from conftest import assert_multisets_close
from disscat.fock import FockSpace
from disscat.lindblad import LindbladModel
from disscat.meanfield import boundary_lambda
from disscat.spectra import boundary_leakage_per_mode, eig_sectors
from disscat.symmetry import decompose_model
from disscat.thirdq import BrokenPhase, analytic_gap, many_body, single_particle


def test_single_particle_no_drive():
    ep, em = single_particle(omega=0.9, lam=0.0, kappa1=0.5)
    assert ep == pytest.approx(-0.5 + 0.9j)
    assert em == pytest.approx(-0.5 - 0.9j)


def test_single_particle_boundary_value():
    # kappa1/omega = 2 crosses zero exactly at lam/omega = sqrt(5)/2
    ep, em = single_particle(omega=1.0, lam=math.sqrt(5) / 2, kappa1=2.0)
    assert abs(ep) < 1e-14
    assert em == pytest.approx(-4.0)


def test_single_particle_pure_drive():
    ep, em = single_particle(omega=0.0, lam=1.0, kappa1=0.0)
    assert ep == pytest.approx(2.0)
    assert em == pytest.approx(-2.0)


def test_vieta_identities(rng):
    for _ in range(50):
        omega = rng.uniform(-2, 2)
        lam = rng.uniform(0, 2)
        kappa1 = rng.uniform(0, 2)
        ep, em = single_particle(omega, lam, kappa1)
        scale = max(abs(ep), abs(em), 1.0)
        assert abs(ep + em + 2 * kappa1) < 1e-14 * scale
        assert abs(ep * em - (kappa1**2 - (4 * lam**2 - omega**2))) < 1e-14 * scale**2


def test_many_body_zero_mode_unique():
    sp = single_particle(1.0, 0.3, 1.5)
    spec = many_body(sp, 4, 4)
    zeros = [mo for mo in spec.modes if abs(mo[2]) < 1e-14]
    assert zeros == [(0, 0, 0j)]


def test_many_body_broken_phase_rejected():
    sp = single_particle(1.0, 2.0, 1.0)  # Re eps_+ > 0
    assert sp[0].real > 0
    with pytest.raises(BrokenPhase):
        many_body(sp, 3, 3)


def test_many_body_conjugation_closure():
    sp = single_particle(1.0, 0.3, 1.0)  # lam < omega/2: eps_- = conj(eps_+)
    assert sp[1] == pytest.approx(np.conj(sp[0]))
    spec = many_body(sp, 4, 4)
    vals = np.array([mo[2] for mo in spec.modes])
    assert_multisets_close(vals, vals.conj(), atol=1e-12)


def test_many_body_matches_exact_diagonalization():
    # deep in the unbroken phase the truncated spectrum reproduces the grid
    omega, lam, kappa1 = 1.0, 0.2, 2.0
    m = LindbladModel(omega, lam, kappa1, 0.0, 0.0, FockSpace(40))
    spectral = eig_sectors(decompose_model(m), want_left=False)
    entries = []
    for sec in spectral.sectors:
        leak = boundary_leakage_per_mode(spectral, sec.label)
        entries.extend((abs(w), w, leak[j]) for j, w in enumerate(sec.eigenvalues))
    entries.sort(key=lambda e: e[0])
    kept = [e[1] for e in entries if e[2] <= 1e-6][:25]

    grid = np.array([mo[2] for mo in many_body(single_particle(omega, lam, kappa1), 24, 24).modes])
    errs = [np.min(np.abs(grid - w)) for w in kept]
    assert max(errs) < 1e-6


def test_many_body_vs_ed_higher_drive_low_excitations():
    # at lam/omega = 0.8 the slow quasiparticle flavor climbs to high
    # excitation among the smallest-|Lambda| modes; those converge slowly in
    # the cutoff, so the sharp check is restricted to low total excitation
    omega, lam, kappa1 = 1.0, 0.8, 2.0
    m = LindbladModel(omega, lam, kappa1, 0.0, 0.0, FockSpace(40))
    spectral = eig_sectors(decompose_model(m), want_left=False)
    allw = np.concatenate([sec.eigenvalues for sec in spectral.sectors])
    ep, em = single_particle(omega, lam, kappa1)
    errs = [np.min(np.abs(allw - (n * ep + k * em)))
            for n in range(4) for k in range(4 - n)]
    assert max(errs) < 1e-5


def test_analytic_gap_values():
    assert analytic_gap(1.0, 0.0, 2.0) == pytest.approx(2.0)
    assert analytic_gap(1.0, math.sqrt(5) / 2, 2.0) == pytest.approx(0.0, abs=1e-12)
    # beyond the boundary the gap clips at zero
    assert analytic_gap(1.0, 2.0, 1.0) == 0.0


def test_gap_zero_locus_matches_mean_field_boundary():
    for lam in np.linspace(0.6, 3.0, 20):
        kappa1 = math.sqrt(4 * lam**2 - 1.0)  # mean-field boundary at omega=1, kappad=0
        assert analytic_gap(1.0, lam, kappa1) < 1e-10
        assert boundary_lambda(1.0, kappa1, 0.0) == pytest.approx(lam, abs=1e-10)


def test_modes_sorted_like_spectra():
    sp = single_particle(1.0, 0.3, 1.5)
    spec = many_body(sp, 3, 3)
    vals = [mo[2] for mo in spec.modes]
    resorted = sorted(vals, key=lambda z: (-z.real, abs(z.imag), z.imag))
    assert vals == resorted
