"""Dense non-Hermitian eigendecomposition of the superparity blocks.

Each sector block is diagonalized with left and right eigenvectors from the
same LAPACK reduction. Degenerate clusters are biorthonormalized by inverting
the left/right overlap matrix of the cluster; a pairing matrix that is
numerically singular signals a genuine Jordan block and raises
DefectiveBlock.

For strong decompositions the -+ sector is obtained from the +- sector by
Hermitian conjugation of the eigenoperators (the generator preserves
Hermiticity, so the two blocks carry conjugate spectra), which saves one
O(n^3) diagonalization and makes the conjugate-pair structure exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as la

from .fock import FockSpace, Operator
from .lindblad import LindbladModel, superoperator, unvec
from .symmetry import (
    OFFDIAGONAL_LABELS,
    SectorDecomposition,
    classify,
    decompose,
)

ZERO_TOL_FACTOR = 1e-8
CLUSTER_RTOL = 1e-7
PAIR_COND_LIMIT = 1e8


class DefectiveBlock(RuntimeError):
    """Biorthonormalization failed: Jordan block or near-degenerate pairing."""

    def __init__(self, label: str, condition: float):
        super().__init__(
            f"sector {label}: left/right pairing condition {condition:.3e} exceeds "
            f"{PAIR_COND_LIMIT:.0e} (Jordan block or near-degeneracy); consider a "
            "1e-9 relative parameter perturbation"
        )
        self.label = label
        self.condition = condition


@dataclass(eq=False)
class SectorSpectrum:
    label: str
    indices: np.ndarray
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray | None
    zero_modes: np.ndarray
    spectral_radius: float
    pair_condition: float
    mode_conditions: np.ndarray | None = None  # ||l_j|| ||r_j|| per mode

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def trusted_modes(self, eps_budget: float = 1e-9) -> np.ndarray:
        """Modes whose pairing condition keeps round-off below eps_budget."""
        if self.mode_conditions is None:
            return np.arange(self.size)
        return np.flatnonzero(self.mode_conditions * np.finfo(float).eps < eps_budget)


@dataclass(eq=False)
class SpectralData:
    space: FockSpace
    mode: str
    sectors: tuple
    zero_tol_factor: float = ZERO_TOL_FACTOR

    def sector(self, label: str) -> SectorSpectrum:
        for s in self.sectors:
            if s.label == label:
                return s
        raise KeyError(label)

    @property
    def labels(self) -> tuple:
        return tuple(s.label for s in self.sectors)

    def all_eigenvalues(self) -> np.ndarray:
        return np.concatenate([s.eigenvalues for s in self.sectors])

    def embed(self, sector: SectorSpectrum, column: np.ndarray) -> Operator:
        d = self.space.dim
        full = np.zeros(d * d, dtype=complex)
        full[sector.indices] = column
        return Operator(self.space, unvec(full, d))

    def right_operator(self, label: str, j: int) -> Operator:
        s = self.sector(label)
        return self.embed(s, s.right[:, j])

    def left_operator(self, label: str, j: int) -> Operator:
        s = self.sector(label)
        if s.left is None:
            raise ValueError("left eigenoperators were not computed")
        return self.embed(s, s.left[:, j])

    @property
    def max_pair_condition(self) -> float:
        return max(s.pair_condition for s in self.sectors)


def _sort_order(w: np.ndarray) -> np.ndarray:
    """Descending real part, ties by ascending |Im|, then ascending Im."""
    return np.lexsort((w.imag, np.abs(w.imag), -w.real))


def _cluster_spans(w: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group eigenvalue positions whose values chain within tol of each other."""
    order = np.lexsort((w.imag, w.real))
    spans = []
    current = [order[0]]
    for prev, pos in zip(order[:-1], order[1:]):
        if abs(w[pos] - w[prev]) <= tol:
            current.append(pos)
        else:
            spans.append(np.array(current))
            current = [pos]
    spans.append(np.array(current))
    return spans


def _biorthonormalize(label: str, w: np.ndarray, vl: np.ndarray, vr: np.ndarray,
                      cluster_rtol: float, cond_limit: float,
                      zero_tol_factor: float) -> tuple[np.ndarray, float]:
    """Rescale/mix left vectors so Tr[l_j^dag r_k] = delta_jk; return (vl, cluster cond).

    A badly conditioned pairing is fatal only where the steady-state
    extraction lives: in a cluster containing the sector's smallest-|Lambda|
    mode (or any mode below the zero tolerance), it raises DefectiveBlock.
    Elsewhere the failing cluster is normalized mode by mode and its blowup
    is carried by mode_conditions, which the evolution layer turns into a
    time-weighted error bound: both deep non-normal decay chains and the
    exponentially merging excited doublets of the broken phase fall in this
    tolerated class.
    """
    radius = float(np.max(np.abs(w))) if len(w) else 0.0
    tol = cluster_rtol * max(radius, 1e-300)
    critical_abs = max(100.0 * zero_tol_factor * radius, float(np.min(np.abs(w))) * 1.001)
    worst = 1.0
    suspect = []
    for span in _cluster_spans(w, tol):
        critical = bool(np.min(np.abs(w[span])) <= critical_abs)
        if len(span) == 1:
            j = span[0]
            s = np.vdot(vl[:, j], vr[:, j])
            if abs(s) > 0:
                vl[:, j] = vl[:, j] / np.conj(s)
            if critical and 1.0 / max(abs(s), 1e-300) > cond_limit:
                suspect.append(j)
        else:
            S = vl[:, span].conj().T @ vr[:, span]
            sv = np.linalg.svd(S, compute_uv=False)
            # With unit-norm columns on both sides, 1/sigma_min(S) is the norm
            # blowup of the dual (biorthogonal) basis: the pairing condition.
            cond = 1.0 / max(sv[-1], 1e-300)
            if cond > cond_limit:
                if critical:
                    raise DefectiveBlock(label, cond)
                for j in span:
                    s = np.vdot(vl[:, j], vr[:, j])
                    if abs(s) > 0:
                        vl[:, j] = vl[:, j] / np.conj(s)
            else:
                vl[:, span] = vl[:, span] @ np.linalg.inv(S).conj().T
                worst = max(worst, cond)
    # A Jordan block whose numerically smeared eigenvalues land wider apart
    # than the clustering tolerance shows up as an ill-conditioned singleton
    # next to other eigenvalues; flag it when it touches the extraction zone.
    if suspect:
        window = max(tol, radius * np.finfo(float).eps ** (1.0 / 3.0))
        for j in suspect:
            dist = np.abs(w - w[j])
            dist[j] = np.inf
            if dist.min() < window:
                raise DefectiveBlock(label, float(np.linalg.norm(vl[:, j])))
    return vl, worst


def _conjugate_partner(space_dim: int, src: SectorSpectrum, dst_label: str,
                       dst_indices: np.ndarray, zero_tol_factor: float) -> SectorSpectrum:
    """Build the -+ sector spectrum from the +- one via r -> r^dag."""
    d = space_dim
    partner_vec = (src.indices % d) * d + src.indices // d
    pos = np.searchsorted(dst_indices, partner_vec)
    right = np.zeros((len(dst_indices), src.size), dtype=complex)
    right[pos, :] = src.right.conj()
    left = None
    if src.left is not None:
        left = np.zeros_like(right)
        left[pos, :] = src.left.conj()
    w = src.eigenvalues.conj()
    order = _sort_order(w)
    w = w[order]
    right = right[:, order]
    left = left[:, order] if left is not None else None
    mode_cond = src.mode_conditions[order] if src.mode_conditions is not None else None
    zero = np.flatnonzero(np.abs(w) < zero_tol_factor * max(src.spectral_radius, 1e-300))
    return SectorSpectrum(
        label=dst_label,
        indices=dst_indices,
        eigenvalues=w,
        right=right,
        left=left,
        zero_modes=zero,
        spectral_radius=src.spectral_radius,
        pair_condition=src.pair_condition,
        mode_conditions=mode_cond,
    )


def eig_sectors(decomp: SectorDecomposition, *, want_left: bool = True,
                zero_tol_factor: float = ZERO_TOL_FACTOR,
                cluster_rtol: float = CLUSTER_RTOL,
                cond_limit: float = PAIR_COND_LIMIT,
                derive_conjugate: bool = True) -> SpectralData:
    """Diagonalize every sector block of a decomposition."""
    d = decomp.space.dim
    sectors: dict[str, SectorSpectrum] = {}
    for sec in decomp.sectors:
        if (decomp.mode == "strong" and sec.label == "-+" and derive_conjugate
                and "+-" in sectors):
            sectors["-+"] = _conjugate_partner(d, sectors["+-"], "-+", sec.indices,
                                               zero_tol_factor)
            continue
        if want_left:
            w, vl, vr = la.eig(sec.block, left=True, right=True)
        else:
            w, vr = la.eig(sec.block, left=False, right=True)
            vl = None
        order = _sort_order(w)
        w = w[order]
        vr = np.ascontiguousarray(vr[:, order])
        pair_cond = 1.0
        mode_cond = None
        if want_left:
            vl = np.ascontiguousarray(vl[:, order])
            vl, pair_cond = _biorthonormalize(sec.label, w, vl, vr, cluster_rtol,
                                              cond_limit, zero_tol_factor)
            mode_cond = np.linalg.norm(vl, axis=0) * np.linalg.norm(vr, axis=0)
        radius = float(np.max(np.abs(w))) if len(w) else 0.0
        zero = np.flatnonzero(np.abs(w) < zero_tol_factor * max(radius, 1e-300))
        sectors[sec.label] = SectorSpectrum(
            label=sec.label,
            indices=sec.indices,
            eigenvalues=w,
            right=vr,
            left=vl,
            zero_modes=zero,
            spectral_radius=radius,
            pair_condition=pair_cond,
            mode_conditions=mode_cond,
        )
    ordered = tuple(sectors[s.label] for s in decomp.sectors)
    return SpectralData(space=decomp.space, mode=decomp.mode, sectors=ordered,
                        zero_tol_factor=zero_tol_factor)


@lru_cache(maxsize=3)
def _spectral_cache(model: LindbladModel, want_left: bool) -> SpectralData:
    sym = classify(model)
    if sym.kind == "none":
        raise ValueError("model carries no parity symmetry; cannot sector-decompose")
    decomp = decompose(superoperator(model), sym)
    return eig_sectors(decomp, want_left=want_left)


def spectral_data(model: LindbladModel, *, want_left: bool = True) -> SpectralData:
    """Cached full sector eigendecomposition of a model."""
    if not want_left:
        # A left-equipped result serves value-only callers too.
        try:
            return _spectral_cache(model, True)
        except Exception:
            return _spectral_cache(model, False)
    return _spectral_cache(model, True)


def steady_states(model: LindbladModel) -> list[tuple[str, Operator, Operator]]:
    """Zero modes per sector: (label, right, left) with the contract normalization.

    Diagonal-sector right operators are unit trace, off-diagonal ones unit
    Hilbert-Schmidt norm; left operators keep Tr[l^dag r] = 1.
    """
    spectral = spectral_data(model, want_left=True)
    out = []
    for sec in spectral.sectors:
        for j in sec.zero_modes:
            r = spectral.embed(sec, sec.right[:, j])
            l = spectral.embed(sec, sec.left[:, j])
            if sec.label in ("++", "--", "+"):
                c = np.trace(r.matrix)
            else:
                c = np.linalg.norm(r.matrix)
            if abs(c) < 1e-14:
                c = 1.0
            r = Operator(r.space, r.matrix / c)
            l = Operator(l.space, l.matrix * np.conj(c))
            out.append((sec.label, r, l))
    return out


def dissipative_gap(spectral: SpectralData, *, broken: bool = False) -> float:
    """-Re of the slowest nonzero decay mode.

    Zero modes (|Lambda| below the zero tolerance of their sector) are always
    excluded. With broken=True the smallest-|Lambda| mode of each
    off-diagonal sector is excluded as well: in the symmetry-broken phase
    those modes are exponentially split pseudo-zeros, not relaxation rates.
    """
    candidates = []
    for sec in spectral.sectors:
        drop = set(int(k) for k in sec.zero_modes)
        if broken and sec.label in OFFDIAGONAL_LABELS and sec.size > len(drop):
            alive = [k for k in range(sec.size) if k not in drop]
            drop.add(min(alive, key=lambda k: abs(sec.eigenvalues[k])))
        candidates.extend(sec.eigenvalues[k] for k in range(sec.size) if k not in drop)
    if not candidates:
        return 0.0
    return max(-max(z.real for z in candidates), 0.0)


def sector_eigenvalues(model: LindbladModel) -> dict[str, np.ndarray]:
    """Per-sector eigenvalues only (no eigenvectors); cheap probe path."""
    sym = classify(model)
    if sym.kind == "none":
        raise ValueError("model carries no parity symmetry; cannot sector-decompose")
    decomp = decompose(superoperator(model), sym)
    out = {}
    for sec in decomp.sectors:
        if decomp.mode == "strong" and sec.label == "-+" and "+-" in out:
            w = out["+-"].conj()
        else:
            w = la.eigvals(sec.block)
        out[sec.label] = w[_sort_order(w)]
    return out


def boundary_leakage_per_mode(spectral: SpectralData, label: str) -> np.ndarray:
    """Guard-band Hilbert-Schmidt leakage of each right eigenoperator in a sector."""
    from .lindblad import guard_band

    sec = spectral.sector(label)
    d = spectral.space.dim
    g = guard_band(d)
    m = sec.indices % d
    n = sec.indices // d
    hot = (m >= g) | (n >= g)
    weight = np.sum(np.abs(sec.right) ** 2, axis=0)
    hot_weight = np.sum(np.abs(sec.right[hot, :]) ** 2, axis=0)
    return hot_weight / np.maximum(weight, 1e-300)
