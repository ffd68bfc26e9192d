"""Figure recipes: which CSVs feed each panel and how it is drawn.

Every recipe consumes CSV files produced by the disscat CLI and never
recomputes physics. Rendering is a pure function of the CSV content: fixed
style, no timestamps, so the same inputs give byte-identical output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.markersize": 4,
    "svg.hashsalt": "disscat-figures",
}


class MissingColumn(KeyError):
    def __init__(self, column: str, path):
        super().__init__(f"CSV {path} is missing required column {column!r}")
        self.column = column
        self.path = path


@dataclass(frozen=True)
class FigureRecipe:
    figure_id: str
    title: str
    inputs: dict            # logical name -> CSV filename in the data dir
    required: dict          # logical name -> tuple of required columns
    renderer: object        # callable(tables, fig) -> None
    notes: str = ""


def load_table(path: Path, required: tuple) -> dict:
    """Read a disscat CSV into {column: list of floats-or-strings}."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    cols = {name: [] for name in reader.fieldnames or ()}
    for row in reader:
        for key, val in row.items():
            cols[key].append(val)
    for col in required:
        if col not in cols:
            raise MissingColumn(col, path)
    out = {}
    for key, vals in cols.items():
        try:
            out[key] = [float(v) for v in vals]
        except ValueError:
            out[key] = vals
    return out


def _series(table, key_col, key, val_col):
    return [v for k, v in zip(table[key_col], table[val_col]) if k == key]


def _render_phase_diagram(tables, fig):
    t = tables["scan"]
    lams = sorted(set(t["lam_over_omega"]))
    kappas = sorted(set(t["kappa1_over_omega"]))
    grid = {}
    for lam, kap, phase in zip(t["lam_over_omega"], t["kappa1_over_omega"], t["phase"]):
        grid[(lam, kap)] = 1.0 if phase == "broken" else 0.0
    img = [[grid[(lam, kap)] for lam in lams] for kap in kappas]
    ax = fig.subplots()
    ax.pcolormesh(lams, kappas, img, cmap="RdBu_r", shading="nearest", vmin=0, vmax=1)
    boundary = sorted(set(zip(t["lam_over_omega"], t["boundary_lam_over_omega"])))
    ax.plot([b for _, b in boundary], [k for k in _boundary_kappa(boundary)], "k--", lw=1)
    ax.set_xlabel(r"$\lambda/\omega$")
    ax.set_ylabel(r"$\kappa_1/\omega$")
    ax.set_title("steady-state phase diagram (shaded: broken)")
    ax.set_xlim(min(lams), max(lams))
    ax.set_ylim(min(kappas), max(kappas))


def _boundary_kappa(boundary):
    # invert boundary lam = sqrt(omega^2 + kappa^2)/2 at omega=1
    out = []
    for _, b in boundary:
        val = max(4.0 * b * b - 1.0, 0.0)
        out.append(val**0.5)
    return out


def _render_gap_spectrum(tables, fig):
    t = tables["compare"]
    ax = fig.subplots()
    ax.plot(t["lam_over_omega"], [-x for x in t["analytic_re"]], "r_", ms=8,
            label="analytic grid")
    ax.plot(t["lam_over_omega"], [-x for x in t["ed_re"]], "k.", label="ED")
    ax.set_xlabel(r"$\lambda/\omega$")
    ax.set_ylabel(r"$-\mathrm{Re}\,\Lambda$")
    ax.set_title("quadratic-limit decay rates")
    ax.legend(loc="upper right")


def _render_transition(tables, fig, n_modes):
    t = tables["transition"]
    ax = fig.subplots()
    markers = ["o", "s", "^", "v"]
    for k in range(1, n_modes + 1):
        ax.semilogy(t["N"], [max(v, 1e-16) for v in t[f"mode{k}_abs"]],
                    markers[(k - 1) % 4] + "-", label=f"mode {k}")
    ax.set_xlabel("N")
    ax.set_ylabel(r"$|\Lambda|$")
    ax.set_title(f"{n_modes} slowest modes vs N")
    ax.legend(loc="lower left")


def _render_fidelity_two_series(tables, fig):
    ax = fig.subplots()
    for name, style, label in (("broken", "ko-", "broken-phase quench"),
                               ("unbroken", "rs-", "unbroken-phase quench")):
        t = tables[name]
        ax.plot(t["N"], t["fidelity"], style, label=label)
    ax.set_xlabel("N")
    ax.set_ylabel("fidelity")
    ax.set_ylim(0, 1.05)
    ax.set_title("recovery fidelity")
    ax.legend(loc="lower right")


def _render_one_minus_f(tables, fig, key="quench"):
    t = tables[key]
    ax = fig.subplots()
    ax.semilogy(t["N"], [max(v, 1e-16) for v in t["one_minus_f"]], "ko-")
    ax.set_xlabel("N")
    ax.set_ylabel(r"$1-F$")
    ax.set_title("recovery infidelity")


def _render_purity_vs_tau(tables, fig):
    t = tables["tau"]
    ax = fig.subplots()
    ax.semilogx(t["tauq_lam"], t["purity_M"], "ko-")
    gap = t["gap_error"][0]
    lam_over_gap = None
    if gap == gap and gap > 0:  # not nan
        # tau_g = 1/gap in units of 1/lam: tau_q*lam at the gap time
        n_val = t["N"][0]
        lam_over_gap = n_val / gap  # lam = N * kappa2 with kappa2 = 1
        ax.axvline(lam_over_gap, color="r", ls="--", lw=1, label=r"$\tau_g=\Delta_g^{-1}$")
        ax.legend(loc="upper right")
    ax.set_xlabel(r"$\tau_q \lambda$")
    ax.set_ylabel("purity of M")
    ax.set_title("auxiliary-factor purity vs quench time")


def _render_ns_panels(tables, fig):
    t = tables["ns"]
    zd = tables["zdiag"]
    axes = fig.subplots(2, 2).ravel()
    axes[0].semilogy(t["N"], [max(v, 1e-16) for v in t["dt_zpp_zmm"]], "ko-")
    axes[0].set_title(r"$D_t(z_{++}, z_{--})$")
    axes[1].semilogy(t["N"], [max(v, 1e-16) for v in t["dt_zpp_zpm"]], "ko-")
    axes[1].set_title(r"$D_t(z_{++}, z_{+-})$")
    n_max = max(zd["N"])
    idx = _series(zd, "N", n_max, "i")
    vals = _series(zd, "N", n_max, "z_pp_ii")
    keep = [(i, v) for i, v in zip(idx, vals) if v > 1e-14]
    axes[2].semilogy([i for i, _ in keep], [v for _, v in keep], "ko-")
    axes[2].set_title(rf"diag $z_{{++}}$ at N={n_max:g}")
    axes[2].set_xlabel("i")
    axes[3].semilogy(t["N"], [max(v, 1e-16) for v in t["lambda_offdiag_min"]], "ko-")
    axes[3].set_title(r"$|\Lambda_{+-}^{\min}|$")
    for ax in (axes[0], axes[1], axes[3]):
        ax.set_xlabel("N")


def _render_m_distance_panels(tables, fig):
    t = tables["tau"]
    taus = sorted(set(t["tauq_lam"]))
    short, long_ = taus[0], taus[-1]
    ns_short = _series(t, "tauq_lam", short, "N")
    dev_short = _series(t, "tauq_lam", short, "deviation")
    ns_long = _series(t, "tauq_lam", long_, "N")
    dev_long = _series(t, "tauq_lam", long_, "deviation")
    axes = fig.subplots(1, 3)
    axes[0].semilogy(ns_short, [max(v, 1e-16) for v in dev_short], "ko-")
    axes[0].set_title(rf"M distances, $\tau_q\lambda$={short:g}")
    axes[1].semilogy(ns_long, [max(v, 1e-16) for v in dev_long], "ko-")
    axes[1].set_title(rf"M distances, $\tau_q\lambda$={long_:g}")
    for ax in axes[:2]:
        ax.set_xlabel("N")
    n_max = max(t["N"])
    taus_n = _series(t, "N", n_max, "tauq_lam")
    pur_n = _series(t, "N", n_max, "purity_M")
    axes[2].semilogx(taus_n, pur_n, "ko-")
    axes[2].set_title(rf"purity of M at N={n_max:g}")
    axes[2].set_xlabel(r"$\tau_q\lambda$")
    fig.tight_layout()


def _render_gamma(tables, fig):
    axes = fig.subplots(1, 2)
    for ax, key, label in ((axes[0], "kappad", "dephasing error"),
                           (axes[1], "omega", "frequency error")):
        t = tables[key]
        ax.semilogy(t["N"], [max(v, 1e-18) for v in t["abs_one_minus_gamma_f"]], "ko-")
        ax.set_title(label)
        ax.set_xlabel("N")
        ax.set_ylabel(r"$|1-\gamma_f|$")
    fig.tight_layout()


def _render_q_heatmaps(tables, fig):
    t = tables["qblock"]
    ns = sorted(set(t["N"]))
    axes = fig.subplots(1, len(ns))
    if len(ns) == 1:
        axes = [axes]
    size = int(max(t["i"])) + 1
    for ax, n_val in zip(axes, ns):
        img = [[0.0] * size for _ in range(size)]
        for n, i, j, re in zip(t["N"], t["i"], t["j"], t["q_re"]):
            if n == n_val:
                img[int(i)][int(j)] = re
        pm = ax.imshow(img, vmin=0, vmax=1.2, cmap="viridis")
        ax.set_title(f"N={n_val:g}")
    fig.colorbar(pm, ax=axes, shrink=0.7, label=r"$\mathrm{Re}\,(q_{+-})_{ij}$")


QUENCH_COLS = ("N", "one_minus_f", "fidelity", "purity_M", "deviation",
               "gamma_f_re", "gamma_f_im", "abs_one_minus_gamma_f", "gap_error",
               "tauq_lam")
NS_COLS = ("N", "dt_zpp_zmm", "dt_zpp_zpm", "z_purity", "lambda_offdiag_min",
           "abs_one_minus_gamma_f")

RECIPES = {}


def _register(recipe: FigureRecipe):
    RECIPES[recipe.figure_id] = recipe


_register(FigureRecipe(
    "fig1a", "phase diagram",
    inputs={"scan": "phase_scan.csv"},
    required={"scan": ("lam_over_omega", "kappa1_over_omega", "phase",
                       "boundary_lam_over_omega")},
    renderer=_render_phase_diagram,
))
_register(FigureRecipe(
    "fig1b", "gap closing in the quadratic limit",
    inputs={"compare": "thirdq_compare.csv"},
    required={"compare": ("lam_over_omega", "ed_re", "analytic_re")},
    renderer=_render_gap_spectrum,
))
_register(FigureRecipe(
    "fig1c", "strong 2-to-4 transition",
    inputs={"transition": "transition_strong.csv"},
    required={"transition": ("N", "mode1_abs", "mode2_abs", "mode3_abs", "mode4_abs")},
    renderer=lambda tables, fig: _render_transition(tables, fig, 4),
    notes="two modes pinned at the numerical floor, two splitting exponentially",
))
_register(FigureRecipe(
    "fig1d", "weak 1-to-2 transition",
    inputs={"transition": "transition_weak.csv"},
    required={"transition": ("N", "mode1_abs", "mode2_abs")},
    renderer=lambda tables, fig: _render_transition(tables, fig, 2),
))
_register(FigureRecipe(
    "fig2a", "recovery fidelity, broken vs unbroken quench",
    inputs={"broken": "quench_omega_broken.csv", "unbroken": "quench_omega_unbroken.csv"},
    required={"broken": ("N", "fidelity"), "unbroken": ("N", "fidelity")},
    renderer=_render_fidelity_two_series,
))
_register(FigureRecipe(
    "fig2b", "recovery infidelity, frequency error",
    inputs={"quench": "quench_omega_broken.csv"},
    required={"quench": ("N", "one_minus_f")},
    renderer=_render_one_minus_f,
))
_register(FigureRecipe(
    "fig2c", "recovery infidelity, dephasing error",
    inputs={"quench": "quench_kappad.csv"},
    required={"quench": ("N", "one_minus_f")},
    renderer=_render_one_minus_f,
))
_register(FigureRecipe(
    "fig2d", "auxiliary purity vs quench time",
    inputs={"tau": "quench_omega_tau.csv"},
    required={"tau": ("N", "tauq_lam", "purity_M", "gap_error")},
    renderer=_render_purity_vs_tau,
))
_register(FigureRecipe(
    "figS1", "analytic vs numerical quadratic spectrum",
    inputs={"compare": "thirdq_compare.csv"},
    required={"compare": ("lam_over_omega", "ed_re", "ed_im", "analytic_re", "analytic_im")},
    renderer=lambda tables, fig: _render_s1(tables, fig),
))
_register(FigureRecipe(
    "figS2", "noiseless-subsystem evidence, dephasing family",
    inputs={"ns": "ns_kappad.csv", "zdiag": "ns_kappad_zdiag.csv"},
    required={"ns": NS_COLS, "zdiag": ("N", "i", "z_pp_ii")},
    renderer=_render_ns_panels,
))
_register(FigureRecipe(
    "figS3", "noiseless-subsystem evidence, frequency family",
    inputs={"ns": "ns_omega.csv", "zdiag": "ns_omega_zdiag.csv"},
    required={"ns": NS_COLS, "zdiag": ("N", "i", "z_pp_ii")},
    renderer=_render_ns_panels,
))
_register(FigureRecipe(
    "figS4", "mid-quench factor distances, dephasing family",
    inputs={"tau": "quench_kappad_tau.csv"},
    required={"tau": ("N", "tauq_lam", "deviation", "purity_M")},
    renderer=_render_m_distance_panels,
))
_register(FigureRecipe(
    "figS5", "mid-quench factor distances, frequency family",
    inputs={"tau": "quench_omega_tau.csv"},
    required={"tau": ("N", "tauq_lam", "deviation", "purity_M")},
    renderer=_render_m_distance_panels,
))
_register(FigureRecipe(
    "figS6", "coherence retention factor",
    inputs={"kappad": "ns_kappad.csv", "omega": "ns_omega.csv"},
    required={"kappad": ("N", "abs_one_minus_gamma_f"),
              "omega": ("N", "abs_one_minus_gamma_f")},
    renderer=_render_gamma,
))
_register(FigureRecipe(
    "figS7", "off-diagonal conserved quantity, dephasing family",
    inputs={"qblock": "ns_kappad_qblock.csv"},
    required={"qblock": ("N", "i", "j", "q_re")},
    renderer=_render_q_heatmaps,
))
_register(FigureRecipe(
    "figS8", "off-diagonal conserved quantity, frequency family",
    inputs={"qblock": "ns_omega_qblock.csv"},
    required={"qblock": ("N", "i", "j", "q_re")},
    renderer=_render_q_heatmaps,
))


def _render_s1(tables, fig):
    t = tables["compare"]
    axes = fig.subplots(1, 2)
    axes[0].plot(t["lam_over_omega"], t["analytic_re"], "r_", ms=8)
    axes[0].plot(t["lam_over_omega"], t["ed_re"], "k.")
    axes[0].set_ylabel(r"$\mathrm{Re}\,\Lambda$")
    axes[1].plot(t["lam_over_omega"], t["analytic_im"], "r_", ms=8, label="analytic")
    axes[1].plot(t["lam_over_omega"], t["ed_im"], "k.", label="ED")
    axes[1].set_ylabel(r"$\mathrm{Im}\,\Lambda$")
    axes[1].legend(loc="upper left")
    for ax in axes:
        ax.set_xlabel(r"$\lambda/\omega$")
    fig.tight_layout()


def render(figure_id: str, data_dir, out_path) -> Path:
    """Render one figure from CSVs in data_dir; returns the output path."""
    if figure_id not in RECIPES:
        raise KeyError(f"unknown figure id {figure_id!r}; known: {sorted(RECIPES)}")
    recipe = RECIPES[figure_id]
    data_dir = Path(data_dir)
    tables = {}
    for name, filename in recipe.inputs.items():
        path = data_dir / filename
        if not path.exists():
            raise FileNotFoundError(f"figure {figure_id} needs {path}")
        tables[name] = load_table(path, recipe.required[name])
    with plt.rc_context(STYLE):
        fig = plt.figure(figsize=(7.0, 4.2))
        recipe.renderer(tables, fig)
        if not fig.get_axes():
            raise RuntimeError(f"recipe {figure_id} drew nothing")
        fig.suptitle(f"{figure_id}: {recipe.title}", fontsize=10)
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out_path, metadata=_stable_metadata(out_path.suffix))
        plt.close(fig)
    return out_path


def _stable_metadata(suffix: str):
    if suffix == ".png":
        return {"Software": "disscat-figures"}
    if suffix == ".svg":
        return {"Date": None}
    return None
