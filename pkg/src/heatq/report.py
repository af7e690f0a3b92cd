"""Delimited-text artifacts, run reports and figure rendering.

All data files are tab-separated with a '#' comment block echoing the
configuration, so identical configs produce byte-identical files.
Figures are rendered to PNG next to the data they plot.
"""

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .config import ExperimentConfig
from .pipeline import ForwardResult, InvertResult, NonUniquenessResult

_FMT = "%.12g"


def _write_table(path: Path, names, columns, echo_lines):
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        for ln in echo_lines:
            fh.write("# %s\n" % ln)
        fh.write("\t".join(names) + "\n")
        for row in zip(*cols):
            fh.write("\t".join(_FMT % v for v in row) + "\n")


def read_table(path) -> dict:
    """Read one of our tsv files back into named columns."""
    names = None
    rows = []
    for ln in Path(path).read_text().splitlines():
        if ln.startswith("#") or not ln.strip():
            continue
        if names is None:
            names = ln.split("\t")
            continue
        rows.append([float(v) for v in ln.split("\t")])
    if names is None:
        raise ValueError("no header in %s" % path)
    data = np.array(rows) if rows else np.zeros((0, len(names)))
    return {name: data[:, k] for k, name in enumerate(names)}


@dataclass
class RunReport:
    """Human-readable record of one run; reconstructs its inputs."""

    config: ExperimentConfig
    sections: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def add(self, title: str, lines) -> None:
        self.sections.append((title, list(lines)))

    def to_text(self) -> str:
        out = ["run configuration", "-----------------"]
        out.extend(self.config.echo_lines())
        for title, lines in self.sections:
            out.append("")
            out.append(title)
            out.append("-" * len(title))
            out.extend(lines)
        if self.config.timings and self.timings:
            out.append("")
            out.append("timings [s]")
            out.append("-----------")
            for k, v in self.timings.items():
                out.append("%s = %.3f" % (k, v))
        return "\n".join(out) + "\n"


def _spectra_lines(spectra):
    lines = ["j\tlambda_j\tmu_j"]
    for j in range(spectra.count):
        lines.append(
            "%d\t%s\t%s"
            % (j + 1, _FMT % spectra.dirichlet[j], _FMT % spectra.dirichlet_neumann[j])
        )
    return lines


def write_spectra(out: Path, spectra, echo) -> None:
    j = np.arange(1, spectra.count + 1)
    _write_table(
        out / "spectra.tsv",
        ["j", "lambda_j", "mu_j"],
        [j, spectra.dirichlet, spectra.dirichlet_neumann],
        echo,
    )


def read_spectra(path):
    from .sturm_liouville import SpectralPair

    cols = read_table(path)
    return SpectralPair(dirichlet=cols["lambda_j"], dirichlet_neumann=cols["mu_j"])


def write_forward(res: ForwardResult, out_dir) -> list:
    """spectra.tsv, pulse.tsv, laplace.tsv (+ figures); returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo = res.config.echo_lines()
    written = []

    write_spectra(out, res.spectra, echo)
    written.append(out / "spectra.tsv")

    rec = res.record
    _write_table(
        out / "pulse.tsv",
        ["t", "a", "b", "b0"],
        [rec.t_nodes, rec.a_values, rec.b_values, rec.b0_values],
        echo,
    )
    written.append(out / "pulse.tsv")

    lam = np.array([s.lam for s in res.laplace])
    A = np.array([s.A_value for s in res.laplace])
    B = np.array([s.B_value for s in res.laplace])
    B0 = np.array([s.B0_value for s in res.laplace])
    # Samples sitting on zeros of A get NaN ratios.
    nonzero = np.abs(A) > 1e-12 * np.max(np.abs(A)) if np.any(A) else A != 0
    with np.errstate(divide="ignore", invalid="ignore"):
        rba = np.where(nonzero, B / A, np.nan)
        rb0a = np.where(nonzero, B0 / A, np.nan)
    _write_table(
        out / "laplace.tsv",
        ["lambda", "A", "B", "B0", "B_over_A", "B0_over_A"],
        [lam, A, B, B0, rba, rb0a],
        echo,
    )
    written.append(out / "laplace.tsv")

    report = RunReport(config=res.config, timings=res.timings)
    report.add("spectra", _spectra_lines(res.spectra))
    report.add(
        "laplace ratios",
        ["lambda\tB/A\tB0/A"]
        + ["%s\t%s\t%s" % (_FMT % l, _FMT % r1, _FMT % r2) for l, r1, r2 in zip(lam, rba, rb0a)],
    )
    (out / "report.txt").write_text(report.to_text())
    written.append(out / "report.txt")

    if res.config.figures:
        written.extend(render_forward_figures(out))
    return written


def write_invert(res: InvertResult, out_dir) -> list:
    """kernel_boundary.tsv, q_recovered.tsv, spectra.tsv, report.txt."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo = res.config.echo_lines()
    written = []

    write_spectra(out, res.spectra, echo)
    written.append(out / "spectra.tsv")

    y = res.q_recovered.grid
    _write_table(
        out / "kernel_boundary.tsv",
        ["y", "K1", "K1x", "K1y"],
        [y, res.boundary.K1, res.boundary.K1x, res.boundary.K1y],
        echo,
    )
    written.append(out / "kernel_boundary.tsv")

    names = ["x", "q_rec"]
    cols = [y, res.q_recovered.values]
    if res.q_true is not None:
        names = ["x", "q_true", "q_rec"]
        truth = (
            res.q_true.values
            if res.q_true.n_nodes == res.q_recovered.n_nodes
            else np.interp(y, res.q_true.grid, res.q_true.values)
        )
        cols = [y, truth, res.q_recovered.values]
    _write_table(out / "q_recovered.tsv", names, cols, echo)
    written.append(out / "q_recovered.tsv")

    report = RunReport(config=res.config, timings=res.timings)
    report.add("spectra", _spectra_lines(res.spectra))
    report.add(
        "gram systems",
        [
            "dirichlet condition estimate = %.6g" % res.gram_dirichlet.condition_estimate,
            "neumann condition estimate = %.6g" % res.gram_neumann.condition_estimate,
            "mean identity 2*K(1,1) = %s" % (_FMT % (2 * res.boundary.k11)),
        ],
    )
    report.add(
        "volterra iteration",
        ["iterations = %d" % len(res.update_norms)]
        + (
            ["contraction ratio estimate = %.4g" % res.contraction_ratio]
            if res.contraction_ratio is not None
            else []
        )
        + ["update norms = " + " ".join("%.6g" % v for v in res.update_norms),
           "diagonal consistency residual = %.6g" % res.diag_residual],
    )
    err_lines = []
    if res.err_max is not None:
        err_lines = [
            "max error = %.6g" % res.err_max,
            "rms error = %.6g" % res.err_rms,
        ]
        report.add("recovery error vs truth", err_lines)
    (out / "report.txt").write_text(report.to_text())
    written.append(out / "report.txt")

    if res.config.figures:
        written.extend(render_invert_figures(out))
    return written


def write_nonuniqueness(res: NonUniquenessResult, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo = res.config.echo_lines()
    written = []
    j = np.arange(1, res.spectra.count + 1)
    _write_table(
        out / "spectra_pair.tsv",
        ["j", "lambda_j", "lambda_j_reflected", "mu_j", "mu_j_reflected"],
        [
            j,
            res.spectra.dirichlet,
            res.spectra_reflected.dirichlet,
            res.spectra.dirichlet_neumann,
            res.spectra_reflected.dirichlet_neumann,
        ],
        echo,
    )
    written.append(out / "spectra_pair.tsv")
    _write_table(
        out / "ratio_pair.tsv",
        [
            "lambda",
            "B_over_A",
            "B_over_A_reflected",
            "B0_over_A",
            "B0_over_A_reflected",
        ],
        [
            res.lambdas,
            res.far_ratio,
            res.far_ratio_reflected,
            res.near_ratio,
            res.near_ratio_reflected,
        ],
        echo,
    )
    written.append(out / "ratio_pair.tsv")

    report = RunReport(config=res.config, timings=res.timings)
    report.add(
        "spectral comparison against the reflected potential",
        [
            "max |lambda_j - lambda_j(reflected)| = %.6g" % res.dirichlet_gap,
            "max |mu_j - mu_j(reflected)| = %.6g" % res.neumann_gap,
        ],
    )
    report.add(
        "flux-ratio comparison",
        [
            "max relative B/A difference  = %.6g (far-end data distinguishes)"
            % res.far_ratio_diff,
            "max relative B0/A difference = %.6g (near-end data does not)"
            % res.near_ratio_diff,
        ],
    )
    (out / "report.txt").write_text(report.to_text())
    written.append(out / "report.txt")
    if res.config.figures:
        written.extend(render_nonuniqueness_figures(out))
    return written


# ---------------------------------------------------------------------------
# Figures (rendered from the tsv files so plot-data can re-run them)
# ---------------------------------------------------------------------------

def _save(fig, path: Path):
    fig.savefig(path, dpi=130, metadata={"Software": None})
    plt.close(fig)
    return path


def render_forward_figures(out_dir) -> list:
    out = Path(out_dir)
    written = []
    if (out / "pulse.tsv").exists():
        cols = read_table(out / "pulse.tsv")
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.plot(cols["t"], cols["a"], label="a(t)")
        ax.plot(cols["t"], cols["b"], label="b(t) = u_x(1,t)")
        ax.plot(cols["t"], cols["b0"], label="b0(t) = u_x(0,t)")
        ax.set_xlabel("t")
        ax.set_ylabel("boundary data")
        ax.legend(frameon=False)
        written.append(_save(fig, out / "fig_pulse.png"))
    if (out / "spectra.tsv").exists():
        cols = read_table(out / "spectra.tsv")
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.plot(cols["j"], cols["lambda_j"], "o-", label="lambda_j")
        ax.plot(cols["j"], cols["mu_j"], "s-", label="mu_j")
        ax.set_xlabel("j")
        ax.set_ylabel("eigenvalue")
        ax.legend(frameon=False)
        written.append(_save(fig, out / "fig_spectra.png"))
    if (out / "laplace.tsv").exists():
        cols = read_table(out / "laplace.tsv")
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.plot(cols["lambda"], cols["B_over_A"], "o-", label="B/A")
        ax.plot(cols["lambda"], cols["B0_over_A"], "s-", label="B0/A")
        ax.set_xlabel("lambda")
        ax.set_ylabel("flux ratio")
        ax.set_xscale("log")
        ax.legend(frameon=False)
        written.append(_save(fig, out / "fig_laplace.png"))
    return written


def render_invert_figures(out_dir) -> list:
    out = Path(out_dir)
    written = []
    if (out / "q_recovered.tsv").exists():
        cols = read_table(out / "q_recovered.tsv")
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        if "q_true" in cols:
            ax.plot(cols["x"], cols["q_true"], "k--", label="q true")
        ax.plot(cols["x"], cols["q_rec"], label="q recovered")
        ax.set_xlabel("x")
        ax.set_ylabel("q")
        ax.legend(frameon=False)
        written.append(_save(fig, out / "fig_potential.png"))
    if (out / "kernel_boundary.tsv").exists():
        cols = read_table(out / "kernel_boundary.tsv")
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.plot(cols["y"], cols["K1"], label="K(1,y)")
        ax.plot(cols["y"], cols["K1x"], label="K_x(1,y)")
        ax.plot(cols["y"], cols["K1y"], label="K_y(1,y)")
        ax.set_xlabel("y")
        ax.set_ylabel("boundary trace")
        ax.legend(frameon=False)
        written.append(_save(fig, out / "fig_kernel_boundary.png"))
    report = out / "report.txt"
    if report.exists():
        norms = _parse_update_norms(report.read_text())
        if norms:
            fig, ax = plt.subplots(figsize=(6.4, 4.0))
            ax.semilogy(np.arange(1, len(norms) + 1), norms, "o-")
            ax.set_xlabel("iteration")
            ax.set_ylabel("update sup-norm")
            written.append(_save(fig, out / "fig_convergence.png"))
    return written


def _parse_update_norms(text: str):
    for ln in text.splitlines():
        if ln.startswith("update norms = "):
            return [float(v) for v in ln.split("=", 1)[1].split()]
    return []


def render_nonuniqueness_figures(out_dir) -> list:
    out = Path(out_dir)
    written = []
    if (out / "spectra_pair.tsv").exists():
        cols = read_table(out / "spectra_pair.tsv")
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.semilogy(
            cols["j"],
            np.abs(cols["lambda_j"] - cols["lambda_j_reflected"]) + 1e-16,
            "o-",
            label="|lambda gap|",
        )
        ax.semilogy(
            cols["j"],
            np.abs(cols["mu_j"] - cols["mu_j_reflected"]) + 1e-16,
            "s-",
            label="|mu gap|",
        )
        ax.set_xlabel("j")
        ax.set_ylabel("reflection gap")
        ax.legend(frameon=False)
        written.append(_save(fig, out / "fig_nonuniqueness.png"))
    if (out / "ratio_pair.tsv").exists():
        cols = read_table(out / "ratio_pair.tsv")
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        ax.plot(cols["lambda"], cols["B_over_A"], "o-", label="B/A")
        ax.plot(cols["lambda"], cols["B_over_A_reflected"], "o--", label="B/A reflected")
        ax.plot(cols["lambda"], cols["B0_over_A"], "s-", label="B0/A")
        ax.plot(
            cols["lambda"], cols["B0_over_A_reflected"], "s--", label="B0/A reflected"
        )
        ax.set_xscale("log")
        ax.set_xlabel("lambda")
        ax.set_ylabel("flux ratio")
        ax.legend(frameon=False)
        written.append(_save(fig, out / "fig_ratio_pair.png"))
    return written


def render_all_figures(out_dir) -> list:
    """Re-render every figure the tsv files in out_dir support."""
    written = []
    written.extend(render_forward_figures(out_dir))
    written.extend(render_invert_figures(out_dir))
    written.extend(render_nonuniqueness_figures(out_dir))
    return written
