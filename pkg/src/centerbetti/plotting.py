"""PNG figures next to the CSV artifacts (matplotlib, Agg backend)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "font.size": 10,
}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def _stage_x(stages) -> tuple[np.ndarray, str]:
    xs = []
    for s in stages:
        p = s.param
        xs.append(float(p) if isinstance(p, (int, float)) else float(s.index))
    return np.array(xs), "stage parameter"


def plot_convergence(out: Path, report) -> Path | None:
    labels = list(report.config.track)
    if not report.stages or report.limit is None:
        return None
    x, xlabel = _stage_x(report.stages)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        drew = False
        for g in labels:
            d = np.array([np.nan if v is None else v for v in report.deltas(g)], dtype=float)
            ok = d > 0
            if ok.any():
                ax.loglog(x[ok], d[ok], "o-", ms=3, label=f"delta[{g}]")
                drew = True
        if not drew:
            plt.close(fig)
            return None
        ref = x[x > 0]
        if len(ref):
            ax.loglog(ref, 1.0 / ref, "k:", lw=1, label="1/n")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("|stage - limit|")
        ax.set_title(f"kernel Fourier coefficients ({report.limit.source} limit)")
        ax.legend()
        return _save(fig, out / "convergence.png")


def plot_densities(out: Path, report, max_stages: int = 5) -> Path | None:
    stages = [s for s in report.stages if s.sd is not None]
    oracle = report.limit is not None and report.command == "oracle"
    if not stages and not oracle:
        return None
    from .spectral import density_function
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        pick = stages if len(stages) <= max_stages else [stages[int(round(k))] for k in
                                                         np.linspace(0, len(stages) - 1, max_stages)]
        for s in pick:
            F = density_function(s.sd)
            ax.step(np.append(0.0, F.jumps), np.append(0.0, F.values), where="post", lw=1,
                    label=f"stage {s.param}")
        path = out / "densities.csv"
        if path.exists():
            rows = [ln.split(",") for ln in path.read_text().splitlines()[1:] if ln.startswith("oracle")]
            if rows:
                ax.plot([float(r[3]) for r in rows], [float(r[4]) for r in rows], "k--", lw=1.2, label="oracle")
        ax.set_xlabel("lambda")
        ax.set_ylabel("F(lambda)")
        ax.set_title("spectral density functions")
        ax.legend(fontsize=8)
        return _save(fig, out / "densities.png")


def plot_determinants(out: Path, report) -> Path | None:
    stages = [s for s in report.stages if s.det is not None]
    if not stages:
        return None
    x, xlabel = _stage_x(stages)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(x, [s.det.lndet for s in stages], "o-", ms=3, label="lndet")
        for g in report.config.track:
            vals = [s.det.lndet_dev_re.get(g) for s in stages]
            if g not in ("e", "1") and all(v is not None and math.isfinite(v) for v in vals):
                ax.plot(x, vals, "s-", ms=3, lw=1, label=f"lndet_re[{g}]")
        b = stages[0].det.bounds
        if b is not None:
            ax.axhline(b.B0, color="C3", ls="--", lw=1, label="B0")
        if report.limit is not None and report.limit.lndet is not None and math.isfinite(report.limit.lndet):
            ax.axhline(report.limit.lndet, color="k", ls=":", lw=1, label=f"{report.limit.source} lndet")
        if len(x) > 1 and np.all(x > 0):
            ax.set_xscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("normalized log-determinant")
        ax.legend(fontsize=8)
        return _save(fig, out / "determinants.png")


def plot_sofic(out: Path, report) -> Path | None:
    rows = report.sofic_rows
    if not rows:
        return None
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        v = np.array([r[1] for r in rows], dtype=float)
        ax.plot(v, [r[3] for r in rows], "o-", ms=3, label="ln det* / |V|")
        if report.sofic_oracle is not None:
            ax.axhline(report.sofic_oracle, color="k", ls=":", lw=1, label="oracle lndet")
        if len(v) > 1:
            ax.set_xscale("log")
        ax.set_xlabel("|V|")
        ax.set_ylabel("normalized ln det*")
        ax.legend()
        return _save(fig, out / "sofic.png")


def render_all(out: Path, report) -> list[Path]:
    out = Path(out)
    makers = {
        "converge": (plot_convergence, plot_densities, plot_determinants),
        "density": (plot_densities,),
        "detbound": (plot_determinants,),
        "sofic": (plot_sofic,),
        "oracle": (plot_densities,),
    }[report.command]
    return [p for p in (m(out, report) for m in makers) if p is not None]
