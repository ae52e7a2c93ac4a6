"""Run an experiment config: stage sweeps, oracle rows, checks and CSV artifacts.

Every run collects a list of named checks; the process exit code is nonzero
exactly when one of them fails.  Stages are analysed concurrently unless the
reproducible flag asks for a single-threaded sweep; rows are always written
in stage order.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import spectral
from .approximation import (FolnerCompression, SchemeError, build_inverse_limit_stage, build_stage,
                            split_finite_free, trace_convergence_check)
from .config import ExperimentConfig
from .cyclotomic import Cyclotomic
from .groups import QuotientMap
from .ring import RingMatrix, kappa

# -- small helpers --------------------------------------------------------------


def fmt(x) -> str:
    """Deterministic text for CSV cells (17 significant digits)."""
    if x is None:
        return ""
    if isinstance(x, (Fraction, Cyclotomic)):
        x = complex(x)
    if isinstance(x, complex):
        if x.imag == 0:
            x = x.real
        else:
            return f"{x.real:.17g}{x.imag:+.17g}j"
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def exact_text(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Cyclotomic):
        return str(x.to_rational()) if x.is_rational() else str(x)
    return fmt(x)


def is_algebraic_integer(A: RingMatrix) -> bool:
    for row in A.entries:
        for e in row:
            for c in e.terms.values():
                if not isinstance(c, Cyclotomic) or any(Fraction(a).denominator != 1 for a in c.coeffs):
                    return False
    return True


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in r])
    path.write_text(buf.getvalue())


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        tail = f" ({self.detail})" if self.detail else ""
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'}{tail}"


# -- per-stage analysis ---------------------------------------------------------


@dataclass
class StageResult:
    index: int
    param: object
    dim: int
    route: str
    F0: float | None = None
    F0_exact: object = None
    coeffs: dict = field(default_factory=dict)
    coeffs_exact: dict = field(default_factory=dict)
    sd: spectral.SpectralData | None = None
    det: spectral.DeterminantReport | None = None
    max_abs_eig: float | None = None
    checks: list = field(default_factory=list)
    realization: object = None

    def value(self, g: str):
        if g in self.coeffs_exact:
            return complex(self.coeffs_exact[g])
        return self.coeffs.get(g)

    def F0_value(self):
        return float(self.F0_exact) if self.F0_exact is not None else self.F0


def _exact_allowed(H, limit: int) -> bool:
    return H.is_exact() and (spectral._abelian_exact_ok(H) or H.dim <= limit)


def analyze_stage(cfg: ExperimentConfig, scheme, i: int, param, classes, *, need_float: bool = True,
                  want_exact: bool = True, keep_realization: bool = False,
                  bound_checks: bool = False) -> StageResult:
    A = cfg.matrix
    tol = cfg.tolerances
    H = build_stage(A, scheme, i)
    exact_limit = int(tol["exact_limit"])
    float_limit = int(tol["float_limit"])
    do_exact = want_exact and _exact_allowed(H, exact_limit)
    do_float = need_float and (H.dim <= float_limit or not do_exact)
    route = "+".join(r for r, on in (("exact", do_exact), ("float", do_float)) if on) or "none"
    res = StageResult(i, param, H.dim, route, realization=H if keep_realization else None)
    if do_exact:
        res.F0_exact = spectral.kernel_dim_exact(H)
        for label, info in classes:
            res.coeffs_exact[label] = spectral.kernel_fourier_coefficient_exact(H, info)
    if do_float:
        tau = tol.get("tau")
        sd = spectral.spectral_data(H, classes, tau=tau)
        res.sd = sd
        res.F0 = spectral.density(sd, "standard", 0.0)
        for label, _ in classes:
            res.coeffs[label] = spectral.kernel_fourier_coefficient(sd, label)
        bounds_ok = A.is_exact() and is_algebraic_integer(A)
        res.det = spectral.determinant_report(sd, None, A if bounds_ok else None)
        top = float(np.max(np.abs(sd.eigenvalues))) if len(sd.eigenvalues) else 0.0
        res.max_abs_eig = top
        kap = kappa(A).kappa
        res.checks.append(Check(f"stage {i}: |spectrum| <= kappa", top <= kap * (1 + 1e-12) + sd.tau,
                                f"{top:.6g} vs {kap:.6g}"))
        for label, _ in classes:
            dv = spectral.domination_violations(sd, label, tol["domination"])
            pv = spectral.positivity_violations(sd, label, tol["positivity"])
            res.checks.append(Check(f"stage {i}: domination[{label}]", dv == 0, f"{dv} violations"))
            res.checks.append(Check(f"stage {i}: positivity[{label}]", pv == 0, f"{pv} violations"))
        pi = spectral.partial_integration_check(sd)
        ok = pi.residual <= tol["partial_integration"] * (1 + abs(pi.lhs)) or (pi.lhs == -math.inf and pi.rhs == -math.inf)
        res.checks.append(Check(f"stage {i}: partial integration", ok, f"residual {pi.residual:.3g}"))
        if bound_checks:
            for name, passed in res.det.checks().items():
                res.checks.append(Check(f"stage {i}: {name}", passed))
    if do_exact and do_float:
        ftol = tol["float"]
        diff = abs(float(res.F0_exact) - res.F0)
        res.checks.append(Check(f"stage {i}: exact/float F0", diff <= ftol, f"|diff| = {diff:.3g}"))
        for label in res.coeffs_exact:
            diff = abs(complex(res.coeffs_exact[label]) - res.coeffs[label])
            res.checks.append(Check(f"stage {i}: exact/float coeff[{label}]", diff <= ftol, f"|diff| = {diff:.3g}"))
    return res


def _map(fn, items, reproducible: bool):
    if reproducible or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor() as pool:
        return list(pool.map(fn, items))


# -- limit references -----------------------------------------------------------


@dataclass
class LimitRow:
    source: str
    F0: float | None
    coeffs: dict
    lndet: float | None
    notes: list = field(default_factory=list)
    exact: bool = False


def limit_reference(cfg: ExperimentConfig, classes) -> LimitRow | None:
    """The values of A itself: exact over a finite group, else from the Fourier oracle."""
    A = cfg.matrix
    G = cfg.group
    if G.is_finite:
        p = QuotientMap(G, G, tuple(G.generator_nf(i) for i in range(G.rank)))
        H = build_inverse_limit_stage(A, p)
        coeffs = {}
        if H.is_exact():
            F0 = float(spectral.kernel_dim_exact(H))
            for label, info in classes:
                coeffs[label] = complex(spectral.kernel_fourier_coefficient_exact(H, info))
            sd = spectral.spectral_data(H)
            return LimitRow("group", F0, coeffs, spectral.fuglede_kadison(sd), exact=True)
        sd = spectral.spectral_data(H, classes)
        coeffs = {label: spectral.kernel_fourier_coefficient(sd, label) for label, _ in classes}
        return LimitRow("group", spectral.density(sd, "standard", 0.0), coeffs, spectral.fuglede_kadison(sd))
    if not cfg.oracle:
        return None
    try:
        split_finite_free(G)
    except SchemeError:
        return None
    from .oracle import oracle_density, oracle_kernel_coefficient, oracle_lndet
    N = cfg.grid
    notes = []
    dens = oracle_density(A, 0.0, N)
    coeffs = {}
    for label, info in classes:
        est = oracle_kernel_coefficient(A, info.representative, N)
        coeffs[label] = est.value
        if est.flagged:
            notes.append(f"coeff[{label}]: {est.note}")
        notes.append(f"coeff[{label}] grid error estimate {est.error_estimate:.3g}")
    ld = oracle_lndet(A, N)
    if ld.note:
        notes.append(f"lndet: {ld.note}")
    return LimitRow("oracle", float(dens.value), coeffs, float(ld.value), notes)


# -- reports --------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    command: str
    config: ExperimentConfig
    stages: list
    limit: LimitRow | None
    checks: list
    files: list = field(default_factory=list)
    extra_text: list = field(default_factory=list)
    sofic_rows: list = field(default_factory=list)
    sofic_oracle: float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def deltas(self, g: str) -> list:
        if self.limit is None or g not in self.limit.coeffs:
            return [None] * len(self.stages)
        ref = complex(self.limit.coeffs[g])
        return [None if s.value(g) is None else abs(complex(s.value(g)) - ref) for s in self.stages]

    def text(self) -> str:
        cfg = self.config
        lines = [f"command = {self.command}"]
        if cfg.source:
            lines.append(f"config = {cfg.source}")
        lines.append(f"group = {cfg.group!r}")
        lines.append(f"matrix = {cfg.matrix!r}")
        lines.append(f"kappa = {kappa(cfg.matrix).kappa:.12g}")
        lines.append(f"scheme = {cfg.scheme.type} {list(cfg.scheme.stages)}")
        lines.append(f"tracked = {list(cfg.track)}")
        if self.limit is not None:
            lim = self.limit
            lines.append(f"limit source = {lim.source}")
            lines.append(f"limit F0 = {fmt(lim.F0)}")
            for g, v in lim.coeffs.items():
                lines.append(f"limit coeff[{g}] = {fmt(v)}")
            lines.append(f"limit lndet = {fmt(lim.lndet)}")
            lines.extend(f"note: {n}" for n in lim.notes)
        for s in self.stages:
            if s.det is not None:
                lines.append("")
                lines.append(f"[stage {s.index}: {s.param}]")
                lines.append(s.det.as_text(with_checks=False))
        lines.extend(self.extra_text)
        lines.append("")
        lines.extend(c.line() for c in self.checks)
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _classes(cfg: ExperimentConfig):
    return cfg.tracked_classes()


def _stage_items(cfg: ExperimentConfig):
    scheme = cfg.build_scheme()
    return scheme, list(enumerate(cfg.scheme.stages))


def _sweep(cfg, classes, reproducible, **kw) -> list[StageResult]:
    scheme, items = _stage_items(cfg)
    return _map(lambda it: analyze_stage(cfg, scheme, it[0], it[1], classes, **kw), items, reproducible)


def _density_rows(cfg, stages, classes, limit_fn=None) -> list[list]:
    rows = []
    labels = [g for g, _ in classes]
    for s in stages:
        if s.sd is None:
            continue
        F = spectral.density_function(s.sd)
        cols = []
        for g in labels:
            cols.append(spectral.density_function(s.sd, "re", g).values)
            cols.append(spectral.density_function(s.sd, "im", g).values)
        for j, lam in enumerate(F.jumps):
            rows.append(["stage", s.index, fmt(s.param), lam, F.values[j]] + [c[j] for c in cols])
    if limit_fn is not None:
        rows.extend(limit_fn(labels))
    return rows


def _oracle_density_rows(cfg: ExperimentConfig, labels) -> list[list]:
    from .oracle import oracle_density
    if cfg.group.is_finite or not cfg.oracle:
        return []
    try:
        split_finite_free(cfg.group)
    except SchemeError:
        return []
    kap = kappa(cfg.matrix).kappa
    rows = []
    for lam in np.linspace(0.0, kap, 65):
        v = float(oracle_density(cfg.matrix, float(lam), cfg.grid).value)
        rows.append(["oracle", "", "", float(lam), v] + [""] * (2 * len(labels)))
    return rows


def _density_header(labels) -> list[str]:
    h = ["source", "i", "stage", "lambda", "F"]
    for g in labels:
        h += [f"F_re[{g}]", f"F_im[{g}]"]
    return h


def _maybe_plot(report: ConvergenceReport, out: Path, plots: bool) -> None:
    if not plots:
        return
    from . import plotting
    report.files.extend(plotting.render_all(out, report))


def _finish(report: ConvergenceReport, out: Path, plots: bool) -> ConvergenceReport:
    _maybe_plot(report, out, plots)
    (out / "report.txt").write_text(report.text())
    report.files.append(out / "report.txt")
    return report


def run_density(cfg: ExperimentConfig, out: Path, reproducible: bool = False, plots: bool = True) -> ConvergenceReport:
    classes = _classes(cfg)
    stages = _sweep(cfg, classes, reproducible, want_exact=False)
    checks = [c for s in stages for c in s.checks]
    labels = [g for g, _ in classes]
    rows = _density_rows(cfg, stages, classes, lambda lb: _oracle_density_rows(cfg, lb))
    write_csv(out / "densities.csv", _density_header(labels), rows)
    rep = ConvergenceReport("density", cfg, stages, None, checks, [out / "densities.csv"])
    return _finish(rep, out, plots)


def _telescope(cfg: ExperimentConfig, scheme, classes) -> tuple[list[list], list[Check]]:
    rows, checks = [], []
    if not isinstance(scheme, FolnerCompression) or cfg.powers <= 0:
        return rows, checks
    targets = [None] + [info for g, info in classes if g not in ("e", "1", "")]
    for i, fs in enumerate(scheme.exhaustion):
        for n in range(1, cfg.powers + 1):
            for info in targets:
                parts = ["re", "im"] if info is not None else [None]
                for part in parts:
                    tc = trace_convergence_check(cfg.matrix, fs, n, info, part or "re")
                    rows.append([i, len(fs), n, tc.kind, tc.stage_value, tc.limit_value, tc.difference,
                                 tc.radius, tc.boundary_ratio, tc.constant, tc.bound, tc.passed])
                    checks.append(Check(f"telescope stage {i} power {n} {tc.kind}", tc.passed,
                                        f"{tc.difference:.3g} <= {tc.bound:.3g}"))
    return rows, checks


def _sandwich(cfg: ExperimentConfig, stages, classes) -> tuple[list[list], list[Check], list[str]]:
    from .sandwich import density_envelope, sandwich_diagnostic
    rows, checks, text = [], [], []
    sds = [s.sd for s in stages if s.sd is not None]
    if not cfg.sandwich_lambdas or not sds:
        return rows, checks, text
    kinds = [("standard", None)] + [(k, g) for g, _ in classes if g not in ("e", "1") for k in ("re", "im")]
    kap = kappa(cfg.matrix).kappa
    for lam in cfg.sandwich_lambdas:
        for n in cfg.sandwich_ns or (4, 16, 64):
            for kind, g in kinds:
                grid = cfg.grid if cfg.oracle and kind == "standard" and not cfg.group.is_finite else None
                if grid is not None:
                    try:
                        split_finite_free(cfg.group)
                    except SchemeError:
                        grid = None
                if lam > kap:
                    checks.append(Check(f"sandwich lambda={lam} n={n}", False, f"lambda above kappa = {kap:.6g}"))
                    continue
                rep = sandwich_diagnostic(cfg.matrix, sds, lam, n, kind, g, grid)
                tag = kind if g is None else f"{kind}[{g}]"
                for r in rep.rows + ([rep.limit_row] if rep.limit_row is not None else []):
                    rows.append([lam, n, tag, "oracle" if r.index < 0 else r.index, rep.polynomial.degree,
                                 r.F_lam, r.trace_P, r.upper, r.passed])
                checks.append(Check(f"sandwich lambda={lam} n={n} {tag}", rep.passed,
                                    f"degree {rep.polynomial.degree}"))
                env = rep.trace_envelope
                text.append(f"sandwich lambda={lam} n={n} {tag}: Tr P tail limsup {env.limsup:.10g}, "
                            f"liminf {env.liminf:.10g}" + (" (differ beyond tolerance)" if env.flagged else ""))
                de = density_envelope(sds, lam, n, kind, g, cfg.tolerances["envelope"])
                text.append(f"  lower density limsup {de.lower.limsup:.10g}, upper density liminf "
                            f"{de.upper.liminf:.10g}")
    return rows, checks, text


def run_converge(cfg: ExperimentConfig, out: Path, reproducible: bool = False, plots: bool = True) -> ConvergenceReport:
    classes = _classes(cfg)
    scheme = cfg.build_scheme()
    stages = _sweep(cfg, classes, reproducible)
    limit = limit_reference(cfg, classes)
    checks = [c for s in stages for c in s.checks]
    labels = [g for g, _ in classes]
    rep = ConvergenceReport("converge", cfg, stages, limit, checks)
    deltas = {g: rep.deltas(g) for g in labels}
    header = ["i", "stage", "dim", "route", "F0"] + [f"coeff[{g}]" for g in labels] + \
             [f"delta[{g}]" for g in labels] + ["F0_exact"] + [f"coeff_exact[{g}]" for g in labels]
    rows = []
    for k, s in enumerate(stages):
        rows.append([s.index, fmt(s.param), s.dim, s.route, s.F0_value()] + [s.value(g) for g in labels] +
                    [deltas[g][k] for g in labels] + [exact_text(s.F0_exact)] +
                    [exact_text(s.coeffs_exact.get(g)) for g in labels])
    if limit is not None:
        rows.append([limit.source, "", "", "exact" if limit.exact else "float", limit.F0] +
                    [limit.coeffs.get(g) for g in labels] + [""] * len(labels) + [""] * (1 + len(labels)))
    write_csv(out / "convergence.csv", header, rows)
    write_csv(out / "densities.csv", _density_header(labels),
              _density_rows(cfg, stages, classes, lambda lb: _oracle_density_rows(cfg, lb)))
    write_csv(out / "determinants.csv", *_determinant_table(stages, labels, limit))
    rep.files.extend([out / "convergence.csv", out / "densities.csv", out / "determinants.csv"])
    trows, tchecks = _telescope(cfg, scheme, classes)
    if trows:
        write_csv(out / "telescope.csv", ["i", "size", "power", "kind", "stage", "limit", "difference", "R",
                                          "boundary_ratio", "c_n", "bound", "passed"], trows)
        rep.files.append(out / "telescope.csv")
        rep.checks.extend(tchecks)
    srows, schecks, stext = _sandwich(cfg, stages, classes)
    if srows:
        write_csv(out / "sandwich.csv", ["lambda", "n", "kind", "i", "degree", "F_lambda", "trace_P", "upper",
                                         "passed"], srows)
        rep.files.append(out / "sandwich.csv")
        rep.checks.extend(schecks)
        rep.extra_text.extend([""] + stext)
    if "delta" in cfg.tolerances:
        for g in labels:
            last = deltas[g][-1] if deltas[g] else None
            if last is not None:
                rep.checks.append(Check(f"final delta[{g}] <= {cfg.tolerances['delta']}",
                                        last <= cfg.tolerances["delta"], f"{last:.3g}"))
    return _finish(rep, out, plots)


def _determinant_table(stages, labels, limit) -> tuple[list[str], list[list]]:
    header = ["i", "stage", "lndet"] + [f"lndet_re[{g}]" for g in labels] + [f"lndet_im[{g}]" for g in labels] + \
             ["B0", "B1", "B1_corrected", "kernel_dim", "bounds_pass"]
    rows = []
    for s in stages:
        d = s.det
        if d is None:
            continue
        b = d.bounds
        rows.append([s.index, fmt(s.param), d.lndet] + [d.lndet_dev_re.get(g) for g in labels] +
                    [d.lndet_dev_im.get(g) for g in labels] +
                    [None if b is None else b.B0, None if b is None else b.B1,
                     None if b is None else b.B1_corrected, float(d.kernel_dim),
                     all(d.checks().values()) if b is not None else ""])
    if limit is not None:
        rows.append([limit.source, "", limit.lndet] + [""] * (2 * len(labels)) + ["", "", "", limit.F0, ""])
    return header, rows


def run_detbound(cfg: ExperimentConfig, out: Path, reproducible: bool = False, plots: bool = True) -> ConvergenceReport:
    """Determinants per stage, the B0/B1 bounds and, for integer input, exact det* certificates."""
    from .sofic import det_star
    classes = _classes(cfg)
    scheme = cfg.build_scheme()
    items = list(enumerate(cfg.scheme.stages))
    A = cfg.matrix
    integral = A.is_exact() and is_algebraic_integer(A)

    def one(it):
        i, param = it
        s = analyze_stage(cfg, scheme, i, param, classes, want_exact=False, keep_realization=True,
                          bound_checks=True)
        cert = None
        if integral:
            cert = det_star(s.realization)
        s.realization = None
        return s, cert

    results = _map(one, items, reproducible)
    stages = [s for s, _ in results]
    checks = []
    text = [""]
    cert_rows = []
    for s, cert in results:
        checks.extend(c for c in s.checks if "B0" in c.name or "B1" in c.name or "kappa" in c.name)
        if cert is not None:
            n_sites = s.dim // A.d
            if cert.certificate is not None:
                ok = cert.certificate >= 1
                value = math.log(cert.certificate) / n_sites
                checks.append(Check(f"stage {s.index}: lndet ≥ 0", ok, f"det* certificate ({cert.certificate_kind}) "
                                    f"has {len(str(cert.certificate))} digits"))
                if cert.certificate_kind == "integer":
                    diff = abs(value - s.det.lndet)
                    checks.append(Check(f"stage {s.index}: certificate matches eigenvalue product",
                                        diff <= 1e-8 * (1 + abs(value)), f"|diff| = {diff:.3g}"))
            else:
                ok = s.det.lndet >= -1e-9
                checks.append(Check(f"stage {s.index}: lndet ≥ 0", ok, f"floating value {s.det.lndet:.6g}; {cert.note}"))
            cert_rows.append([s.index, fmt(s.param), s.det.lndet, cert.certificate_kind or "",
                              "" if cert.certificate is None else str(cert.certificate), cert.rank])
    labels = [g for g, _ in classes]
    write_csv(out / "determinants.csv", *_determinant_table(stages, labels, None))
    rep = ConvergenceReport("detbound", cfg, stages, None, checks, [out / "determinants.csv"], text)
    if cert_rows:
        write_csv(out / "certificates.csv", ["i", "stage", "lndet", "kind", "certificate", "rank"], cert_rows)
        rep.files.append(out / "certificates.csv")
    return _finish(rep, out, plots)


@dataclass
class SoficRow:
    index: int
    size: int
    delta: float
    lndet: float
    certificate_kind: str | None
    certificate: int | None
    rank: int


def run_sofic(cfg: ExperimentConfig, out: Path, reproducible: bool = False, plots: bool = True) -> ConvergenceReport:
    from .sofic import galois_sum_check, sofic_lndet_limit
    A = cfg.matrix
    if cfg.scheme.type != "sofic":
        raise SchemeError("the sofic subcommand needs [scheme] type = \"sofic\"")
    graphs = cfg.build_graphs()
    grid = None
    if cfg.oracle and not cfg.group.is_finite:
        try:
            split_finite_free(cfg.group)
            grid = cfg.grid
        except SchemeError:
            grid = None
    rep_l = sofic_lndet_limit(A, graphs, grid)
    integral = A.is_exact() and is_algebraic_integer(A)
    checks = []
    rows = []
    for k, (g, r) in enumerate(zip(graphs, rep_l.rows)):
        D = r.det
        rows.append([k, g.size, g.delta, r.lndet, D.certificate_kind or "",
                     "" if D.certificate is None else str(D.certificate), D.rank])
        if integral and D.certificate_kind == "integer":
            checks.append(Check(f"sofic stage {k} (|V| = {g.size}): lndet ≥ 0", D.certificate >= 1))
        elif integral and D.certificate_kind == "galois_sum":
            gs = galois_sum_check(A, g)
            checks.append(Check(f"sofic stage {k} (|V| = {g.size}): Galois-summed lndet ≥ 0", gs.passed,
                                f"sum {gs.total:.6g}, bound {gs.bound:.6g}"))
        elif integral:
            checks.append(Check(f"sofic stage {k} (|V| = {g.size}): lndet ≥ 0", r.lndet >= -1e-9,
                                f"floating value; {D.note}"))
        if g.delta == 0 and g.family in ("cycle", "torus", "cayley"):
            coherent = _coherence(A, g, cfg.tolerances)
            checks.append(Check(f"sofic stage {k}: kernel equals quotient stage", coherent))
    text = [""]
    if rep_l.oracle is not None:
        text.append(f"oracle lndet = {float(rep_l.oracle.value):.12g} (grid {rep_l.oracle.N})")
        for k, dlt in enumerate(rep_l.deltas()):
            text.append(f"sofic stage {k}: |lndet - oracle| = {dlt:.6g}")
    write_csv(out / "sofic.csv", ["i", "vertices", "delta", "lndet", "certificate_kind", "certificate", "rank"], rows)
    rep = ConvergenceReport("sofic", cfg, [], None, checks, [out / "sofic.csv"], text)
    rep.sofic_rows = rows
    rep.sofic_oracle = None if rep_l.oracle is None else float(rep_l.oracle.value)
    return _finish(rep, out, plots)


def _coherence(A: RingMatrix, graph, tol) -> bool:
    """Kernel on a quotient Cayley graph equals the inverse-limit stage of the same quotient."""
    from .groups import reduction_map
    from .sofic import sofic_kernel
    G = A.group
    if graph.family == "cayley":
        p = QuotientMap(G, G, tuple(G.generator_nf(i) for i in range(G.rank)))
    else:
        p = reduction_map(G, _quotient_size(graph))
    H = build_inverse_limit_stage(A, p)
    K = sofic_kernel(A, graph)
    return np.array_equal(K.matrix, H.matrix)


def _quotient_size(graph) -> int:
    split = split_finite_free(graph.group)
    return round((graph.size // split.U.order()) ** (1.0 / max(split.rank, 1)))


def run_oracle(cfg: ExperimentConfig, out: Path, reproducible: bool = False, plots: bool = True) -> ConvergenceReport:
    classes = _classes(cfg)
    from .oracle import oracle_density, oracle_kernel_coefficient, oracle_lndet
    A = cfg.matrix
    N = cfg.grid
    rows = []
    table = {}
    checks = []
    for label, info in classes:
        est = oracle_kernel_coefficient(A, info.representative, N)
        table[label] = est.value
        rows.append([label, est.value, est.coarse_value, est.error_estimate, est.flagged])
        checks.append(Check(f"oracle coeff[{label}] grid agreement", est.error_estimate <= cfg.tolerances["float"]
                            or est.flagged, f"N vs N/2: {est.error_estimate:.3g}"))
    dens = oracle_density(A, 0.0, N)
    ld = oracle_lndet(A, N)
    write_csv(out / "oracle.csv", ["g", "coefficient", "coarse", "error_estimate", "flagged"], rows)
    text = ["", "coefficients = {" + ", ".join(f"{g}: {_short(v)}" for g, v in table.items()) + "}",
            f"F0 = {_short(dens.value)}", f"lndet = {float(ld.value):.12g}" + (f" ({ld.note})" if ld.note else "")]
    limit = LimitRow("oracle", float(dens.value), table, float(ld.value))
    rep = ConvergenceReport("oracle", cfg, [], limit, checks, [out / "oracle.csv"], text)
    write_csv(out / "densities.csv", _density_header([g for g, _ in classes]),
              _oracle_density_rows(cfg, [g for g, _ in classes]))
    rep.files.append(out / "densities.csv")
    return _finish(rep, out, plots)


def _short(v) -> str:
    """Rounded display value: 12 significant digits, imaginary part dropped when negligible."""
    v = complex(v)
    if abs(v.imag) <= 1e-12:
        r = round(v.real, 12)
        return f"{r + 0.0:.12g}"
    return f"{v.real:.12g}{v.imag:+.12g}j"


COMMANDS = {
    "density": run_density,
    "converge": run_converge,
    "detbound": run_detbound,
    "sofic": run_sofic,
    "oracle": run_oracle,
}


def run(cfg: ExperimentConfig, command: str = "converge", out: str | Path | None = None,
        reproducible: bool = False, plots: bool = True) -> ConvergenceReport:
    if command not in COMMANDS:
        raise ValueError(f"unknown subcommand {command!r}; expected one of {sorted(COMMANDS)}")
    outdir = Path(out) if out is not None else cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    return COMMANDS[command](cfg, outdir, reproducible, plots)
