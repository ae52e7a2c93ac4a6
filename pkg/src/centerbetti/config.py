"""Experiment configuration: one TOML (or JSON) document per run.

Example::

    seed = 0
    track = ["e", "t"]

    [group]
    kind = "product"
    components = [{kind = "cyclic", order = 2, generators = ["t"]},
                  {kind = "abelian", generators = ["u"]}]

    [matrix]
    witness = [[ [["e", "1"], ["t", "-1"]] ]]    # A = B* B

    [scheme]
    type = "inverse_limit"
    moduli = [2, 4, 8, 16]

    [oracle]
    enabled = true
    grid = 4096
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import tomli

from .approximation import (DirectLimit, DirectLimitStage, FolnerCompression, FolnerSet, InverseLimit,
                            SchemeError, check_tracked_in_center_of_U, split_finite_free)
from .groups import (GroupDescriptor, GroupError, QuotientMap, conjugacy_class, cyclic, direct_product,
                     finite_table, free_abelian, free_group, symmetric3, trivial_group)
from .ring import RingError, RingMatrix, positive_from_witness

OUT_ENV = "CENTERBETTI_OUT"

DEFAULT_TOLERANCES = {
    "exact": 1e-12,
    "float": 1e-6,
    "domination": 1e-9,
    "positivity": 1e-12,
    "hermitian": 1e-12,
    "partial_integration": 1e-8,
    "envelope": 1e-6,
    "exact_limit": 512,
    "float_limit": 2048,
}
OPTIONAL_TOLERANCES = ("tau", "delta")

SCHEME_TYPES = ("inverse_limit", "folner", "direct_limit", "sofic")


class ConfigError(ValueError):
    pass


def _where(path: str, msg: str) -> ConfigError:
    return ConfigError(f"{path}: {msg}")


# -- groups -------------------------------------------------------------------


def parse_group(section: dict, path: str = "[group]") -> GroupDescriptor:
    if not isinstance(section, dict):
        raise _where(path, "expected a table")
    kind = section.get("kind")
    gens = section.get("generators")
    try:
        if kind == "abelian":
            return free_abelian(tuple(gens or ("u",)))
        if kind == "free":
            return free_group(tuple(gens or ("a", "b")))
        if kind == "cyclic":
            if "order" not in section:
                raise _where(path, "cyclic group needs 'order'")
            return cyclic(int(section["order"]), (gens or ["u"])[0])
        if kind == "symmetric3":
            return symmetric3(tuple(gens or ("s", "r")))
        if kind == "trivial":
            return trivial_group((gens or ["one"])[0])
        if kind == "table":
            table = section.get("table")
            elems = section.get("generator_elements")
            if table is None or elems is None:
                raise _where(path, "table group needs 'table' and 'generator_elements'")
            if isinstance(elems, dict):
                items = list(elems.items())
            else:
                items = list(zip(gens, elems))
            return finite_table(table, items, int(section.get("identity", 0)))
        if kind == "product":
            comps = section.get("components")
            if not comps:
                raise _where(path, "product needs 'components'")
            return direct_product(*(parse_group(c, f"{path}.components[{i}]") for i, c in enumerate(comps)))
    except GroupError as exc:
        raise _where(path, str(exc)) from None
    raise _where(path, f"unknown group kind {kind!r}")


# -- matrices -----------------------------------------------------------------


def _entry_pairs(entry, path: str) -> list:
    if isinstance(entry, dict):
        return [(w, c) for w, c in entry.items()]
    if isinstance(entry, list):
        out = []
        for j, pair in enumerate(entry):
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise _where(f"{path}[{j}]", f"expected [word, coefficient], got {pair!r}")
            out.append(tuple(pair))
        return out
    raise _where(path, f"expected a list of [word, coefficient] pairs or a table, got {entry!r}")


def parse_matrix(G: GroupDescriptor, nested, path: str) -> RingMatrix:
    if not isinstance(nested, list) or not nested:
        raise _where(path, "expected a nonempty d x d list")
    d = len(nested)
    rows = []
    for k, row in enumerate(nested):
        if not isinstance(row, list) or len(row) != d:
            raise _where(f"{path}[{k}]", f"row must have {d} entries")
        rows.append([_entry_pairs(e, f"{path}[{k}][{l}]") for l, e in enumerate(row)])
    try:
        return RingMatrix.parse(G, rows)
    except (GroupError, RingError, ValueError) as exc:
        raise _where(path, str(exc)) from None


# -- schemes --------------------------------------------------------------------


def _increasing(values, path: str) -> list[int]:
    try:
        vals = [int(v) for v in values]
    except (TypeError, ValueError):
        raise _where(path, "expected a list of integers") from None
    if not vals:
        raise _where(path, "stage list is empty")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise _where(path, f"stage list must be strictly increasing, got {vals}")
    if vals[0] < 1:
        raise _where(path, "stage parameters must be positive")
    return vals


@dataclass(frozen=True)
class SchemeConfig:
    type: str
    stages: tuple = ()
    family: str = ""
    radius: int | None = None
    path: str | None = None
    rank: int | None = None
    direct: tuple = ()
    lifts: dict = field(default_factory=dict)


def parse_scheme(G: GroupDescriptor, section: dict, base_dir: Path) -> SchemeConfig:
    path = "[scheme]"
    if not isinstance(section, dict):
        raise _where(path, "expected a table")
    kind = section.get("type")
    if kind not in SCHEME_TYPES:
        raise _where(f"{path}.type", f"expected one of {SCHEME_TYPES}, got {kind!r}")
    if kind == "inverse_limit":
        return SchemeConfig(kind, tuple(_increasing(section.get("moduli", ()), f"{path}.moduli")))
    if kind == "folner":
        return SchemeConfig(kind, tuple(_increasing(section.get("sizes", ()), f"{path}.sizes")))
    if kind == "sofic":
        family = section.get("family")
        if family not in ("cycle", "torus", "cayley", "file"):
            raise _where(f"{path}.family", f"unknown sofic family {family!r}")
        radius = section.get("radius")
        if family in ("cycle", "torus"):
            stages = tuple(_increasing(section.get("sizes", ()), f"{path}.sizes"))
        elif family == "cayley":
            stages = (G.order() if G.is_finite else 0,)
        else:
            files = section.get("paths") or ([section["path"]] if "path" in section else [])
            if not files:
                raise _where(f"{path}.paths", "family 'file' needs 'paths'")
            stages = tuple(str((base_dir / f).resolve()) for f in files)
        return SchemeConfig(kind, stages, family, None if radius is None else int(radius))
    stages = section.get("stages")
    if not isinstance(stages, list) or not stages:
        raise _where(f"{path}.stages", "direct limit needs a list of stage tables")
    lifts = section.get("lifts", {})
    return SchemeConfig(kind, tuple(range(len(stages))), direct=tuple(stages), lifts=dict(lifts))


def _direct_limit(G: GroupDescriptor, sc: SchemeConfig, seed: int) -> DirectLimit:
    groups = [parse_group(st.get("group", {}), f"[scheme].stages[{i}].group") for i, st in enumerate(sc.direct)]
    stages = []
    for i, (st, H) in enumerate(zip(sc.direct, groups)):
        where = f"[scheme].stages[{i}]"
        try:
            to_limit = QuotientMap(H, G, tuple(G.parse(w).nf for w in st.get("to_limit", ())))
            connecting = None
            if i + 1 < len(groups):
                nxt = groups[i + 1]
                connecting = QuotientMap(H, nxt, tuple(nxt.parse(w).nf for w in st.get("connecting", ())))
        except GroupError as exc:
            raise _where(where, str(exc)) from None
        stages.append(DirectLimitStage(H, to_limit, connecting))
    explicit = {}
    for word, choice in sc.lifts.items():
        j, w = choice
        explicit[G.parse(word).nf] = (int(j), groups[int(j)].parse(w).nf)
    return DirectLimit(tuple(stages), seed, explicit)


# -- experiment -----------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    group: GroupDescriptor
    matrix: RingMatrix
    track: tuple[str, ...]
    scheme: SchemeConfig
    oracle: bool = True
    grid: int = 4096
    output: str = "out"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    witness: RingMatrix | None = None
    sandwich_lambdas: tuple = ()
    sandwich_ns: tuple = ()
    powers: int = 0
    source: str | None = None

    @property
    def output_dir(self) -> Path:
        return Path(os.environ.get(OUT_ENV) or self.output)

    def tracked_classes(self):
        out = []
        for w in self.track:
            try:
                g = self.group.parse(w)
            except GroupError as exc:
                raise _where("track", str(exc)) from None
            info = conjugacy_class(g)
            if not info.is_finite:
                raise _where("track", f"class of {w!r} is {info.status.value}; only finite-conjugacy "
                                      "elements carry delocalized coefficients")
            out.append((w, info))
        if self.scheme.type == "folner":
            try:
                check_tracked_in_center_of_U(self.matrix, [c for _, c in out])
            except SchemeError as exc:
                raise _where("track", str(exc)) from None
        return out

    def with_stages(self, stages) -> "ExperimentConfig":
        vals = tuple(_increasing(stages, "--stages"))
        return replace(self, scheme=replace(self.scheme, stages=vals))

    def build_scheme(self):
        sc = self.scheme
        G = self.group
        if sc.type == "inverse_limit":
            return InverseLimit.reductions(G, sc.stages)
        if sc.type == "folner":
            split = split_finite_free(G)
            return FolnerCompression(split.U, tuple(FolnerSet.box(n, split.rank, i)
                                                    for i, n in enumerate(sc.stages)))
        if sc.type == "direct_limit":
            return _direct_limit(G, sc, self.seed)
        return None

    def build_graphs(self, radius: int | None = None):
        from .sofic import build_sofic_stage
        sc = self.scheme
        r = radius if radius is not None else (sc.radius if sc.radius is not None else
                                               max(self.matrix.support_radius(), 1))
        if sc.family == "file":
            return [build_sofic_stage(self.group, "file", radius=r, path=p) for p in sc.stages]
        if sc.family == "cayley":
            return [build_sofic_stage(self.group, "cayley", radius=r)]
        return [build_sofic_stage(self.group, sc.family, n, radius=r) for n in sc.stages]


def _read_document(path: Path) -> dict:
    text = path.read_text()
    if path.suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return config_from_dict(_read_document(path), base_dir=path.parent, source=str(path))


def config_from_dict(doc: dict[str, Any], base_dir: Path | None = None, source: str | None = None) -> ExperimentConfig:
    base_dir = base_dir or Path(".")
    known = {"group", "matrix", "scheme", "track", "oracle", "output", "tolerances", "seed", "sandwich",
             "telescope"}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    if "group" not in doc:
        raise ConfigError("missing [group] table")
    G = parse_group(doc["group"])
    mspec = doc.get("matrix")
    if not isinstance(mspec, dict):
        raise ConfigError("missing [matrix] table")
    witness = None
    if "entries" in mspec and "witness" in mspec:
        raise _where("[matrix]", "give either 'entries' or 'witness', not both")
    if "witness" in mspec:
        witness = parse_matrix(G, mspec["witness"], "[matrix].witness")
        A = positive_from_witness(witness)
    elif "entries" in mspec:
        A = parse_matrix(G, mspec["entries"], "[matrix].entries")
    else:
        raise _where("[matrix]", "needs 'entries' or 'witness'")
    if not A.is_hermitian(1e-12):
        raise _where("[matrix]", "matrix is not self-adjoint")
    if "scheme" not in doc:
        raise ConfigError("missing [scheme] table")
    scheme = parse_scheme(G, doc["scheme"], base_dir)
    track = doc.get("track", ["e"])
    if isinstance(track, str):
        track = [track]
    oracle = doc.get("oracle", {})
    if isinstance(oracle, bool):
        oracle = {"enabled": oracle}
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in doc.get("tolerances", {}).items():
        if k not in tol and k not in OPTIONAL_TOLERANCES:
            raise _where("[tolerances]", f"unknown key {k!r}; known: {sorted(tol) + list(OPTIONAL_TOLERANCES)}")
        tol[k] = float(v)
    sw = doc.get("sandwich", {})
    tel = doc.get("telescope", {})
    cfg = ExperimentConfig(
        group=G, matrix=A, track=tuple(str(t) for t in track), scheme=scheme,
        oracle=bool(oracle.get("enabled", True)), grid=int(oracle.get("grid", 4096)),
        output=str(doc.get("output", "out")), tolerances=tol, seed=int(doc.get("seed", 0)),
        witness=witness, sandwich_lambdas=tuple(float(x) for x in sw.get("lambdas", ())),
        sandwich_ns=tuple(int(x) for x in sw.get("n", ())), powers=int(tel.get("powers", 0)),
        source=source)
    cfg.tracked_classes()
    return cfg
