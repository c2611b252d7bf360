"""Experiment configuration documents (YAML)."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Mapping

import yaml

from trajtax.cv import PI_SEEDS, CvProtocol
from trajtax.errors import ConfigurationError, ProtocolError
from trajtax.models.api import FAMILIES
from trajtax.models.grid import HyperGrid, load_grids
from trajtax.selection import DEFAULT_TOLERANCE, METHODS
from trajtax.taxonomy import Taxonomy, default_taxonomy
from trajtax.trajectory import ColumnMapping


@dataclass
class ResampleSpec:
    per_class: int
    seed: int = 42
    top_k: int | None = None
    classes: list[str] | None = None
    replace: bool = False


@dataclass
class ExperimentConfig:
    dataset_name: str = "dataset"
    dataset_path: str | None = None
    features_path: str | None = None
    columns: ColumnMapping = field(default_factory=ColumnMapping)
    resample: ResampleSpec | None = None
    taxonomy: Taxonomy = field(default_factory=default_taxonomy)
    methods: tuple[str, ...] = METHODS
    families: tuple[str, ...] = FAMILIES
    protocol: CvProtocol = field(default_factory=lambda: CvProtocol(PI_SEEDS, 5, (False, True)))
    tolerance: float = DEFAULT_TOLERANCE
    grids: HyperGrid = field(default_factory=load_grids)
    hyperparameters: dict[str, dict[str, Any]] = field(default_factory=dict)
    output: str = "out"
    source: str | None = None

    def with_seeds(self, seeds) -> "ExperimentConfig":
        self.protocol = CvProtocol(tuple(seeds), self.protocol.folds, self.protocol.tuned)
        return self


def _resolve(base: str, p: str | None) -> str | None:
    if p is None:
        return None
    p = os.path.expanduser(str(p))
    return p if os.path.isabs(p) else os.path.normpath(os.path.join(base, p))


def _as_list(doc: Mapping, key: str, default) -> list:
    value = doc.get(key, default)
    if isinstance(value, (str, bool, int)):
        value = [value]
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigurationError(f"{key!r} must be a non-empty list")
    return list(value)


def parse_config(doc: Mapping | None, base_dir: str = ".", check_paths: bool = True) -> ExperimentConfig:
    """Build and validate a config from a parsed document.

    Relative paths resolve against ``base_dir``. Every key is optional except
    a data source (``dataset.path`` or ``features``).
    """
    doc = dict(doc or {})
    known = {"dataset", "features", "resample", "taxonomy", "methods", "families", "tuned",
             "protocol", "selection", "grids", "hyperparameters", "output"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig()

    ds = doc.get("dataset") or {}
    if not isinstance(ds, Mapping):
        raise ConfigurationError("'dataset' must be a mapping")
    cfg.dataset_name = str(ds.get("name", "dataset"))
    cfg.dataset_path = _resolve(base_dir, ds.get("path"))
    cols = dict(ds.get("columns") or {})
    bad = set(cols) - {"trajectory_id", "latitude", "longitude", "timestamp", "label"}
    if bad:
        raise ConfigurationError(f"unknown column mapping keys: {sorted(bad)}")
    cfg.columns = ColumnMapping(**cols, delimiter=str(ds.get("delimiter", ",")))
    cfg.features_path = _resolve(base_dir, doc.get("features"))
    if cfg.dataset_path is None and cfg.features_path is None:
        raise ConfigurationError("config needs dataset.path or features")
    if check_paths:
        for p in (cfg.dataset_path, cfg.features_path):
            if p is not None and not os.path.exists(p):
                raise ConfigurationError(f"path does not exist: {p}")

    rs = doc.get("resample")
    if rs:
        try:
            cfg.resample = ResampleSpec(**rs)
        except TypeError as exc:
            raise ConfigurationError(f"bad resample section: {exc}") from exc

    tax = doc.get("taxonomy")
    if isinstance(tax, str) and tax != "default":
        with open(_resolve(base_dir, tax), encoding="utf-8") as fh:
            cfg.taxonomy = Taxonomy.from_dict(yaml.safe_load(fh))
    elif isinstance(tax, Mapping):
        cfg.taxonomy = Taxonomy.from_dict(tax)

    cfg.methods = tuple(_as_list(doc, "methods", list(METHODS)))
    cfg.families = tuple(_as_list(doc, "families", list(FAMILIES)))
    for m in cfg.methods:
        if m not in METHODS:
            raise ConfigurationError(f"unknown method {m!r}; expected {METHODS}")
    for f in cfg.families:
        if f not in FAMILIES:
            raise ConfigurationError(f"unknown family {f!r}; expected {FAMILIES}")
    tuned = _as_list(doc, "tuned", [False, True])

    proto = doc.get("protocol") or {}
    try:
        cfg.protocol = CvProtocol(
            seeds=tuple(int(s) for s in proto.get("seeds", PI_SEEDS)),
            folds=int(proto.get("folds", 5)),
            tuned=tuple(bool(t) for t in tuned),
        )
    except (ProtocolError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"invalid protocol: {exc}") from exc

    sel = doc.get("selection") or {}
    cfg.tolerance = float(sel.get("tolerance", DEFAULT_TOLERANCE))
    cfg.grids = load_grids(doc.get("grids"))
    hp = doc.get("hyperparameters") or {}
    for family, params in hp.items():
        if family not in FAMILIES:
            raise ConfigurationError(f"hyperparameters for unknown family {family!r}")
        cfg.hyperparameters[family] = {k: (tuple(v) if isinstance(v, list) else v) for k, v in params.items()}
    cfg.output = _resolve(base_dir, doc.get("output", "out"))
    return cfg


def load_config(path: str, check_paths: bool = True) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: invalid YAML: {exc}") from exc
    if doc is not None and not isinstance(doc, Mapping):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    cfg = parse_config(doc, os.path.dirname(os.path.abspath(path)), check_paths)
    cfg.source = path
    return cfg
