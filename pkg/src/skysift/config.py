"""Declarative run configuration for the pipeline driver.

One document describes one detection run: input location, clustering
and scoring knobs, trajectory fitting knobs, output directory. Unknown
keys anywhere are rejected so a typo cannot silently fall back to a
default. Every leaf is also addressable by a flat override key (the
command line uses these for flag and sweep handling).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import yaml

from .clustering import DbscanParams
from .errors import InvalidConfig
from .scoring import PAIR_SCHEDULES, ScoringParams

FORMATS = ("csv", "pcd")
REDUCERS = ("centroid", "median")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a detect run needs besides the data itself."""

    input: Optional[str] = None
    format: str = "csv"
    output_dir: str = "out"
    dbscan: DbscanParams = field(default_factory=DbscanParams)
    voxel_edge: float = 0.5
    scoring: ScoringParams = field(default_factory=ScoringParams)
    outlier_gate: float = 3.0
    reducer: str = "centroid"
    max_degree: int = 3
    min_margin: float = 0.1
    max_dt: float = 0.5

    def __post_init__(self):
        if self.format not in FORMATS:
            raise InvalidConfig(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.voxel_edge <= 0:
            raise InvalidConfig(f"voxel_edge must be > 0, got {self.voxel_edge}")
        if self.reducer not in REDUCERS:
            raise InvalidConfig(f"reducer must be one of {REDUCERS}, got {self.reducer!r}")
        if not 1 <= self.max_degree <= 5:
            raise InvalidConfig(f"max_degree must be in 1..5, got {self.max_degree}")
        if self.min_margin < 0:
            raise InvalidConfig(f"min_margin must be >= 0, got {self.min_margin}")
        if self.max_dt < 0:
            raise InvalidConfig(f"max_dt must be >= 0, got {self.max_dt}")


# flat key -> (section or None, field, type); bool/int/float/str coercion
# happens when the value arrives as a string (command line).
OVERRIDE_KEYS = {
    "input": (None, "input", str),
    "format": (None, "format", str),
    "output_dir": (None, "output_dir", str),
    "eps": ("dbscan", "eps", float),
    "min_pts": ("dbscan", "min_pts", int),
    "voxel_edge": (None, "voxel_edge", float),
    "iou_weight": ("scoring", "iou_weight", float),
    "iou_floor": ("scoring", "iou_floor", float),
    "pair_schedule": ("scoring", "pair_schedule", str),
    "window_len": ("scoring", "window_len", int),
    "rerun_local_clustering": ("scoring", "rerun_local_clustering", bool),
    "max_cluster_voxels": ("scoring", "max_cluster_voxels", int),
    "outlier_gate": (None, "outlier_gate", float),
    "reducer": (None, "reducer", str),
    "max_degree": (None, "max_degree", int),
    "min_margin": (None, "min_margin", float),
    "max_dt": (None, "max_dt", float),
}

_SECTION_KEYS = {
    "dbscan": {"eps", "min_pts"},
    "scoring": {"iou_weight", "iou_floor", "pair_schedule", "window_len",
                "rerun_local_clustering", "max_cluster_voxels"},
    "trajectory": {"outlier_gate", "reducer", "max_degree"},
    "selection": {"min_margin"},
    "evaluation": {"max_dt"},
}
_TOP_KEYS = {"input", "format", "output_dir", "voxel_edge"} | set(_SECTION_KEYS)


def _check_mapping(d, name: str, allowed: set) -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise InvalidConfig(f"{name} must be a mapping, got {type(d).__name__}")
    unknown = set(d) - allowed
    if unknown:
        raise InvalidConfig(f"unknown {name} keys: {sorted(unknown)}")
    return d


def config_from_dict(doc: dict) -> PipelineConfig:
    """Validate a parsed document into a PipelineConfig.

    Raises InvalidConfig for unknown keys or invariant violations
    anywhere in the tree (so bad configs die before any data is read).
    """
    doc = _check_mapping(doc, "config", _TOP_KEYS)
    sections = {name: _check_mapping(doc.get(name), name, keys)
                for name, keys in _SECTION_KEYS.items()}
    try:
        dbscan = DbscanParams(**sections["dbscan"])
        scoring = ScoringParams(**sections["scoring"])
        return PipelineConfig(
            input=doc.get("input"),
            format=doc.get("format", "csv"),
            output_dir=doc.get("output_dir", "out"),
            dbscan=dbscan,
            voxel_edge=doc.get("voxel_edge", 0.5),
            scoring=scoring,
            **sections["trajectory"],
            **sections["selection"],
            **sections["evaluation"],
        )
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(str(exc)) from exc


def config_to_dict(cfg: PipelineConfig) -> dict:
    return {
        "input": cfg.input,
        "format": cfg.format,
        "output_dir": cfg.output_dir,
        "dbscan": {"eps": cfg.dbscan.eps, "min_pts": cfg.dbscan.min_pts},
        "voxel_edge": cfg.voxel_edge,
        "scoring": {
            "iou_weight": cfg.scoring.iou_weight,
            "iou_floor": cfg.scoring.iou_floor,
            "pair_schedule": cfg.scoring.pair_schedule,
            "window_len": cfg.scoring.window_len,
            "rerun_local_clustering": cfg.scoring.rerun_local_clustering,
            "max_cluster_voxels": cfg.scoring.max_cluster_voxels,
        },
        "trajectory": {"outlier_gate": cfg.outlier_gate, "reducer": cfg.reducer,
                       "max_degree": cfg.max_degree},
        "selection": {"min_margin": cfg.min_margin},
        "evaluation": {"max_dt": cfg.max_dt},
    }


def load_config(path) -> PipelineConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise InvalidConfig(f"config {path} is not valid YAML: {exc}") from exc
    return config_from_dict(doc or {})


def save_config(cfg: PipelineConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=True)


def _coerce(raw, typ, key: str):
    if not isinstance(raw, str):
        return raw
    try:
        if typ is bool:
            lowered = raw.strip().lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return typ(raw)
    except ValueError as exc:
        raise InvalidConfig(f"bad value for {key}: {exc}") from exc


def apply_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Apply flat-key overrides (flag values win over the document)."""
    for key, raw in overrides.items():
        if key not in OVERRIDE_KEYS:
            raise InvalidConfig(f"unknown parameter {key!r}; valid: "
                                f"{sorted(OVERRIDE_KEYS)}")
        section, fname, typ = OVERRIDE_KEYS[key]
        value = _coerce(raw, typ, key)
        try:
            if section is None:
                cfg = replace(cfg, **{fname: value})
            else:
                cfg = replace(cfg, **{section: replace(getattr(cfg, section),
                                                       **{fname: value})})
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(str(exc)) from exc
    return cfg
