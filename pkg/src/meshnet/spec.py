"""Functional specification: the user's declarative intent for one solve.

Config files are YAML mappings; the README lists every key.
Unknown keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any

import yaml

MODES = ("network", "floorplan", "gamelevel")
FEATURES = ("dead_end", "branch", "zigzag", "proximity", "t_junction")

DEFAULT_PATTERNS = {
    # walks from a half-edge: L = left turn, R = right turn, P = opposite edge of the left face
    "zigzag": (("L", "R"), ("R", "L")),
    "proximity": (("P",),),
}


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class FeaturePolicy:
    mode: str = "allowed"
    weight: float = 0.0

    def __post_init__(self):
        if self.mode not in ("allowed", "penalized", "forbidden"):
            raise SpecError(f"unknown feature policy {self.mode!r}")
        if self.mode == "penalized" and not (self.weight >= 0 and math.isfinite(self.weight)):
            raise SpecError("penalty weights must be finite and nonnegative")
        if self.mode != "penalized" and self.weight != 0:
            raise SpecError(f"{self.mode} features carry no weight")

    @property
    def forbidden(self) -> bool:
        return self.mode == "forbidden"

    @property
    def penalized(self) -> bool:
        return self.mode == "penalized"

    @classmethod
    def parse(cls, value: Any) -> "FeaturePolicy":
        """Accepts ``allowed``/``forbidden``/``inf``, a weight, or ``{penalized: w}``."""
        if isinstance(value, FeaturePolicy):
            return value
        if isinstance(value, bool):
            return cls("allowed") if value else cls("forbidden")
        if isinstance(value, dict):
            if set(value) != {"penalized"}:
                raise SpecError(f"bad feature policy {value!r}")
            return cls("penalized", float(value["penalized"]))
        if isinstance(value, str):
            v = value.strip().lower()
            if v in ("allowed", "y", "yes"):
                return cls("allowed")
            if v in ("forbidden", "inf", "n", "no"):
                return cls("forbidden")
            try:
                value = float(v)
            except ValueError:
                raise SpecError(f"bad feature policy {value!r}") from None
        if isinstance(value, (int, float)):
            w = float(value)
            if math.isinf(w) and w > 0:
                return cls("forbidden")
            if w < 0 or math.isnan(w):
                raise SpecError("penalty weights must be nonnegative")
            return cls("penalized", w) if w > 0 else cls("allowed")
        raise SpecError(f"bad feature policy {value!r}")

    def to_config(self):
        return self.weight if self.penalized else self.mode


def _pairs(value, what: str) -> tuple[tuple[int, int], ...]:
    out = []
    for item in value or ():
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise SpecError(f"{what} entries must be vertex pairs, got {item!r}")
        out.append((int(item[0]), int(item[1])))
    return tuple(out)


@dataclass(frozen=True)
class FunctionalSpec:
    mode: str = "network"
    coverage_radius: int = 1
    length_weight: float = 1.0
    distance_weight: float = 0.0
    dead_end: FeaturePolicy = FeaturePolicy()
    branch: FeaturePolicy = FeaturePolicy()
    zigzag: FeaturePolicy = FeaturePolicy()
    proximity: FeaturePolicy = FeaturePolicy()
    t_junction: FeaturePolicy = FeaturePolicy()
    point_to_point: bool = False
    path_tolerance: int = 2
    partition_seed: int = 0
    # "mesh" (document sinks), "boundary", or an explicit vertex tuple
    sinks: Any = "mesh"
    forced_routes: tuple[tuple[int, int], ...] = ()
    edges_active: tuple[tuple[int, int], ...] = ()
    edges_inactive: tuple[tuple[int, int], ...] = ()
    vertices_active: tuple[int, ...] = ()
    vertices_inactive: tuple[int, ...] = ()
    exclude_boundary_edges: bool | None = None
    tight_big_m: bool = False
    templates: str | None = None
    patterns: dict = field(default_factory=lambda: dict(DEFAULT_PATTERNS))

    def __post_init__(self):
        if self.mode not in MODES:
            raise SpecError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.coverage_radius) != self.coverage_radius or self.coverage_radius < 0:
            raise SpecError("coverage_radius must be a nonnegative integer")
        for name in ("length_weight", "distance_weight"):
            w = getattr(self, name)
            if not (w >= 0 and math.isfinite(w)):
                raise SpecError(f"{name} must be finite and nonnegative")
        if self.path_tolerance < 0:
            raise SpecError("path tolerance must be nonnegative")
        if isinstance(self.sinks, str):
            if self.sinks not in ("mesh", "boundary"):
                raise SpecError("sinks must be 'mesh', 'boundary' or a vertex list")
        else:
            object.__setattr__(self, "sinks", tuple(int(v) for v in self.sinks))
        for kind, walks in self.patterns.items():
            if kind not in ("zigzag", "proximity"):
                raise SpecError(f"unknown pattern family {kind!r}")
            for walk in walks:
                if not walk or any(step not in ("L", "R", "P") for step in walk):
                    raise SpecError(f"bad pattern walk {walk!r}")

    @property
    def excludes_boundary(self) -> bool:
        if self.exclude_boundary_edges is None:
            return self.mode == "network"
        return bool(self.exclude_boundary_edges)

    def feature(self, name: str) -> FeaturePolicy:
        return getattr(self, name)

    def with_weights(self, length: float, distance: float) -> "FunctionalSpec":
        return replace(self, length_weight=float(length), distance_weight=float(distance))

    def replace(self, **changes) -> "FunctionalSpec":
        return replace(self, **changes)


_TOP_KEYS = {
    "mode",
    "coverage_radius",
    "weights",
    "features",
    "sinks",
    "point_to_point",
    "forced_routes",
    "fixings",
    "exclude_boundary_edges",
    "big_m",
    "templates",
    "patterns",
}


def _check_keys(section: dict, allowed: set[str], where: str):
    if not isinstance(section, dict):
        raise SpecError(f"{where} must be a mapping")
    unknown = set(section) - allowed
    if unknown:
        raise SpecError(f"unknown key(s) in {where}: {', '.join(sorted(map(str, unknown)))}")


def spec_from_dict(cfg: dict) -> FunctionalSpec:
    """Build a :class:`FunctionalSpec` from a parsed config mapping."""
    cfg = cfg or {}
    _check_keys(cfg, _TOP_KEYS, "spec")
    kw: dict[str, Any] = {}
    for key in ("mode", "coverage_radius", "exclude_boundary_edges", "templates"):
        if key in cfg:
            kw[key] = cfg[key]
    if "weights" in cfg:
        w = cfg["weights"]
        _check_keys(w, {"length", "distance"}, "weights")
        if "length" in w:
            kw["length_weight"] = float(w["length"])
        if "distance" in w:
            kw["distance_weight"] = float(w["distance"])
    if "features" in cfg:
        feats = cfg["features"]
        _check_keys(feats, set(FEATURES), "features")
        for name, value in feats.items():
            kw[name] = FeaturePolicy.parse(value)
    if "sinks" in cfg:
        s = cfg["sinks"]
        kw["sinks"] = s if isinstance(s, str) else tuple(int(v) for v in s)
    if "point_to_point" in cfg:
        p = cfg["point_to_point"]
        if isinstance(p, bool):
            p = {"enabled": p}
        _check_keys(p, {"enabled", "tolerance", "seed"}, "point_to_point")
        kw["point_to_point"] = bool(p.get("enabled", True))
        kw["path_tolerance"] = int(p.get("tolerance", 2))
        kw["partition_seed"] = int(p.get("seed", 0))
    if "forced_routes" in cfg:
        kw["forced_routes"] = _pairs(cfg["forced_routes"], "forced_routes")
    if "fixings" in cfg:
        fx = cfg["fixings"]
        _check_keys(
            fx, {"edges_active", "edges_inactive", "vertices_active", "vertices_inactive"}, "fixings"
        )
        kw["edges_active"] = _pairs(fx.get("edges_active"), "edges_active")
        kw["edges_inactive"] = _pairs(fx.get("edges_inactive"), "edges_inactive")
        kw["vertices_active"] = tuple(int(v) for v in fx.get("vertices_active") or ())
        kw["vertices_inactive"] = tuple(int(v) for v in fx.get("vertices_inactive") or ())
    if "big_m" in cfg:
        if cfg["big_m"] not in ("global", "tight"):
            raise SpecError("big_m must be 'global' or 'tight'")
        kw["tight_big_m"] = cfg["big_m"] == "tight"
    if "patterns" in cfg:
        pats = cfg["patterns"]
        _check_keys(pats, {"zigzag", "proximity"}, "patterns")
        merged = dict(DEFAULT_PATTERNS)
        merged.update({k: tuple(tuple(w) for w in v) for k, v in pats.items()})
        kw["patterns"] = merged
    try:
        return FunctionalSpec(**kw)
    except TypeError as exc:
        raise SpecError(str(exc)) from None


def load_spec(text: str) -> FunctionalSpec:
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"spec is not valid YAML: {exc}") from None
    return spec_from_dict(cfg or {})


def spec_to_dict(spec: FunctionalSpec) -> dict:
    out: dict[str, Any] = {
        "mode": spec.mode,
        "coverage_radius": spec.coverage_radius,
        "weights": {"length": spec.length_weight, "distance": spec.distance_weight},
        "features": {name: spec.feature(name).to_config() for name in FEATURES},
        "sinks": spec.sinks if isinstance(spec.sinks, str) else list(spec.sinks),
        "point_to_point": {
            "enabled": spec.point_to_point,
            "tolerance": spec.path_tolerance,
            "seed": spec.partition_seed,
        },
        "forced_routes": [list(p) for p in spec.forced_routes],
        "fixings": {
            "edges_active": [list(p) for p in spec.edges_active],
            "edges_inactive": [list(p) for p in spec.edges_inactive],
            "vertices_active": list(spec.vertices_active),
            "vertices_inactive": list(spec.vertices_inactive),
        },
        "big_m": "tight" if spec.tight_big_m else "global",
        "patterns": {k: [list(w) for w in v] for k, v in spec.patterns.items()},
    }
    if spec.exclude_boundary_edges is not None:
        out["exclude_boundary_edges"] = spec.exclude_boundary_edges
    if spec.templates is not None:
        out["templates"] = spec.templates
    return out
