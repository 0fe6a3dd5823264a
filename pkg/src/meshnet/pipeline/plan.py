"""Multi-level plans for street generation.

A plan is a YAML mapping::

    levels:
      - name: arterial
        subdivide: false        # subdivide the mesh before solving this level
        sinks: explicit         # explicit: use the spec's sinks; inherit: parent network vertices
        spec: {coverage_radius: 2, features: {dead_end: forbidden}}
        smoothing_weights: [1, 4, 1]   # optional (alpha, beta, gamma)
      - name: local
        subdivide: true
        sinks: inherit
        spec: {coverage_radius: 1}
    smoothing:
      groups: [[0], [1]]        # default: last two levels together, others alone
      subdivisions: 2
      snap: true
      snap_threshold: 15
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from ..smoothing import level_weights
from ..spec import FunctionalSpec, SpecError, spec_from_dict, spec_to_dict

SINK_RULES = ("explicit", "inherit")


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class LevelSpec:
    spec: FunctionalSpec
    name: str = ""
    subdivide: bool = False
    sinks: str = "explicit"
    smoothing_weights: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.sinks not in SINK_RULES:
            raise PlanError(f"sink rule must be one of {SINK_RULES}, got {self.sinks!r}")
        if self.spec.mode != "network":
            raise PlanError("plan levels solve network-mode specs")
        if self.smoothing_weights is not None:
            w = tuple(float(x) for x in self.smoothing_weights)
            if len(w) != 3 or min(w) < 0:
                raise PlanError("smoothing weights are three nonnegative numbers")
            object.__setattr__(self, "smoothing_weights", w)


@dataclass(frozen=True)
class LevelPlan:
    levels: tuple[LevelSpec, ...]
    groups: tuple[tuple[int, ...], ...] | None = None
    subdivisions: int = 2
    snap: bool = True
    snap_threshold: float = 15.0
    smooth: bool = True

    def __post_init__(self):
        n = len(self.levels)
        if n < 1:
            raise PlanError("a plan needs at least one level")
        radii = [lv.spec.coverage_radius for lv in self.levels]
        if any(b > a for a, b in zip(radii, radii[1:])):
            raise PlanError("coverage radii must not increase from level to level")
        if self.levels[0].sinks == "inherit":
            raise PlanError("the first level has no parent network to inherit sinks from")
        if self.subdivisions < 0:
            raise PlanError("subdivisions must be nonnegative")
        groups = self.groups if self.groups is not None else default_groups(n)
        groups = tuple(tuple(int(i) for i in g) for g in groups)
        flat = [i for g in groups for i in g]
        if sorted(flat) != list(range(n)) or any(list(g) != sorted(g) for g in groups):
            raise PlanError("smoothing groups must partition the levels in order")
        if any(b[0] != a[-1] + 1 for a, b in zip(groups, groups[1:])):
            raise PlanError("smoothing groups must be consecutive runs of levels")
        object.__setattr__(self, "groups", groups)

    def weights(self, level: int) -> tuple[float, float, float]:
        lv = self.levels[level]
        if lv.smoothing_weights is not None:
            return lv.smoothing_weights
        return level_weights(level, len(self.levels))


def default_groups(n: int) -> tuple[tuple[int, ...], ...]:
    if n == 1:
        return ((0,),)
    return tuple((i,) for i in range(n - 2)) + ((n - 2, n - 1),)


_LEVEL_KEYS = {"name", "subdivide", "sinks", "spec", "smoothing_weights"}
_SMOOTH_KEYS = {"groups", "subdivisions", "snap", "snap_threshold", "enabled"}


def plan_from_dict(cfg: dict) -> LevelPlan:
    if not isinstance(cfg, dict) or "levels" not in cfg:
        raise PlanError("a plan is a mapping with a 'levels' list")
    unknown = set(cfg) - {"levels", "smoothing"}
    if unknown:
        raise PlanError(f"unknown plan key(s): {', '.join(sorted(unknown))}")
    levels = []
    for i, raw in enumerate(cfg["levels"] or ()):
        if not isinstance(raw, dict):
            raise PlanError(f"level {i} must be a mapping")
        bad = set(raw) - _LEVEL_KEYS
        if bad:
            raise PlanError(f"unknown key(s) in level {i}: {', '.join(sorted(bad))}")
        try:
            spec = spec_from_dict(raw.get("spec") or {})
        except SpecError as exc:
            raise PlanError(f"level {i}: {exc}") from None
        sw = raw.get("smoothing_weights")
        levels.append(
            LevelSpec(
                spec,
                str(raw.get("name", f"level{i}")),
                bool(raw.get("subdivide", False)),
                str(raw.get("sinks", "explicit")),
                tuple(sw) if sw is not None else None,
            )
        )
    sm = cfg.get("smoothing") or {}
    bad = set(sm) - _SMOOTH_KEYS
    if bad:
        raise PlanError(f"unknown smoothing key(s): {', '.join(sorted(bad))}")
    return LevelPlan(
        tuple(levels),
        tuple(tuple(g) for g in sm["groups"]) if "groups" in sm else None,
        int(sm.get("subdivisions", 2)),
        bool(sm.get("snap", True)),
        float(sm.get("snap_threshold", 15.0)),
        bool(sm.get("enabled", True)),
    )


def load_plan(text: str) -> LevelPlan:
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise PlanError(f"plan is not valid YAML: {exc}") from None
    return plan_from_dict(cfg)


def plan_to_dict(plan: LevelPlan) -> dict:
    levels = []
    for lv in plan.levels:
        row = {"name": lv.name, "subdivide": lv.subdivide, "sinks": lv.sinks, "spec": spec_to_dict(lv.spec)}
        if lv.smoothing_weights is not None:
            row["smoothing_weights"] = list(lv.smoothing_weights)
        levels.append(row)
    return {
        "levels": levels,
        "smoothing": {
            "enabled": plan.smooth,
            "groups": [list(g) for g in plan.groups],
            "subdivisions": plan.subdivisions,
            "snap": plan.snap,
            "snap_threshold": plan.snap_threshold,
        },
    }


def single_level_plan(spec: FunctionalSpec, **kw) -> LevelPlan:
    return LevelPlan((LevelSpec(spec, "level0"),), **kw)
