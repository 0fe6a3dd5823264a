"""Scenario orchestration, rendering, reports and the command line."""

from .plan import LevelPlan, LevelSpec, PlanError, load_plan, plan_from_dict, plan_to_dict, single_level_plan
from .render import RenderStyle, ramp, render_svg
from .report import ValidationReport, validate_document
from .scenario import PipelineError, ScenarioResult, run_scenario, with_distance_values
from .street import LevelResult, StreetResult, run_street_pipeline

__all__ = [
    "LevelPlan",
    "LevelResult",
    "LevelSpec",
    "PipelineError",
    "PlanError",
    "RenderStyle",
    "ScenarioResult",
    "StreetResult",
    "ValidationReport",
    "load_plan",
    "plan_from_dict",
    "plan_to_dict",
    "ramp",
    "render_svg",
    "run_scenario",
    "run_street_pipeline",
    "single_level_plan",
    "validate_document",
    "with_distance_values",
]
