"""Pallet tracking and fork control for unloading onto inclined surfaces."""

from ._core import (
    DomainError,
    IcpError,
    RigidTransform,
    ScenarioParseError,
    best_rigid_fit,
    extract_delta,
    icp_register,
    mast_from_height,
    pitch_of,
    random_downsample,
    run_scenario_file,
    run_scenario_text,
    update_surface_tilt,
    withdraw_target_height,
)

__all__ = [
    "DomainError",
    "IcpError",
    "RigidTransform",
    "ScenarioParseError",
    "best_rigid_fit",
    "extract_delta",
    "icp_register",
    "mast_from_height",
    "pitch_of",
    "random_downsample",
    "run_scenario_file",
    "run_scenario_text",
    "update_surface_tilt",
    "withdraw_target_height",
]
