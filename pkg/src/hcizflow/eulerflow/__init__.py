"""Minimal-action bridges between spectral densities and their diagnostics."""

from .action import action_density, conjugate_action, prox_action
from .mesh import CrissCrossMesh, SpaceTimeGrid, SpanTooSmallError
from .solver import (BridgeNotConverged, BridgeOptions, BridgeResult, FlowField,
                     inf_one_matrix_rate, initial_path, solve_bridge)
from .diagnostics import (BumpFamily, Certificate, CharacteristicsReport, DualPotential,
                          EulerReport, characteristics_check, dual_certificate, euler_residual)
from .io import read_flow_csv, write_flow_csv, write_summary_json

__all__ = [
    "action_density", "conjugate_action", "prox_action",
    "CrissCrossMesh", "SpaceTimeGrid", "SpanTooSmallError",
    "BridgeNotConverged", "BridgeOptions", "BridgeResult", "FlowField",
    "inf_one_matrix_rate", "initial_path", "solve_bridge",
    "BumpFamily", "Certificate", "CharacteristicsReport", "DualPotential",
    "EulerReport", "characteristics_check", "dual_certificate", "euler_residual",
    "read_flow_csv", "write_flow_csv", "write_summary_json",
]
