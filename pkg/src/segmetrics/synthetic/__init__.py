"""Synthetic data: canonical panels, random maps, and perturbations."""

from .crosscheck import check_pair, compare_records, run_crosscheck
from .oracle import flood_fill_regions, oracle_record
from .panels import (
    PANEL_CLASS,
    PANEL_NUM_CLASSES,
    PanelSpec,
    canonical_panels,
    generate_panel,
    panel_pair,
)
from .perturb import KINDS, PerturbationSpec, perturb
from .random_maps import random_label_map, random_map_pair, random_overlap_graph

__all__ = [
    "PANEL_CLASS",
    "PANEL_NUM_CLASSES",
    "KINDS",
    "PanelSpec",
    "PerturbationSpec",
    "canonical_panels",
    "check_pair",
    "compare_records",
    "flood_fill_regions",
    "generate_panel",
    "oracle_record",
    "panel_pair",
    "perturb",
    "random_label_map",
    "random_map_pair",
    "random_overlap_graph",
    "run_crosscheck",
]
