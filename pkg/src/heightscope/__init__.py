"""Group-sparse sequential azimuth/height estimation for automotive MIMO
radar under near-field ground-reflection multipath, with Monte Carlo
benchmarking against interference-envelope spectral baselines."""

from .geometry import AntennaLayout, CoherentAperture, Position3, \
    TargetSpec, mirror_point, preset_layout, target_world_position
from .steering import multipath_steering, rx_steering, spatial_frequencies, \
    virtual_steering
from .dictionaries import Dictionary, assemble_range_fusion, \
    azimuth_dictionary_case_i, azimuth_dictionary_case_ii, \
    azimuth_dictionary_case_iii, height_dictionary, height_labels, \
    normalize_columns, normalize_signal
from .solver import HypothesisMap, Reconstruction, bomp, bomp_fused, \
    declare, doa_map, group_norm, height_map
from .synthesis import Scatterer, Scene, Snapshot, Trajectory, \
    make_trajectory, random_scene, synthesize_snapshot
from .pipeline import EnvelopeBaseline, HeightPipeline, aggregate_metrics, \
    score_trial
from .config import ScenarioConfig, parse_config
from .sweep import run_sweep

__version__ = "0.1.0"
