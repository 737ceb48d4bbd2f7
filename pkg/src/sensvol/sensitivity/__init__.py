"""Per-voxel global sensitivity measures."""

from .fields import (
    BAND_WIDTHS,
    FLAG_INERT,
    FLAG_OUT_OF_RANGE,
    MEASURES,
    SensitivityFieldSet,
    load_field_set,
    write_field_set,
)
from .sobol import sobol_first_order, sobol_volume
from .delta import DeltaConfig, delta_index, delta_volume
from .dgsa import (
    BootstrapThresholds,
    DgsaConfig,
    bootstrap_threshold,
    cdf_distance,
    dgsa_voxel,
    dgsa_volume,
    natural_breaks,
    select_k_silhouette,
)

__all__ = [
    "BAND_WIDTHS",
    "BootstrapThresholds",
    "DeltaConfig",
    "DgsaConfig",
    "FLAG_INERT",
    "FLAG_OUT_OF_RANGE",
    "MEASURES",
    "SensitivityFieldSet",
    "bootstrap_threshold",
    "cdf_distance",
    "delta_index",
    "delta_volume",
    "dgsa_voxel",
    "dgsa_volume",
    "load_field_set",
    "natural_breaks",
    "select_k_silhouette",
    "sobol_first_order",
    "sobol_volume",
    "write_field_set",
]
