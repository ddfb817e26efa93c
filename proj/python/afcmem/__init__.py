"""Python bindings for the afcmem simulator core."""

from ._afcmem import (
    AfcmemError,
    CavityParams,
    CombSpec,
    __version__,
    afc_efficiency,
    fano_extract,
    field_transmission,
    fit,
    lorentzian_crosstalk,
    optimize_field,
    power_transmission,
    residual_weight,
    store,
    sweep_finesse,
    witness,
)

__all__ = [
    "AfcmemError",
    "CavityParams",
    "CombSpec",
    "__version__",
    "afc_efficiency",
    "fano_extract",
    "field_transmission",
    "fit",
    "lorentzian_crosstalk",
    "optimize_field",
    "power_transmission",
    "residual_weight",
    "store",
    "sweep_finesse",
    "witness",
]
