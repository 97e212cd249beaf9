"""Disorder errors of Coulomb-assisted Majorana braiding.

Units throughout: hbar = 1, energies in Delta_0, times in T_0 = hbar / Delta_0.
"""

__version__ = "0.1.0"

from .operators import MajoranaSet, appendix_a_set, build_majorana_set, island_parity, spectral_norm  # noqa: E402
from .schedule import CouplingSet, FluxParams, PathSpec, coupling_at, flux_to_coupling  # noqa: E402
from .system import DeviceSpec, DisorderConfig, appendix_unitaries, build_H_br, build_H_ki, sector_project  # noqa: E402
from .propagation import (  # noqa: E402
    adiabatic_propagator,
    analytic_norm,
    full_propagator,
    perturbative_correction,
)
from .errors import NormCalculator, perturbation_order  # noqa: E402
from .protocol import BraidSector, braid_cycle, pflip_sequence  # noqa: E402
from .readout import ReadoutParams, build_H_ro, dispersive_shift, measurement_error  # noqa: E402

__all__ = [
    "MajoranaSet",
    "appendix_a_set",
    "build_majorana_set",
    "island_parity",
    "spectral_norm",
    "CouplingSet",
    "FluxParams",
    "PathSpec",
    "coupling_at",
    "flux_to_coupling",
    "DeviceSpec",
    "DisorderConfig",
    "appendix_unitaries",
    "build_H_br",
    "build_H_ki",
    "sector_project",
    "adiabatic_propagator",
    "analytic_norm",
    "full_propagator",
    "perturbative_correction",
    "NormCalculator",
    "perturbation_order",
    "BraidSector",
    "braid_cycle",
    "pflip_sequence",
    "ReadoutParams",
    "build_H_ro",
    "dispersive_shift",
    "measurement_error",
]
