"""Exact simulation of branching Brownian motion."""

from .diagnostics import (EmptyPopulationError, GenealogyUnavailableError, centering_m,
                          entropic_envelope, envelope_crossing_fraction, extremal_points,
                          genealogical_distance, max_displacement)
from .law import BranchingLaw, InvalidLawError
from .simulate import (Genealogy, Particle, PopulationSnapshot, SimConfig, simulate, simulate_batch,
                       simulate_final, simulate_ids, single_particle_snapshot)
from .spine import ConditionedDraws, conditioned_draws

__all__ = ["EmptyPopulationError", "GenealogyUnavailableError", "centering_m", "entropic_envelope",
           "envelope_crossing_fraction", "extremal_points", "genealogical_distance", "max_displacement",
           "BranchingLaw", "ConditionedDraws", "Genealogy", "InvalidLawError", "Particle",
           "PopulationSnapshot", "SimConfig", "conditioned_draws", "simulate", "simulate_batch",
           "simulate_final", "simulate_ids", "single_particle_snapshot"]
