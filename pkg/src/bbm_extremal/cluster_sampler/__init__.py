"""Auxiliary process, cluster law and limit assembly."""

from .atoms import PoissonAtoms, TabulatedIntensity, atom_mass, intensity, sample_atoms
from .auxiliary import (AuxiliarySample, cluster_extrema, default_window, sample_auxiliary,
                        sample_auxiliary_batch)
from .cluster import ClusterLawResult, ClusterSample, sample_cluster_law
from .diagnostics import AtomWindowReport, atom_window_diagnostic, reference_cdf, reference_density
from .limit import assemble_limit_process, limit_atoms

__all__ = ["AtomWindowReport", "AuxiliarySample", "ClusterLawResult", "ClusterSample", "PoissonAtoms",
           "TabulatedIntensity", "assemble_limit_process", "atom_mass", "atom_window_diagnostic",
           "cluster_extrema", "default_window", "intensity", "limit_atoms", "reference_cdf",
           "reference_density", "sample_atoms", "sample_auxiliary", "sample_auxiliary_batch",
           "sample_cluster_law"]
