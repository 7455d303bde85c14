"""The auxiliary process: Poisson atoms decorated by independent drifted BBMs.

A sample at time ``t`` with derivative-martingale value ``z`` is

    Pi_t = { (1/sqrt2) log z + eta_i + y : eta_i atom, y in BBM_i(t) - sqrt2 t }.

Three modes are available:

``full``
    every atom of the window gets a free BBM with drift ``-sqrt2``.  The
    expected atom count grows like ``e^{sqrt2 |window|}``, so this is only
    usable on short windows.
``thinned``
    only the part of ``Pi_t`` above a level ``l`` is produced, exactly:
    atoms whose BBM reaches ``l`` form a Poisson process with intensity
    ``lambda(eta) Q(l - s - eta)`` (``s = log z / sqrt2``, ``Q`` the tail of
    the drifted maximum) and each carries a BBM conditioned on reaching its
    level.  Points below ``l`` are kept but are incomplete.
``maxima``
    as ``thinned`` but each atom only carries its BBM's maximum, drawn by
    inversion of ``Q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import rng
from ..branching_engine import BranchingLaw, SimConfig, conditioned_draws, simulate_ids
from ..fkpp.tables import MaxTail, max_tail
from ..pointproc_stats import PointConfiguration
from .atoms import PoissonAtoms, TabulatedIntensity, atom_mass, sample_atoms

SQRT2 = math.sqrt(2.0)
MODES = ("full", "thinned", "maxima")
FULL_MODE_LIMIT = 100_000
ATOM_STRIDE = 1 << 24
_ATOM_SALT = 0xA70


@dataclass(frozen=True, eq=False)
class AuxiliarySample:
    """One realization of the auxiliary process (see the module docstring)."""

    t: float
    z_value: float
    atoms: PoissonAtoms
    offspring: list
    assembled: PointConfiguration
    mode: str = "full"
    level: float | None = None
    sample_id: int = 0

    @property
    def shift(self) -> float:
        return math.log(self.z_value) / SQRT2

    @property
    def atom_maxima(self) -> np.ndarray:
        """Per-atom ``eta_i + max BBM_i`` (without the ``log z`` shift)."""
        return np.array([eta + (o.max() if len(o) else -np.inf)
                         for eta, o in zip(self.atoms.positions, self.offspring)])

    def reassemble(self) -> np.ndarray:
        parts = [self.shift + eta + o.points for eta, o in zip(self.atoms.positions, self.offspring)]
        return np.sort(np.concatenate(parts)) if parts else np.zeros(0)


def default_window(t: float, c1: float = 0.3, c2: float = 3.5) -> tuple[float, float]:
    """``[-c2 sqrt t, -c1 sqrt t]``."""
    r = math.sqrt(t)
    return -c2 * r, -c1 * r


def _engine_config(t: float, seed: int, prune_gap) -> SimConfig:
    return SimConfig(horizon=t, drift=-SQRT2, seed=rng.derive_key(seed, _ATOM_SALT),
                     prune_gap=prune_gap)


def _atom_ids(sample_id: int, n: int) -> np.ndarray:
    if n >= ATOM_STRIDE:
        raise ValueError("too many atoms in one sample")
    return sample_id * ATOM_STRIDE + np.arange(n, dtype=np.int64)


def _thinned_intensity(tail: MaxTail, window, shift: float, level: float) -> TabulatedIntensity:
    return TabulatedIntensity.weighted(window, lambda eta: tail.sf(level - shift - eta))


def sample_auxiliary_batch(t: float, z_values, window=None, seed: int = 0, law: BranchingLaw | None = None,
                           mode: str = "full", level: float | None = None,
                           prune_gap: float | None = None, first_sample: int = 0,
                           tail: MaxTail | None = None) -> list[AuxiliarySample]:
    """One auxiliary sample per entry of ``z_values``; sample ``i`` has id ``first_sample + i``.

    Atom draws use a per-sample generator keyed by ``(seed, id)`` and each
    atom's BBM a lineage key derived from ``(seed, id, atom index)``, so
    every sample is reproducible on its own.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    law = law or BranchingLaw.binary()
    z_values = np.atleast_1d(np.asarray(z_values, dtype=float))
    if np.any(z_values <= 0):
        raise ValueError("z must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    window = default_window(t) if window is None else tuple(float(w) for w in window)
    if mode != "full" and level is None:
        raise ValueError(f"mode {mode!r} needs a level")
    if mode == "full" and atom_mass(window) > FULL_MODE_LIMIT:
        raise ValueError(f"window holds {atom_mass(window):.3g} atoms on average; "
                         "use mode='thinned' with a level")
    if mode != "full" and t > 0 and tail is None:
        tail = max_tail(law, t)
    ids = first_sample + np.arange(z_values.size, dtype=np.int64)
    atoms_all, shifts, levels = [], [], []
    for sid, z in zip(ids, z_values):
        g = rng.task_generator(seed, _ATOM_SALT, int(sid))
        s = math.log(z) / SQRT2
        if mode == "full" or t == 0:
            atoms = sample_atoms(window, g) if mode == "full" else \
                _thin_at_time_zero(window, s, level, g)
        else:
            atoms = _thinned_intensity(tail, window, s, level).sample(g)
        atoms_all.append(atoms)
        shifts.append(s)
        levels.append(None if level is None else level - s - atoms.positions)
    offspring = _decorate(t, atoms_all, levels, ids, seed, law, mode, prune_gap, tail)
    out = []
    for sid, z, atoms, s, offs in zip(ids, z_values, atoms_all, shifts, offspring):
        parts = [s + eta + o.points for eta, o in zip(atoms.positions, offs)]
        pts = np.concatenate(parts) if parts else np.zeros(0)
        out.append(AuxiliarySample(float(t), float(z), atoms, offs, PointConfiguration(pts, "Pi_t"),
                                   mode, level, int(sid)))
    return out


def _thin_at_time_zero(window, shift, level, g) -> PoissonAtoms:
    # at t = 0 each BBM is a single particle at 0: keep atoms above level - shift
    lo, hi = window
    lo = max(lo, level - shift)
    if lo >= hi:
        return PoissonAtoms(np.zeros(0), (lo, hi), 0.0)
    return sample_atoms((lo, hi), g)


def _decorate(t, atoms_all, levels, ids, seed, law, mode, prune_gap, tail) -> list[list]:
    counts = [len(a) for a in atoms_all]
    if t == 0:
        return [[PointConfiguration([0.0], "synthetic") for _ in range(n)] for n in counts]
    atom_ids = np.concatenate([_atom_ids(int(sid), n) for sid, n in zip(ids, counts)]) \
        if counts else np.zeros(0, np.int64)
    if mode == "maxima":
        h = np.concatenate(levels) if levels else np.zeros(0)
        u = rng.uniform(rng.root_keys(rng.derive_key(seed, _ATOM_SALT, 1), atom_ids), 0)
        m = tail.sample_above(h, u) if atom_ids.size else np.zeros(0)
        flat = [PointConfiguration([x], "synthetic") for x in m]
    elif atom_ids.size == 0:
        flat = []
    else:
        cfg = _engine_config(t, seed, prune_gap)
        if mode == "full":
            snaps = simulate_ids(cfg, law, atom_ids)
        else:
            snaps = conditioned_draws(cfg, law, np.concatenate(levels), atom_ids).snapshots
        flat = [PointConfiguration(s.positions, "synthetic") for s in snaps]
    out, k = [], 0
    for n in counts:
        out.append(flat[k:k + n])
        k += n
    return out


def sample_auxiliary(t: float, z: float, window=None, seed: int = 0, law: BranchingLaw | None = None,
                     mode: str = "full", level: float | None = None, prune_gap: float | None = None,
                     sample_id: int = 0) -> AuxiliarySample:
    """Single auxiliary sample; see :func:`sample_auxiliary_batch`."""
    return sample_auxiliary_batch(t, [z], window, seed, law, mode, level, prune_gap, sample_id)[0]


def cluster_extrema(sample: AuxiliarySample) -> PointConfiguration:
    """One point per atom: ``(1/sqrt2) log z + eta_i + max BBM_i``."""
    if len(sample.atoms) == 0:
        return PointConfiguration(np.zeros(0), "Pi_t")
    return PointConfiguration(sample.shift + sample.atom_maxima, "Pi_t")
