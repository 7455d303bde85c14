"""Regenerate ``oracles.json``: reference values computed independently of the package.

Every value uses mpmath (closed forms at 30 digits, or adaptive quadrature)
and never imports ``bbm_extremal``.  Run from the repository root:

    python3 tests/oracles/generate.py
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 30
s2 = mp.sqrt(2)


def m(t):
    return s2 * t - 3 / (2 * s2) * mp.log(t)


def lam(x):
    return mp.sqrt(2 / mp.pi) * (-x) * mp.exp(-s2 * x)


def ref_density(z):
    return z**2 * mp.exp(-z**2 / 2) / mp.sqrt(mp.pi / 2)


def logistic(v0, t):
    return v0 * mp.exp(t) / (1 + v0 * (mp.exp(t) - 1))


ORACLES = {
    "m_1": m(1),
    "m_10": m(10),
    "m_e": m(mp.e),
    "envelope_8_16_third": 8 / 16 * m(16) - mp.mpf(8) ** (mp.mpf(1) / 3),
    "intensity_at_minus_1": lam(-1),
    "atom_mass_minus1_0": mp.quad(lam, [-1, 0]),
    "atom_mass_minus3_minus1": mp.quad(lam, [-3, -1]),
    "z_single_particle_t1": s2 * mp.exp(-2),
    "logistic_v_t1": logistic(mp.mpf("0.1"), 1),
    "bridge_1_1_2": 1 - mp.exp(-1),
    "bridge_15_08_3": 1 - mp.exp(-2 * mp.mpf("1.5") * mp.mpf("0.8") / 3),
    "exp_minus_sqrt2": mp.exp(-s2),
    "a_ratio_1_vs_01": mp.exp(-mp.mpf(1) / 2) / mp.exp(-mp.mpf("0.005")),
    "exp_sqrt2_median": mp.log(2) / s2,
    "gumbel_single_atom_x0": mp.exp(-1),
    "bump_at_center": mp.exp(-1),
    "ref_density_mass": mp.quad(ref_density, [0, mp.inf]),
    "ref_density_mode": s2,
    "ref_mass_outside_03_35": mp.quad(ref_density, [0, mp.mpf("0.3")]) + mp.quad(ref_density, [mp.mpf("3.5"), mp.inf]),
    "mean_population_t2": mp.e**2,
    # discrete-monitoring correction: -zeta(1/2) / sqrt(2 pi)
    "discrete_monitoring_shift": -mp.zeta(mp.mpf(1) / 2) / mp.sqrt(2 * mp.pi),
}


if __name__ == "__main__":
    out = {k: float(v) for k, v in ORACLES.items()}
    path = Path(__file__).with_name("oracles.json")
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(json.dumps(out, indent=2, sort_keys=True))
