"""Regenerate liio3_5mm.json from approximate LiIO3 dispersion.

The Sellmeier coefficients below are recalled textbook values and have not
been checked against a primary source; verify them before quantitative use.
Type-I degenerate, non-collinear: 351 nm pump, 702 nm signal and idler at
0.1 rad internal angle, 5 mm crystal.

    python3 configs/derive_liio3.py > configs/liio3_5mm.json
"""

import json
import math

import numpy as np
from scipy.optimize import brentq

from pdccoupling.dispersion import C_UM_PER_S, DispersionSamples, IndexTable, walkoff_from_dispersion


def n_o(lam):
    return np.sqrt(3.4095 + 0.047664 / (lam**2 - 0.033991))


def n_e(lam):
    return np.sqrt(2.9163 + 0.035777 / (lam**2 - 0.028310))


def n_pump(lam, phi):
    # extraordinary index at angle phi to the optic axis
    return 1 / np.sqrt(np.cos(phi) ** 2 / n_o(lam) ** 2 + np.sin(phi) ** 2 / n_e(lam) ** 2)


LAM_P, LAM_S, THETA, L = 0.351, 0.702, 0.1, 5000.0


def omega(lam):
    return 2 * math.pi * C_UM_PER_S / lam


def table(center, phi0, f):
    w = np.linspace(center * 0.99, center * 1.01, 41)
    phi = np.linspace(phi0 - 0.01, phi0 + 0.01, 41)
    return IndexTable.from_function(lambda W, P: f(2 * math.pi * C_UM_PER_S / W, P), w, phi)


def main():
    phi0 = brentq(lambda p: n_pump(LAM_P, p) - n_o(LAM_S) * math.cos(THETA), 0.1, 1.5)
    signal = table(omega(LAM_S), phi0, lambda lam, p: n_o(lam) + 0 * p)
    samples = DispersionSamples(table(omega(LAM_P), phi0, n_pump), signal, signal)
    terms = walkoff_from_dispersion(samples, omega(LAM_P), omega(LAM_S), omega(LAM_S), phi0)
    # optic axis tilted towards the signal side of the y axis: N_p changes sign
    config = terms.to_config(THETA, THETA, L)
    doc = {
        "phase_match": {
            "K_p": config.K_p, "K_s": config.K_s, "K_i": config.K_i,
            "N_p": -config.N_p, "N_s": config.N_s, "D": config.D,
            "theta_i": THETA, "theta_s": THETA, "L": L,
        },
        "geometry": {"w_p": 300.0, "w_o1": 250.0, "w_o2": 250.0, "w_ap": 1000.0, "k_fresnel": 1e-5},
    }
    print(json.dumps(doc, indent=2))


if __name__ == "__main__":
    main()
