"""Phase-matching parameters from tabulated refractive indices.

Derivatives are second-order central differences on the sample grid
(``numpy.gradient``), carried to the requested frequency/angle by bilinear
interpolation, so the result converges quadratically with grid spacing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .model import PdcError, PhaseMatchConfig

C_UM_PER_S = 299_792_458.0e6


class OutOfGridRange(PdcError):
    pass


@dataclass(frozen=True)
class IndexTable:
    """Refractive index sampled on an (angular frequency, angle) grid.

    ``n`` has shape ``(len(omega), len(phi))``; ``omega`` in rad/s, ``phi`` in
    radians. Both axes strictly increasing with at least 3 samples.
    """

    omega: np.ndarray
    phi: np.ndarray
    n: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        n = np.asarray(self.n, dtype=float)
        for name, axis in (("omega", omega), ("phi", phi)):
            if axis.ndim != 1 or axis.size < 3:
                raise ValueError(f"{name} grid needs at least 3 samples")
            if np.any(np.diff(axis) <= 0):
                raise ValueError(f"{name} grid must be strictly increasing")
        if n.shape != (omega.size, phi.size):
            raise ValueError(f"n has shape {n.shape}, expected {(omega.size, phi.size)}")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_function(cls, func, omega, phi):
        """Tabulate ``func(omega, phi)`` (vectorized) on the given grids."""
        omega = np.asarray(omega, dtype=float)
        phi = np.asarray(phi, dtype=float)
        W, P = np.meshgrid(omega, phi, indexing="ij")
        return cls(omega, phi, np.broadcast_to(func(W, P), W.shape).copy())

    def _check(self, omega, phi, label):
        if not (self.omega[0] <= omega <= self.omega[-1]):
            raise OutOfGridRange(
                f"{label}: omega={omega:g} outside [{self.omega[0]:g}, {self.omega[-1]:g}]"
            )
        if not (self.phi[0] <= phi <= self.phi[-1]):
            raise OutOfGridRange(
                f"{label}: phi={phi:g} outside [{self.phi[0]:g}, {self.phi[-1]:g}]"
            )

    def _interp(self, values, omega, phi):
        f = RegularGridInterpolator((self.omega, self.phi), values, method="linear")
        return float(f([[omega, phi]])[0])

    def index(self, omega, phi):
        return self._interp(self.n, omega, phi)

    def dn_dphi(self, omega, phi):
        return self._interp(np.gradient(self.n, self.phi, axis=1, edge_order=2), omega, phi)

    def dk_domega(self, omega, phi):
        """d(n omega / c)/d omega in s/um."""
        k = self.n * self.omega[:, None] / C_UM_PER_S
        return self._interp(np.gradient(k, self.omega, axis=0, edge_order=2), omega, phi)


@dataclass(frozen=True)
class DispersionSamples:
    pump: IndexTable
    signal: IndexTable
    idler: IndexTable


@dataclass(frozen=True)
class WalkoffTerms:
    """The crystal-dependent part of :class:`PhaseMatchConfig`."""

    K_p: float
    K_s: float
    K_i: float
    N_p: float
    N_s: float
    D: float

    def to_config(self, theta_i, theta_s, L) -> PhaseMatchConfig:
        return PhaseMatchConfig(
            self.K_p, self.K_s, self.K_i, self.N_p, self.N_s, self.D,
            float(theta_i), float(theta_s), float(L),
        )


def walkoff_from_dispersion(samples: DispersionSamples, Omega_p, Omega_s, Omega_i, phi_0):
    """Wavenumbers, walk-off terms and ``D`` at the given operating point.

    ``D`` is returned as a group-index difference (c times the difference of
    inverse group velocities), i.e. dimensionless.
    """
    samples.pump._check(Omega_p, phi_0, "pump")
    samples.signal._check(Omega_s, phi_0, "signal")
    samples.idler._check(Omega_i, phi_0, "idler")

    K_p = samples.pump.index(Omega_p, phi_0) * Omega_p / C_UM_PER_S
    K_s = samples.signal.index(Omega_s, phi_0) * Omega_s / C_UM_PER_S
    K_i = samples.idler.index(Omega_i, phi_0) * Omega_i / C_UM_PER_S
    N_p = Omega_p / C_UM_PER_S * samples.pump.dn_dphi(Omega_p, phi_0)
    N_s = Omega_s / C_UM_PER_S * samples.signal.dn_dphi(Omega_s, phi_0)
    D = C_UM_PER_S * (
        samples.signal.dk_domega(Omega_s, phi_0) - samples.idler.dk_domega(Omega_i, phi_0)
    )
    return WalkoffTerms(K_p, K_s, K_i, N_p, N_s, D)
