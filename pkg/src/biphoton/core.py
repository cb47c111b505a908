"""Pump profiles, longitudinal detunings and the momentum-space biphoton amplitude.

Units are fixed: angles in rad, lengths in cm, wavenumbers in 1/cm and
wavelengths in nm. Scattering angles are external (outside the crystal),
with the transverse wavenumber of photon i equal to ``kp0 * theta_i / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import crystal
from .errors import DomainError, EvanescentError

LN2 = math.log(2.0)
NM_TO_CM = 1e-7


@dataclass(frozen=True)
class PumpProfile:
    alpha: float  # FWHM of the angular intensity distribution, rad
    shape: str = "gaussian"

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"pump FWHM must be positive, got {self.alpha}")
        if self.shape != "gaussian":
            raise DomainError(f"unsupported pump shape {self.shape!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation setup.

    ``np_eff`` is the effective anisotropy derivative seen in the observation
    plane: 0 for the perpendicular geometry, the crystal's ``np_prime`` for
    the parallel one, anything in between for intermediate orientations.
    """

    L: float  # cm
    lambda_p: float  # nm
    n_o: float
    np_eff: float
    pump: PumpProfile

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise DomainError(f"crystal length must be positive, got {self.L}")
        if not (self.lambda_p > 0 and math.isfinite(self.lambda_p)):
            raise DomainError(f"pump wavelength must be positive, got {self.lambda_p}")
        if not (self.n_o >= 1 and math.isfinite(self.n_o)):
            raise DomainError(f"refractive index must be >= 1, got {self.n_o}")
        if not math.isfinite(self.np_eff):
            raise DomainError("np_eff must be finite")

    @property
    def kp0(self) -> float:
        """Pump vacuum wavenumber 2*pi/lambda_p in 1/cm."""
        return 2 * math.pi / (self.lambda_p * NM_TO_CM)

    @property
    def alpha(self) -> float:
        return self.pump.alpha

    @property
    def sinc_scale(self) -> float:
        """Coefficient of the bracket in the sinc argument, L*kp0/(16 n_o)."""
        return self.L * self.kp0 / (16 * self.n_o)

    def with_np_eff(self, np_eff: float) -> "ScenarioConfig":
        return replace(self, np_eff=float(np_eff))

    def with_alpha(self, alpha: float) -> "ScenarioConfig":
        return replace(self, pump=replace(self.pump, alpha=float(alpha)))

    def with_length(self, L: float) -> "ScenarioConfig":
        return replace(self, L=float(L))


def make_scenario(
    crystal_name: str = "LiIO3",
    lambda_p: float = 325.0,
    L: float = 1.5,
    alpha: float = 4.114e-3,
    geometry: str = "parallel",
    np_eff: float | None = None,
) -> ScenarioConfig:
    """Build a scenario from a bundled crystal.

    ``geometry`` is ``"perp"`` (np_eff = 0), ``"parallel"`` (np_eff from the
    dispersion data) or ``"custom"``, in which case ``np_eff`` is required.
    """
    optics = crystal.solve_phase_matching(crystal.get_model(crystal_name), lambda_p)
    if geometry == "perp":
        value = 0.0
    elif geometry == "parallel":
        value = optics.np_prime
    elif geometry == "custom":
        if np_eff is None:
            raise DomainError("custom geometry needs an explicit np_eff")
        value = np_eff
    else:
        raise DomainError(f"unknown geometry {geometry!r}")
    return ScenarioConfig(
        L=L, lambda_p=lambda_p, n_o=optics.n_o_signal, np_eff=float(value), pump=PumpProfile(alpha)
    )


def sinc(u):
    """sin(u)/u with a series branch near zero."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 1e-4
    safe = np.where(small, 1.0, u)
    u2 = u * u
    out = np.where(small, 1.0 - u2 / 6.0 + u2 * u2 / 120.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def pump_amplitude(pump: PumpProfile, theta_p):
    """Gaussian pump field amplitude; its square has FWHM ``pump.alpha``."""
    theta_p = np.asarray(theta_p, dtype=float)
    out = np.exp(-2 * LN2 * theta_p**2 / pump.alpha**2)
    return out if out.ndim else float(out)


def pump_intensity(pump: PumpProfile, theta_p):
    theta_p = np.asarray(theta_p, dtype=float)
    out = np.exp(-4 * LN2 * theta_p**2 / pump.alpha**2)
    return out if out.ndim else float(out)


def detuning_exact(k1_xi, k2_xi, k1, k2, kp):
    """Longitudinal detuning without the near-axis expansion.

    Uses transverse momentum conservation, ``kp_xi = k1_xi + k2_xi``.
    """
    k1_xi, k2_xi = np.asarray(k1_xi, float), np.asarray(k2_xi, float)
    kp_xi = k1_xi + k2_xi
    if np.any(np.abs(k1_xi) >= k1) or np.any(np.abs(k2_xi) >= k2) or np.any(np.abs(kp_xi) >= kp):
        raise EvanescentError("transverse wavenumber reaches the full wavenumber")
    out = np.sqrt(kp**2 - kp_xi**2) - np.sqrt(k1**2 - k1_xi**2) - np.sqrt(k2**2 - k2_xi**2)
    return out if out.ndim else float(out)


def phase_bracket(np_eff, theta1, theta2):
    """4*np_eff*(theta1 + theta2) + (theta1 - theta2)**2."""
    theta1 = np.asarray(theta1, float)
    theta2 = np.asarray(theta2, float)
    d = theta1 - theta2
    return 4 * np_eff * (theta1 + theta2) + d * d


def detuning_angles(cfg: ScenarioConfig, theta1, theta2):
    """In-crystal longitudinal detuning in 1/cm as a function of scattering angles.

    The signal wavenumber inside the crystal is ``n_o * kp0 / 2``, hence the
    1/n_o in front; ``L * detuning / 2`` is the sinc argument of ``amplitude``.
    """
    out = cfg.kp0 / (8 * cfg.n_o) * phase_bracket(cfg.np_eff, theta1, theta2)
    return out if np.ndim(out) else float(out)


def amplitude(cfg: ScenarioConfig, theta1, theta2):
    """Biphoton amplitude psi(theta1, theta2), normalised to 1 at the origin."""
    theta1 = np.asarray(theta1, float)
    theta2 = np.asarray(theta2, float)
    out = pump_amplitude(cfg.pump, (theta1 + theta2) / 2) * sinc(
        cfg.sinc_scale * phase_bracket(cfg.np_eff, theta1, theta2)
    )
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True, eq=False)
class AmplitudeGrid:
    """Bipartite amplitude sampled on a tensor grid.

    ``values[i, j]`` belongs to ``(axis1[i], axis2[j])``. ``domain_tag`` is
    ``"momentum"`` (axes in rad) or ``"coordinate"`` (axes in xi = x*kp0/2).
    """

    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray
    domain_tag: str = "momentum"

    def __post_init__(self):
        a1 = np.asarray(self.axis1, float)
        a2 = np.asarray(self.axis2, float)
        v = np.asarray(self.values)
        object.__setattr__(self, "axis1", a1)
        object.__setattr__(self, "axis2", a2)
        object.__setattr__(self, "values", v)
        if v.shape != (a1.size, a2.size):
            raise ValueError(f"values shape {v.shape} does not match axes ({a1.size}, {a2.size})")
        for a in (a1, a2):
            if a.ndim != 1 or a.size < 2 or np.any(np.diff(a) <= 0):
                raise ValueError("grid axes must be strictly increasing with >= 2 points")
        if self.domain_tag not in ("momentum", "coordinate"):
            raise ValueError(f"unknown domain tag {self.domain_tag!r}")

    @property
    def shape(self):
        return self.values.shape


def grid_axis(lo: float, hi: float, n: int) -> np.ndarray:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("grid bounds must be finite")
    if n < 2 or not hi > lo:
        raise DomainError("grid needs hi > lo and at least 2 points")
    return np.linspace(lo, hi, int(n))


def amplitude_grid(cfg: ScenarioConfig, axis1, axis2=None) -> AmplitudeGrid:
    axis1 = np.asarray(axis1, float)
    axis2 = axis1 if axis2 is None else np.asarray(axis2, float)
    if not (np.all(np.isfinite(axis1)) and np.all(np.isfinite(axis2))):
        raise DomainError("grid bounds must be finite")
    values = amplitude(cfg, axis1[:, None], axis2[None, :])
    return AmplitudeGrid(axis1, axis2, values, "momentum")
