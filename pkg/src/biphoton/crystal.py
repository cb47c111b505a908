"""Dispersion of uniaxial crystals and collinear type-I phase matching.

Wavelengths are given in nanometres at the API boundary; the Sellmeier
forms in the bundled data file take micrometres. Angles are in radians and
measured from the optic axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataFileError, DomainError, PhaseMatchingError

N_COEFFS = 7
_AXES = ("o", "e", "s")


@dataclass(frozen=True)
class DispersionModel:
    """Sellmeier description of one crystal.

    ``sellmeier_s`` is ``None`` for a true uniaxial crystal, where the
    down-converted photons see the ordinary index.
    """

    crystal_name: str
    sellmeier_o: tuple[float, ...]
    sellmeier_e: tuple[float, ...]
    valid_range: tuple[float, float]  # micrometres
    sellmeier_s: tuple[float, ...] | None = None
    source: str = ""


@dataclass(frozen=True)
class CrystalOptics:
    model: DispersionModel
    lambda_p: float  # nm
    n_o_pump: float
    n_e_pump: float
    n_o_signal: float  # index of the photons at 2 * lambda_p
    phi0: float  # rad, from the optic axis
    np_prime: float  # d n_e(phi; lambda_p) / d phi at phi0


def _sellmeier(coeffs, lam_um):
    a, b, c, d, e, f, g = coeffs
    l2 = lam_um * lam_um
    n2 = a + f * l2 + g * l2 * l2
    if b:
        n2 = n2 + b / (l2 - c)
    if d:
        n2 = n2 + d * l2 / (l2 - e)
    return np.sqrt(n2)


def _to_um(model: DispersionModel, lam_nm):
    lam = np.asarray(lam_nm, dtype=float) / 1000.0
    lo, hi = model.valid_range
    if np.any(~np.isfinite(lam)) or np.any(lam < lo) or np.any(lam > hi):
        raise DomainError(
            f"wavelength {lam_nm} nm outside the valid range "
            f"[{lo * 1000:g}, {hi * 1000:g}] nm of {model.crystal_name}"
        )
    return lam


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def index_ordinary(model: DispersionModel, lam_nm):
    """Ordinary index n_o at ``lam_nm``."""
    return _scalar(_sellmeier(model.sellmeier_o, _to_um(model, lam_nm)))


def index_extraordinary(model: DispersionModel, lam_nm):
    """Principal extraordinary index n_e at ``lam_nm``."""
    return _scalar(_sellmeier(model.sellmeier_e, _to_um(model, lam_nm)))


def index_signal(model: DispersionModel, lam_nm):
    """Index of the down-converted photons (n_o unless an ``s`` axis is given)."""
    coeffs = model.sellmeier_s if model.sellmeier_s is not None else model.sellmeier_o
    return _scalar(_sellmeier(coeffs, _to_um(model, lam_nm)))


def index_extraordinary_angle(model: DispersionModel, lam_nm, phi):
    """Index of the extraordinary wave travelling at ``phi`` to the optic axis."""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0) or np.any(phi > math.pi / 2):
        raise DomainError(f"phi={phi} outside [0, pi/2]")
    no = index_ordinary(model, lam_nm)
    ne = index_extraordinary(model, lam_nm)
    c, s = np.cos(phi), np.sin(phi)
    return _scalar(1.0 / np.sqrt(c * c / (no * no) + s * s / (ne * ne)))


def extraordinary_angle_derivative(model: DispersionModel, lam_nm, phi):
    """Closed-form d n_e(phi) / d phi."""
    no = index_ordinary(model, lam_nm)
    ne = index_extraordinary(model, lam_nm)
    n = index_extraordinary_angle(model, lam_nm, phi)
    return _scalar(-0.5 * n**3 * np.sin(2 * np.asarray(phi)) * (1 / ne**2 - 1 / no**2))


def solve_phase_matching(model: DispersionModel, lambda_p: float, bracket=None) -> CrystalOptics:
    """Find the collinear degenerate type-I phase-matching angle.

    Bisects ``n_e(phi; lambda_p) - n_s(2 lambda_p)`` until the bracket
    cannot shrink any further in double precision, so the result does not
    depend on the starting bracket.

    Parameters
    ----------
    model : DispersionModel
    lambda_p : float
        Pump wavelength in nm.
    bracket : (float, float), optional
        Search interval in rad, default ``(0, pi/2)``.
    """
    target = index_signal(model, 2 * lambda_p)

    def g(phi):
        return index_extraordinary_angle(model, lambda_p, phi) - target

    lo, hi = bracket if bracket is not None else (0.0, math.pi / 2)
    lo, hi = max(lo, 0.0), min(hi, math.pi / 2)
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        hi = lo
    elif ghi == 0.0:
        lo = hi
    elif (glo > 0) == (ghi > 0):
        raise PhaseMatchingError(
            f"no collinear degenerate type-I phase matching in {model.crystal_name} "
            f"at lambda_p = {lambda_p} nm"
        )
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if gm == 0.0:
            lo = hi = mid
            break
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    phi0 = lo if abs(g(lo)) <= abs(g(hi)) else hi
    return CrystalOptics(
        model=model,
        lambda_p=float(lambda_p),
        n_o_pump=index_ordinary(model, lambda_p),
        n_e_pump=index_extraordinary(model, lambda_p),
        n_o_signal=target,
        phi0=phi0,
        np_prime=extraordinary_angle_derivative(model, lambda_p, phi0),
    )


def parse_dispersion_file(text: str, origin: str = "<string>") -> dict[str, DispersionModel]:
    """Parse dispersion records, preserving first-appearance order of crystals."""
    found: dict[str, dict] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, _, comment = raw.partition("#")
        fields = body.split()
        if not fields:
            continue
        where = f"{origin}:{lineno}"
        if len(fields) < 2:
            raise DataFileError(f"{where}: expected '<crystal> <axis> ...', got {raw.strip()!r}")
        name, axis, values = fields[0], fields[1], fields[2:]
        try:
            numbers = tuple(float(v) for v in values)
        except ValueError:
            raise DataFileError(f"{where}: non-numeric coefficient in {raw.strip()!r}") from None
        rec = found.setdefault(name, {"source": []})
        if axis == "range":
            if len(numbers) != 2 or not 0 < numbers[0] < numbers[1]:
                raise DataFileError(f"{where}: range needs two increasing positive wavelengths")
            key = "range"
        elif axis in _AXES:
            if len(numbers) != N_COEFFS:
                raise DataFileError(
                    f"{where}: axis {axis!r} needs {N_COEFFS} coefficients, got {len(numbers)}"
                )
            key = axis
        else:
            raise DataFileError(f"{where}: unknown axis {axis!r}")
        if key in rec:
            raise DataFileError(f"{where}: duplicate {key!r} record for {name}")
        rec[key] = numbers
        if comment.strip() and axis != "range":
            rec["source"].append(comment.strip())

    models = {}
    for name, rec in found.items():
        missing = [k for k in ("o", "e", "range") if k not in rec]
        if missing:
            raise DataFileError(f"{origin}: crystal {name} lacks record(s) {missing}")
        sources = list(dict.fromkeys(rec["source"]))
        models[name] = DispersionModel(
            crystal_name=name,
            sellmeier_o=rec["o"],
            sellmeier_e=rec["e"],
            sellmeier_s=rec.get("s"),
            valid_range=rec["range"],
            source="; ".join(sources),
        )
    return models


def load_dispersion_file(path) -> dict[str, DispersionModel]:
    path = Path(path)
    return parse_dispersion_file(path.read_text(), origin=str(path))


@lru_cache(maxsize=1)
def _bundled() -> dict[str, DispersionModel]:
    text = resources.files("biphoton").joinpath("data/crystals.dat").read_text()
    return parse_dispersion_file(text, origin="crystals.dat")


def list_crystals() -> tuple[str, ...]:
    return tuple(_bundled())


def get_model(name: str) -> DispersionModel:
    try:
        return _bundled()[name]
    except KeyError:
        raise DomainError(f"unknown crystal {name!r}; available: {', '.join(list_crystals())}") from None
