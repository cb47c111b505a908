"""Observable probability densities derived from the biphoton amplitude.

Momentum curves use the scattering angle (rad) as axis; coordinate curves
use the dimensionless ``xi = x * kp0 / 2``. Widths are FWHM throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate

from .core import (
    LN2,
    AmplitudeGrid,
    ScenarioConfig,
    amplitude,
    phase_bracket,
    pump_intensity,
    sinc,
)
from .errors import (
    DomainError,
    NoPeakError,
    QuadratureError,
    ResolutionError,
    TruncationError,
    ValidityError,
)

NORMALIZATIONS = ("peak_one", "unit_area")
PEAK_POLICIES = ("nearest_zero", "global_max")

# Pump intensity exp(-ln2 theta^2/alpha^2) at theta = PUMP_CUTOFF*alpha is 1e-10.
PUMP_CUTOFF = math.sqrt(math.log(1e10) / LN2)
ENVELOPE_FLOOR = 1e-10
VALIDITY_MARGIN = 10.0


@dataclass(frozen=True, eq=False)
class SampledCurve:
    axis: np.ndarray
    density: np.ndarray
    normalization: str = "peak_one"
    label: str = ""
    units: str = "rad"

    def __post_init__(self):
        axis = np.asarray(self.axis, float)
        density = np.asarray(self.density, float)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "density", density)
        if axis.ndim != 1 or axis.shape != density.shape:
            raise ValueError("axis and density must be 1-D arrays of equal length")
        if np.any(np.diff(axis) <= 0):
            raise ValueError("axis must be strictly increasing")
        if np.any(density < 0) or not np.all(np.isfinite(density)):
            raise ValueError("density must be finite and non-negative")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.normalization == "peak_one" and abs(density.max() - 1.0) > 1e-12:
            raise ValueError("peak_one curve must have maximum 1")
        if "," in self.label or "," in self.units:
            raise ValueError("label and units may not contain commas")


def peak_normalized(axis, density, label="", units="rad") -> SampledCurve:
    density = np.asarray(density, float)
    top = density.max()
    if not top > 0:
        raise NoPeakError(f"curve {label!r} is identically zero")
    return SampledCurve(axis, density / top, "peak_one", label, units)


@dataclass(frozen=True)
class WidthReport:
    fwhm: float
    peak_location: float
    peak_value: float
    n_peaks_detected: int
    selected_peak_index: int
    left: float
    right: float
    units: str = "rad"


def _crossing(x0, y0, x1, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def fwhm(curve: SampledCurve, peak: str = "nearest_zero") -> WidthReport:
    """Full width at half maximum of one peak of ``curve``.

    Peaks are the connected runs of samples above half the global maximum.
    The selected peak's half-height crossings are located on the linear
    interpolant of the samples. For asymmetric peaks the width is still the
    distance between the two crossings and ``peak_location`` is the sample
    maximum, not the midpoint.

    Raises
    ------
    NoPeakError
        Curve has fewer than 3 samples or is identically zero.
    TruncationError
        A crossing of the selected peak lies beyond the sampled axis.
    """
    if peak not in PEAK_POLICIES:
        raise ValueError(f"unknown peak policy {peak!r}")
    x, y = curve.axis, curve.density
    if x.size < 3:
        raise NoPeakError("need at least 3 samples")
    top = y.max()
    if not top > 0:
        raise NoPeakError(f"curve {curve.label!r} has no peak")

    above = y > 0.5 * top
    edges = np.flatnonzero(np.diff(above.astype(np.int8)))
    starts = list(edges[~above[edges]] + 1)
    ends = list(edges[above[edges]])
    if above[0]:
        starts.insert(0, 0)
    if above[-1]:
        ends.append(x.size - 1)
    peaks = [s + int(np.argmax(y[s : e + 1])) for s, e in zip(starts, ends)]

    if peak == "global_max":
        sel = int(np.argmax([y[i] for i in peaks]))
    else:
        sel = int(np.argmin([abs(x[i]) for i in peaks]))
    ip = peaks[sel]
    level = 0.5 * y[ip]

    i = ip
    while i > 0 and y[i] > level:
        i -= 1
    if y[i] > level:
        raise TruncationError(
            f"left half-height crossing of {curve.label!r} lies below axis start {x[0]:g}; widen the axis"
        )
    left = _crossing(x[i], y[i], x[i + 1], y[i + 1], level)
    j = ip
    while j < x.size - 1 and y[j] > level:
        j += 1
    if y[j] > level:
        raise TruncationError(
            f"right half-height crossing of {curve.label!r} lies beyond axis end {x[-1]:g}; widen the axis"
        )
    right = _crossing(x[j - 1], y[j - 1], x[j], y[j], level)
    return WidthReport(
        fwhm=float(right - left),
        peak_location=float(x[ip]),
        peak_value=float(y[ip]),
        n_peaks_detected=len(peaks),
        selected_peak_index=sel,
        left=float(left),
        right=float(right),
        units=curve.units,
    )


def sinc2_curve(cfg: ScenarioConfig, axis, fixed_theta2: float = 0.0) -> SampledCurve:
    """Phase-matching factor sinc^2(L*Delta/2) alone, at fixed theta2."""
    u = cfg.sinc_scale * phase_bracket(cfg.np_eff, np.asarray(axis, float), fixed_theta2)
    return peak_normalized(axis, sinc(u) ** 2, "sinc2", "rad")


def pump_curve(cfg: ScenarioConfig, axis) -> SampledCurve:
    return peak_normalized(axis, pump_intensity(cfg.pump, np.asarray(axis, float)), "pump", "rad")


def coincidence_curve(cfg: ScenarioConfig, axis, fixed_theta2: float = 0.0) -> SampledCurve:
    axis = np.asarray(axis, float)
    density = amplitude(cfg, axis, fixed_theta2) ** 2
    return peak_normalized(axis, density, "coincidence", "rad")


def pm_roots(cfg: ScenarioConfig, theta1: float) -> tuple[float, float]:
    """Zeros in theta = theta1 + theta2 of the detuning at fixed theta1.

    Returns ``(theta_a, theta_b)`` with ``theta_a`` the root of smaller
    magnitude. The small root is obtained from the product of the roots,
    ``theta_a * theta_b = 4 theta1**2``, to avoid cancellation.
    """
    npe = cfg.np_eff
    if npe == 0:
        raise DomainError("np_eff = 0 gives a double root; use single_particle_quadrature")
    disc = npe * npe - 2 * npe * theta1
    if disc < 0:
        raise DomainError(f"no real phase-matching root at theta1 = {theta1}")
    q = theta1 - npe
    big = 2 * (q + math.copysign(math.sqrt(disc), q))
    small = 4 * theta1 * theta1 / big
    return small, big


def _pm_roots_array(npe, theta1):
    theta1 = np.asarray(theta1, float)
    disc = npe * npe - 2 * npe * theta1
    ok = disc >= 0
    root = np.sqrt(np.where(ok, disc, 0.0))
    q = theta1 - npe
    big = 2 * (q + np.copysign(root, q))
    # big vanishes only where no real root exists
    small = 4 * theta1 * theta1 / np.where(big == 0, 1.0, big)
    return small, big, disc, ok


@dataclass(frozen=True)
class ValidityReport:
    lhs: float
    rhs: float
    ratio: float
    ok: bool


def validity_check(cfg: ScenarioConfig) -> ValidityReport:
    """Compare the sinc width in pump angle against the pump divergence.

    ``ok`` requires the ratio to exceed 10, a concrete reading of "much
    greater than".
    """
    lhs = cfg.L * cfg.kp0 * abs(cfg.np_eff) / (2 * cfg.n_o)
    rhs = 2 / cfg.alpha
    ratio = lhs / rhs
    return ValidityReport(lhs=lhs, rhs=rhs, ratio=ratio, ok=bool(ratio >= VALIDITY_MARGIN))


def _require_valid(cfg):
    rep = validity_check(cfg)
    if not rep.ok:
        raise ValidityError(
            f"delta approximation needs L*kp0*|np'|/(2 n_o) >> 2/alpha; "
            f"got {rep.lhs:.4g} vs {rep.rhs:.4g} (ratio {rep.ratio:.3g} < {VALIDITY_MARGIN:g})"
        )
    return rep


def single_particle_analytic(cfg: ScenarioConfig, axis) -> SampledCurve:
    """Single-particle density from the delta-function approximation of sinc^2.

    Only the small root contributes; the density vanishes where no real root
    exists.
    """
    _require_valid(cfg)
    axis = np.asarray(axis, float)
    small, _, disc, ok = _pm_roots_array(cfg.np_eff, axis)
    pos = ok & (disc > 0)
    safe = np.where(pos, disc, 1.0)
    density = np.where(pos, pump_intensity(cfg.pump, small / 2) / np.sqrt(safe), 0.0)
    return peak_normalized(axis, density, "single_analytic", "rad")


def single_particle_unnormalized(cfg: ScenarioConfig, theta1: float, rtol=1e-5, half_width=None, limit=400):
    """Integral over theta = theta1 + theta2 of |psi|^2 at fixed theta1.

    Returns ``(value, abserr)``. Breakpoints are placed at the real
    phase-matching roots inside the domain so the adaptive rule sees the
    narrow sinc^2 peaks.
    """
    alpha = cfg.alpha
    T = PUMP_CUTOFF * alpha if half_width is None else half_width
    npe, scale = cfg.np_eff, cfg.sinc_scale

    def f(th):
        return pump_intensity(cfg.pump, th / 2) * sinc(scale * (4 * npe * th + (th - 2 * theta1) ** 2)) ** 2

    if npe == 0:
        roots = [2 * theta1]
    else:
        disc = npe * npe - 2 * npe * theta1
        roots = list(pm_roots(cfg, theta1)) if disc >= 0 else []
    points = sorted(r for r in roots if -T < r < T)
    # the integrand never exceeds the pump factor, whose integral sets the scale
    epsabs = rtol * 1e-3 * alpha * math.sqrt(math.pi / LN2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(
            f, -T, T, points=points or None, epsabs=epsabs, epsrel=rtol, limit=limit
        )
    if err > max(epsabs, rtol * abs(val)):
        raise QuadratureError(
            f"single-particle integral at theta1={theta1:g} reached only {err / max(abs(val), 1e-300):.2e} relative",
            achieved=err,
        )
    return val, err


def single_particle_quadrature(cfg: ScenarioConfig, axis, rtol=1e-5, half_width=None) -> SampledCurve:
    axis = np.asarray(axis, float)
    density = np.array(
        [single_particle_unnormalized(cfg, t, rtol=rtol, half_width=half_width)[0] for t in axis]
    )
    return peak_normalized(axis, np.clip(density, 0.0, None), "single_quadrature", "rad")


# --- coordinate representation -------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def envelope_half_width(cfg: ScenarioConfig) -> float:
    """theta beyond which exp(-ln2 theta^4 / (2 alpha^2 np^2)) < 1e-10."""
    a, npe = cfg.alpha, cfg.np_eff
    return (2 * a * a * npe * npe * math.log(1 / ENVELOPE_FLOOR) / LN2) ** 0.25


def _panel_nodes(T, panels):
    edges = np.linspace(0.0, T, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _coord_integral(cfg, xp, xm, panels, T):
    # integrand is even in theta apart from the linear phase, so fold onto [0, T]
    th, w = _panel_nodes(T, panels)
    a, npe = cfg.alpha, cfg.np_eff
    env = np.exp(-LN2 * th**4 / (2 * a * a * npe * npe)) * w
    out = np.empty(xp.size, complex)
    chunk = max(1, 2_000_000 // th.size)
    for s in range(0, xp.size, chunk):
        quad = -xp[s : s + chunk, None] / (2 * npe) * th[None, :] ** 2
        lin = xm[s : s + chunk, None] * th[None, :]
        out[s : s + chunk] = 2 * (np.exp(1j * quad) * np.cos(lin)) @ env
    return out


def coordinate_amplitude(cfg: ScenarioConfig, xi1, xi2, rtol=1e-7, max_panels=4096, check_validity=True):
    """Coordinate-space amplitude in the delta-function regime, normalised to 1 at the origin.

    The remaining integral over theta is done by composite 16-point
    Gauss-Legendre on the envelope-truncated interval. The panel count is
    chosen from the largest phase gradient and doubled until two successive
    estimates agree to ``rtol`` (relative to the value at the origin).

    Raises
    ------
    ValidityError
        Scenario outside the delta-function regime.
    ResolutionError
        More than ``max_panels`` panels would be needed.
    """
    if check_validity:
        _require_valid(cfg)
    if cfg.np_eff == 0:
        raise ValidityError("coordinate representation needs np_eff != 0")
    xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, float), np.asarray(xi2, float))
    shape = xi1.shape
    xp = (xi1 + xi2).ravel()
    xm = (xi1 - xi2).ravel()
    T = envelope_half_width(cfg)
    ref = _coord_integral(cfg, np.zeros(1), np.zeros(1), 64, T)[0].real

    grad = np.abs(xm) + np.abs(xp) * T / abs(cfg.np_eff)
    cycles = grad * T / (2 * math.pi)
    need = np.maximum(8, np.ceil(4 * cycles)).astype(int)
    need = 2 ** np.ceil(np.log2(need)).astype(int)
    if need.max(initial=0) > max_panels:
        raise ResolutionError(
            f"phase varies by {cycles.max():.0f} cycles over the envelope; "
            f"more than {max_panels} panels needed, reduce the xi range"
        )
    result = np.empty(xp.size, complex)
    for panels in np.unique(need):
        idx = np.flatnonzero(need == panels)
        p = int(panels)
        coarse = _coord_integral(cfg, xp[idx], xm[idx], p, T)
        while True:
            if 2 * p > max_panels:
                raise ResolutionError(f"no convergence within {max_panels} panels")
            fine = _coord_integral(cfg, xp[idx], xm[idx], 2 * p, T)
            bad = np.abs(fine - coarse) > rtol * ref
            result[idx[~bad]] = fine[~bad]
            if not bad.any():
                break
            idx, coarse, p = idx[bad], fine[bad], 2 * p
    return (result / ref).reshape(shape)


def coordinate_wavefunction(cfg: ScenarioConfig, xi1_axis, xi2_axis, **kw) -> AmplitudeGrid:
    xi1_axis = np.asarray(xi1_axis, float)
    xi2_axis = np.asarray(xi2_axis, float)
    values = coordinate_amplitude(cfg, xi1_axis[:, None], xi2_axis[None, :], **kw)
    return AmplitudeGrid(xi1_axis, xi2_axis, values, "coordinate")


COORDINATE_SLICES = {
    # name: (label, map from axis value to (xi1, xi2))
    "coincidence": ("coord_coincidence", lambda s: (s, np.zeros_like(s))),
    "sum": ("coord_sum", lambda s: (s / 2, s / 2)),
    "difference": ("coord_difference", lambda s: (s / 2, -s / 2)),
}


def coordinate_curve(cfg: ScenarioConfig, kind: str, axis, **kw) -> SampledCurve:
    """|psi|^2 along a line through the origin of coordinate space.

    ``kind`` is ``"coincidence"`` (axis xi1 at xi2 = 0), ``"sum"`` (axis
    xi1 + xi2 at xi1 = xi2) or ``"difference"`` (axis xi1 - xi2 at
    xi1 = -xi2).
    """
    try:
        label, to_pair = COORDINATE_SLICES[kind]
    except KeyError:
        raise ValueError(f"unknown coordinate slice {kind!r}") from None
    axis = np.asarray(axis, float)
    xi1, xi2 = to_pair(axis)
    density = np.abs(coordinate_amplitude(cfg, xi1, xi2, **kw)) ** 2
    return peak_normalized(axis, density, label, "xi")


def _uniform_step(axis):
    d = np.diff(axis)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0):
        raise ValueError("FFT needs a uniformly spaced axis")
    return float(d[0])


def coordinate_fft(grid: AmplitudeGrid, pad: int = 1) -> AmplitudeGrid:
    """Dense 2-D Fourier transform of a momentum grid, without approximations.

    psi(xi1, xi2) = (1/2pi) * sum psi(theta1, theta2) exp(i(xi1 theta1 + xi2 theta2)) dtheta1 dtheta2,
    which is unitary: total power over xi equals total power over theta.
    Output axes are centred, with xi = 0 at index ``M // 2``.
    """
    if grid.domain_tag != "momentum":
        raise ValueError("coordinate_fft expects a momentum grid")
    h1, h2 = _uniform_step(grid.axis1), _uniform_step(grid.axis2)
    m1, m2 = grid.shape[0] * pad, grid.shape[1] * pad
    field = np.fft.ifft2(grid.values, s=(m1, m2)) * (m1 * m2)
    field = np.fft.fftshift(field)
    xi1 = np.fft.fftshift(np.fft.fftfreq(m1, d=h1)) * 2 * np.pi
    xi2 = np.fft.fftshift(np.fft.fftfreq(m2, d=h2)) * 2 * np.pi
    phase = np.exp(1j * (xi1[:, None] * grid.axis1[0] + xi2[None, :] * grid.axis2[0]))
    values = field * phase * (h1 * h2 / (2 * np.pi))
    return AmplitudeGrid(xi1, xi2, values, "coordinate")


def grid_slices(grid: AmplitudeGrid) -> dict[str, SampledCurve]:
    """Coincidence, sum and difference slices of a centred coordinate grid."""
    if grid.shape[0] != grid.shape[1] or not np.allclose(grid.axis1, grid.axis2):
        raise ValueError("slices need identical axes")
    xi = grid.axis1
    m = xi.size
    c = int(np.argmin(np.abs(xi)))
    if xi[c] != 0 or m % 2:
        raise ValueError("slices need an even-length axis containing xi = 0")
    p = np.abs(grid.values) ** 2
    i = np.arange(1, m)
    return {
        "coincidence": peak_normalized(xi, p[:, c], "coord_coincidence", "xi"),
        "sum": peak_normalized(2 * xi, np.diagonal(p), "coord_sum", "xi"),
        "difference": peak_normalized(2 * xi[1:], p[i, m - i], "coord_difference", "xi"),
    }


def total_power(grid: AmplitudeGrid) -> float:
    h1 = np.gradient(grid.axis1)
    h2 = np.gradient(grid.axis2)
    return float(np.sum(np.abs(grid.values) ** 2 * h1[:, None] * h2[None, :]))


# --- CSV ------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def format_curve_csv(curve: SampledCurve) -> str:
    lines = [f"# {curve.label}, {curve.normalization}, {curve.units}", "axis,density"]
    lines += [f"{_fmt(a)},{_fmt(d)}" for a, d in zip(curve.axis, curve.density)]
    return "\n".join(lines) + "\n"


def write_curve_csv(curve: SampledCurve, path) -> Path:
    path = Path(path)
    path.write_text(format_curve_csv(curve))
    return path


def read_curve_csv(path) -> SampledCurve:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing '# label, normalization, units' header")
    label, normalization, units = (s.strip() for s in lines[0][1:].rsplit(",", 2))
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()])
    return SampledCurve(data[:, 0], data[:, 1], normalization, label, units)


def write_grid_csv(grid: AmplitudeGrid, path) -> Path:
    path = Path(path)
    rows = [f"# grid, {grid.domain_tag}", "axis1,axis2,real,imag"]
    vals = np.asarray(grid.values, complex)
    for i, a in enumerate(grid.axis1):
        for j, b in enumerate(grid.axis2):
            v = vals[i, j]
            rows.append(f"{_fmt(a)},{_fmt(b)},{_fmt(v.real)},{_fmt(v.imag)}")
    path.write_text("\n".join(rows) + "\n")
    return path


def read_grid_csv(path) -> AmplitudeGrid:
    lines = Path(path).read_text().splitlines()
    tag = lines[0].split(",")[1].strip()
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()])
    a1 = np.unique(data[:, 0])
    a2 = np.unique(data[:, 1])
    values = (data[:, 2] + 1j * data[:, 3]).reshape(a1.size, a2.size)
    if not np.any(data[:, 3]):
        values = values.real
    return AmplitudeGrid(a1, a2, values, tag)
