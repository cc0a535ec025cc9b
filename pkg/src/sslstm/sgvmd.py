"""Sequential general variational mode decomposition.

Modes are pulled out of the running residual one at a time.  Each mode is a
fixed point of the filter

    u(w) = f_res(w) * (1 + beta (w - w_r)^2) / (1 + alpha (w - w_c)^2 + beta (w - w_r)^2)

where ``w_c`` is the centroid of the current mode estimate and ``w_r`` the
centroid of what would be left over if that estimate were removed.  The
outer loop stops once the residual energy falls below ``epsilon`` times the
input energy, so the number of modes does not have to be known up front.

Spectra live on a non-negative frequency grid in radians per sample: the
half spectrum ``[0, pi]`` for real input and the full circle ``[0, 2 pi)``
for complex input.  The signal is mirror-extended by half its length on both
sides before transforming; time-domain outputs are trimmed back.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NoConvergence, ZeroEnergy

TREND = "Trend"
FREQUENCY = "Frequency"
RESIDUE = "Residue"


@dataclass(frozen=True)
class Spectrum:
    """Frequency-domain samples plus what is needed to invert them.

    ``n_time`` is the length of the time signal the bins came from and
    ``real`` selects the one-sided (``rfft``) or full (``fft``) layout.
    """

    bins: np.ndarray
    omega: np.ndarray
    n_time: int
    real: bool = True

    def __post_init__(self):
        if self.bins.shape != self.omega.shape:
            raise ValueError("bins and omega must have the same length")

    @classmethod
    def from_signal(cls, x):
        x = np.asarray(x)
        n = x.size
        if np.iscomplexobj(x):
            return cls(np.fft.fft(x), 2 * np.pi * np.arange(n) / n, n, real=False)
        bins = np.fft.rfft(x.astype(float))
        return cls(bins, 2 * np.pi * np.arange(bins.size) / n, n, real=True)

    def inverse(self):
        if self.real:
            return np.fft.irfft(self.bins, self.n_time)
        return np.fft.ifft(self.bins)

    def with_bins(self, bins):
        return Spectrum(np.asarray(bins), self.omega, self.n_time, self.real)

    def energy(self):
        return float(np.sum(np.abs(self.bins) ** 2))


@dataclass
class SpectralMode:
    spectrum: Spectrum
    center_frequency: float
    time_domain: np.ndarray
    converged: bool = True
    iterations: int = 0
    last_gap: float = 0.0

    def energy(self):
        return float(np.sum(np.abs(self.time_domain) ** 2))


@dataclass(frozen=True)
class SgvmdConfig:
    """Penalties and tolerances.

    ``eta`` bounds the squared change between successive mode iterates and
    ``epsilon`` the residual energy; both are relative to the energy of the
    signal being split, which keeps the decomposition scale-free.
    """

    alpha: float = 100.0
    beta: float = 1.0
    eta: float = 1e-10
    epsilon: float = 1e-2
    max_modes: int = 10
    max_inner_iters: int = 500
    init_halfwidth: int = 3

    def __post_init__(self):
        for name in ("alpha", "beta", "eta", "epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_modes < 1 or self.max_inner_iters < 1:
            raise ValueError("max_modes and max_inner_iters must be >= 1")
        if self.init_halfwidth < 0:
            raise ValueError("init_halfwidth must be >= 0")


@dataclass
class Decomposition:
    modes: list
    residual: np.ndarray
    residual_spectrum: Spectrum
    input_energy: float

    def __iter__(self):
        yield self.modes
        yield self.residual

    @property
    def centroids(self):
        return [m.center_frequency for m in self.modes]


@dataclass(frozen=True)
class ClassifyConfig:
    trend_cutoff: Optional[float] = None  # default: four DFT bins, 8 pi / N
    trend_share: float = 0.5
    frequency_share: float = 0.5
    sgvmd: SgvmdConfig = field(default_factory=SgvmdConfig)


def center_frequency(u) -> float:
    """Spectral centroid ``sum(w |u|^2) / sum(|u|^2)``."""
    power = np.abs(u.bins) ** 2
    total = power.sum()
    if not total > 0:
        raise ZeroEnergy("spectrum has zero energy")
    return float(np.dot(u.omega, power) / total)


def update_mode(f_res, omega_c, omega_c_res, alpha, beta) -> Spectrum:
    w = f_res.omega
    keep = 1.0 + beta * (w - omega_c_res) ** 2
    gain = keep / (keep + alpha * (w - omega_c) ** 2)
    return f_res.with_bins(f_res.bins * gain)


def extract_one_mode(f_res, cfg, init, trim=None) -> SpectralMode:
    """Iterate the mode filter from ``init`` until successive iterates agree.

    If ``max_inner_iters`` is reached first the last iterate is returned
    with ``converged=False`` and a :class:`NoConvergence` warning.
    """
    scale = f_res.energy()
    u = init
    gap = np.inf
    s = 0
    converged = False
    while s < cfg.max_inner_iters:
        wc = center_frequency(u)
        left = f_res.with_bins(f_res.bins - u.bins)
        try:
            wr = center_frequency(left)
        except ZeroEnergy:
            wr = wc
        nxt = update_mode(f_res, wc, wr, cfg.alpha, cfg.beta)
        gap = float(np.sum(np.abs(nxt.bins - u.bins) ** 2))
        u = nxt
        s += 1
        if gap <= cfg.eta * scale:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"mode did not converge after {s} iterations (last gap {gap:.3e})",
            NoConvergence,
            stacklevel=2,
        )
    x = u.inverse()
    if trim is not None:
        x = x[trim]
    return SpectralMode(
        spectrum=u,
        center_frequency=center_frequency(u),
        time_domain=x,
        converged=converged,
        iterations=s,
        last_gap=gap,
    )


def peak_init(f_res, halfwidth=3) -> Spectrum:
    """``f_res`` masked to ``+-halfwidth`` bins around its largest magnitude."""
    peak = int(np.argmax(np.abs(f_res.bins)))
    lo, hi = max(peak - halfwidth, 0), min(peak + halfwidth + 1, f_res.bins.size)
    bins = np.zeros_like(f_res.bins)
    bins[lo:hi] = f_res.bins[lo:hi]
    return f_res.with_bins(bins)


def mirror_extend(x):
    """Reflect half the signal onto each end; returns the extension and the
    slice recovering the original samples."""
    x = np.asarray(x)
    n = x.size
    h = n // 2
    ext = np.concatenate([x[:h][::-1], x, x[n - h:][::-1]])
    return ext, slice(h, h + n)


def decompose(series, cfg=None) -> Decomposition:
    cfg = cfg or SgvmdConfig()
    x = np.asarray(series)
    if x.ndim != 1 or x.size < 8:
        raise ValueError(f"need a 1-D series of at least 8 samples, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    if not np.iscomplexobj(x):
        x = x.astype(float)
    ext, trim = mirror_extend(x)
    spec = Spectrum.from_signal(ext)
    e_in = float(np.sum(np.abs(x) ** 2))
    residual = spec
    modes = []
    while len(modes) < cfg.max_modes and e_in > 0:
        left = residual.inverse()[trim]
        if np.sum(np.abs(left) ** 2) <= cfg.epsilon * e_in or residual.energy() == 0:
            break
        mode = extract_one_mode(residual, cfg, peak_init(residual, cfg.init_halfwidth), trim)
        modes.append(mode)
        residual = residual.with_bins(residual.bins - mode.spectrum.bins)
    return Decomposition(
        modes=modes,
        residual=residual.inverse()[trim],
        residual_spectrum=residual,
        input_energy=e_in,
    )


def _classify_channel(x, modes, cfg):
    energy = float(np.sum(np.abs(x) ** 2))
    if energy == 0 or not modes:
        return RESIDUE
    cutoff = cfg.trend_cutoff if cfg.trend_cutoff is not None else 4 * 2 * np.pi / x.size
    shares = [m.energy() / energy for m in modes]
    lowest = int(np.argmin([m.center_frequency for m in modes]))
    if modes[lowest].center_frequency < cutoff and shares[lowest] >= cfg.trend_share:
        return TREND
    for m, share in zip(modes, shares):
        if m.center_frequency >= cutoff and share >= cfg.frequency_share:
            return FREQUENCY
    return RESIDUE


def classify_detailed(series, config=None):
    """Like :func:`classify_series` but also returns per-channel diagnostics.

    The second element is a list with one dict per decomposed channel
    holding ``label``, ``modes`` (count), ``centroids`` and ``converged``
    (every inner loop reached its tolerance).
    """
    cfg = config or ClassifyConfig()
    x = np.asarray(getattr(series, "features", series))
    channels = (x.real, x.imag) if np.iscomplexobj(x) else (x,)
    details = []
    for ch in channels:
        ch = np.asarray(ch, dtype=float)
        if not np.any(ch):
            details.append({"label": RESIDUE, "modes": 0, "centroids": [], "converged": True})
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NoConvergence)
            modes = decompose(ch, cfg.sgvmd).modes
        details.append({
            "label": _classify_channel(ch, modes, cfg),
            "modes": len(modes),
            "centroids": [m.center_frequency for m in modes],
            "converged": all(m.converged for m in modes),
        })
    labels = [d["label"] for d in details]
    for label in (TREND, FREQUENCY):
        if label in labels:
            return label, details
    return RESIDUE, details


def classify_series(series, modes=None, config=None) -> str:
    """Label a feature series Trend, Frequency or Residue.

    Complex input is split into real and imaginary channels; Trend wins if
    either channel is Trend, then Frequency, otherwise Residue.  ``modes``
    may be passed for a real series that has already been decomposed.
    """
    cfg = config or ClassifyConfig()
    if modes is None:
        return classify_detailed(series, cfg)[0]
    x = np.asarray(getattr(series, "features", series))
    if np.iscomplexobj(x):
        raise ValueError("precomputed modes only apply to a real series")
    return _classify_channel(x.astype(float), modes, cfg)
