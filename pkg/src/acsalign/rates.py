"""Zero-forcing reception, achievable rates, and slope-based DoF estimates.

Conventions pinned here: each transmitter spends S*snr of power per S-slot
block, split equally over its streams; noise carries variance 1/2 per real
dimension; stream rates are 0.5*log2(1 + SINR) per block and sum rates are
reported per complex channel use (divide by S).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import ComplexChannelMatrix, extend_rotation
from .schemes import BeamformerSet

__all__ = [
    "DEFAULT_SNR_GRID_DB",
    "RankDeficientReceiverError",
    "StreamRate",
    "RateReport",
    "DofEstimate",
    "zf_receive",
    "sum_rate",
    "estimate_dof",
    "validate_snr_grid",
    "baseline_circsym",
    "baseline_rate_profile",
    "baseline_best_sum_rate",
    "estimate_baseline_dof",
]

DEFAULT_SNR_GRID_DB = (60.0, 70.0, 80.0, 90.0, 100.0, 110.0)

NOISE_VAR_PER_REAL_DIM = 0.5


class RankDeficientReceiverError(Exception):
    """A receiver's effective columns leave no null direction for some stream."""

    def __init__(self, rx: int):
        self.rx = rx
        super().__init__(f"receiver {rx} is rank deficient: no zero-forcing direction exists")


def _receive_images(beamformers: BeamformerSet, channel: ComplexChannelMatrix, rx: int) -> dict:
    S = beamformers.extension
    images = {}
    for t, c, _ in beamformers.streams():
        images[(t, c)] = extend_rotation(channel.phase[rx, t], S).matrix @ beamformers.column(t, c)
    return images


def zf_receive(beamformers: BeamformerSet, channel: ComplexChannelMatrix) -> dict[tuple[int, int], np.ndarray]:
    """Per-stream unit combiners, each orthogonal to every other effective column.

    The effective columns at a receiver are its desired stream images plus the
    deduplicated interference basis.  The combiner for a stream is the
    residual of its own image after projecting onto the span of all the
    others; its inner product with the own image is therefore positive.
    """
    if channel.num_tx != beamformers.num_tx or channel.num_rx != beamformers.num_rx:
        raise ValueError("beamformer set and channel disagree on dimensions")
    combiners: dict[tuple[int, int], np.ndarray] = {}
    for rx in range(beamformers.num_rx):
        images = _receive_images(beamformers, channel, rx)
        desired = beamformers.desired_streams(rx)
        basis = beamformers.interference_basis(rx)
        for t, c in desired:
            own = images[(t, c)]
            others = [images[k] for k in desired if k != (t, c)]
            others += [images[k] for k in basis]
            if others:
                o = np.column_stack(others)
                coeffs, *_ = np.linalg.lstsq(o, own, rcond=None)
                w = own - o @ coeffs
            else:
                w = own.copy()
            norm = float(np.linalg.norm(w))
            if norm < 1e-9:
                raise RankDeficientReceiverError(rx)
            combiners[(t, c)] = w / norm
    return combiners


@dataclass(frozen=True)
class StreamRate:
    tx: int
    column: int
    rx: int
    zf_gain: float
    sinr: float
    rate_per_block: float


@dataclass(frozen=True)
class RateReport:
    scheme: str
    snr: float
    extension: int
    streams: tuple[StreamRate, ...]
    per_receiver: tuple[float, ...]
    sum_rate: float

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "snr": self.snr,
            "extension": self.extension,
            "per_receiver": list(self.per_receiver),
            "sum_rate": self.sum_rate,
        }


def sum_rate(beamformers: BeamformerSet, channel: ComplexChannelMatrix, snr: float) -> RateReport:
    """Achieved rates under zero forcing at operating SNR (linear scale).

    Stream power is S*snr*share, the desired gain is the squared projection
    of the rotated column on the combiner times the link magnitude squared,
    and residual interference is exactly nulled, so SINR = 2 * power * gain.
    """
    if not np.isfinite(snr) or snr <= 0:
        raise ValueError(f"snr must be positive and finite, got {snr!r}")
    combiners = zf_receive(beamformers, channel)
    S = beamformers.extension
    num_rx = beamformers.num_rx
    streams = []
    per_rx_block = np.zeros(num_rx)
    for t, c, rx in beamformers.streams():
        w = combiners[(t, c)]
        image = extend_rotation(channel.phase[rx, t], S).matrix @ beamformers.column(t, c)
        gain = float(w @ image)
        power = S * snr * beamformers.power_share[t][c]
        sinr = power * channel.magnitude[rx, t] ** 2 * gain ** 2 / NOISE_VAR_PER_REAL_DIM
        rate = 0.5 * np.log2(1.0 + sinr)
        streams.append(StreamRate(t, c, rx, gain, float(sinr), float(rate)))
        per_rx_block[rx] += rate
    per_receiver = tuple(float(x) / S for x in per_rx_block)
    total = float(per_rx_block.sum()) / S
    return RateReport(beamformers.scheme, float(snr), S, tuple(streams), per_receiver, total)


@dataclass(frozen=True)
class DofEstimate:
    snr_grid_db: tuple[float, ...]
    sum_rates: tuple[float, ...]
    slope: float
    intercept: float
    rms_residual: float

    def to_dict(self) -> dict:
        return {
            "snr_grid_db": list(self.snr_grid_db),
            "sum_rates": list(self.sum_rates),
            "slope": self.slope,
            "intercept": self.intercept,
            "rms_residual": self.rms_residual,
        }


def validate_snr_grid(snr_grid_db) -> np.ndarray:
    """Check a dB grid is usable for slope regression and return it as an array.

    At least 4 strictly increasing points, all within [40, 140] dB: low enough
    to stay in floating range, high enough that the log(1+x) curvature has
    died out.
    """
    grid = np.asarray(snr_grid_db, dtype=float)
    if grid.ndim != 1 or grid.size < 4:
        raise ValueError("snr grid needs at least 4 points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("snr grid must be strictly increasing")
    if grid[0] < 40.0 or grid[-1] > 140.0:
        raise ValueError("snr grid must lie within [40, 140] dB")
    return grid


def _regress(grid_db: np.ndarray, rates: list[float]) -> DofEstimate:
    # Slope against log2(snr): the regression coordinate for DoF.
    x = grid_db / 10.0 * np.log2(10.0)
    y = np.asarray(rates)
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    rms = float(np.sqrt(np.mean((fit - y) ** 2)))
    return DofEstimate(tuple(float(g) for g in grid_db), tuple(float(r) for r in y),
                       float(slope), float(intercept), rms)


def estimate_dof(
    builder: Callable[[ComplexChannelMatrix, int], BeamformerSet],
    channel: ComplexChannelMatrix,
    seed: int,
    snr_grid_db=DEFAULT_SNR_GRID_DB,
) -> DofEstimate:
    """Least-squares slope of the sum rate against log2(snr) over a dB grid.

    The beamformers are built once per (channel, seed) and reused across the
    grid so the slope reflects the scheme, not re-randomization.
    """
    grid = validate_snr_grid(snr_grid_db)
    beamformers = builder(channel, seed)
    rates = [sum_rate(beamformers, channel, 10.0 ** (db / 10.0)).sum_rate for db in grid]
    return _regress(grid, rates)


def baseline_circsym(channel: ComplexChannelMatrix, powers) -> np.ndarray:
    """Per-user rates when everyone sends one circularly-symmetric stream per
    symbol and receivers treat interference as noise (unit noise power)."""
    if channel.num_rx != channel.num_tx:
        raise ValueError("the per-symbol baseline needs a square channel")
    p = np.asarray(powers, dtype=float)
    if p.shape != (channel.num_tx,):
        raise ValueError(f"expected {channel.num_tx} powers, got shape {p.shape}")
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    g = channel.magnitude ** 2
    rates = np.empty(channel.num_rx)
    for k in range(channel.num_rx):
        interference = float(g[k] @ p) - g[k, k] * p[k]
        rates[k] = np.log2(1.0 + g[k, k] * p[k] / (1.0 + interference))
    return rates


def baseline_rate_profile(channel: ComplexChannelMatrix, snr: float) -> np.ndarray:
    """Per-user rates of the better per-symbol baseline mode at this snr.

    Compares everybody-at-full-power against the best single user operating
    alone, and returns the winning mode's rate vector.
    """
    if snr <= 0:
        raise ValueError("snr must be positive")
    k = channel.num_tx
    full = baseline_circsym(channel, np.full(k, snr))
    g = channel.magnitude ** 2
    best = int(np.argmax(np.diag(g)))
    single = np.zeros(k)
    single[best] = np.log2(1.0 + g[best, best] * snr)
    return single if single.sum() > full.sum() else full


def baseline_best_sum_rate(channel: ComplexChannelMatrix, snr: float) -> float:
    """Best per-symbol baseline sum rate among full power and single-user modes."""
    return float(baseline_rate_profile(channel, snr).sum())


def estimate_baseline_dof(channel: ComplexChannelMatrix, snr_grid_db=DEFAULT_SNR_GRID_DB) -> DofEstimate:
    grid = validate_snr_grid(snr_grid_db)
    rates = [baseline_best_sum_rate(channel, 10.0 ** (db / 10.0)) for db in grid]
    return _regress(grid, rates)
