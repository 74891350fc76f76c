"""Feasibility conditions, alignment residuals, and independence margins.

The checks here are the numerical counterparts of the almost-sure claims the
schemes rest on: cross-receiver phase sums staying away from multiples of pi,
constructed alignment equalities holding exactly, and stacked receive columns
keeping full rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .channel import (
    NUM_CROSS_SUMS,
    TWO_PI,
    ComplexChannelMatrix,
    cross_gain_ratio,
    cross_phase_sum,
    extend_rotation,
    implicated_receiver,
    lift,
    mod_distance,
)

if TYPE_CHECKING:  # pragma: no cover
    from .schemes import BeamformerSet

__all__ = [
    "PHASE_TOL",
    "RATIO_TOL",
    "SV_INDEPENDENT",
    "SV_DEPENDENT",
    "CONDITION_SETS",
    "InfeasibleChannelError",
    "DegenerateAnglesError",
    "ConditionRecord",
    "ConditionReport",
    "check_conditions",
    "alignment_residual",
    "ReceiverIndependence",
    "IndependenceReport",
    "independence_margin",
    "solve_phasor_pair",
    "ContainmentDemo",
    "demonstrate_containment",
]

# A phase expression within this distance of a multiple of its modulus counts
# as hitting it; a gain ratio within this distance of 1 counts as 1.
PHASE_TOL = 1e-9
RATIO_TOL = 1e-9

# Rank verdicts for stacked receive columns (unit-norm columns): above the
# first threshold the stack counts as independent, below the second as
# dependent, in between the verdict is left open.
SV_INDEPENDENT = 1e-6
SV_DEPENDENT = 1e-10

CONDITION_SETS = ("phase-align", "acs-ic3", "singularity", "x-channel", "uplinks")


class InfeasibleChannelError(Exception):
    """A channel fails the feasibility conditions of a scheme."""

    def __init__(self, scheme: str, failed: tuple[str, ...], detail: str = ""):
        self.scheme = scheme
        self.failed = tuple(failed)
        msg = f"channel infeasible for scheme {scheme!r}; failed conditions: {', '.join(failed)}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DegenerateAnglesError(ValueError):
    """Angles too close to a degenerate configuration for a closed-form solve."""


@dataclass(frozen=True)
class ConditionRecord:
    """One evaluated condition: a phase sum against a modulus, optionally a ratio."""

    cid: str
    value: float
    modulus: float
    distance: float
    requires: str  # "nonzero": distance must exceed tolerance; "zero": must be within it
    satisfied: bool
    magnitude_ratio: float | None = None
    rx: int | None = None

    def to_dict(self) -> dict:
        d = {
            "id": self.cid,
            "value": self.value,
            "modulus": self.modulus,
            "distance": self.distance,
            "requires": self.requires,
            "satisfied": self.satisfied,
        }
        if self.magnitude_ratio is not None:
            d["magnitude_ratio"] = self.magnitude_ratio
        if self.rx is not None:
            d["rx"] = self.rx
        return d


@dataclass(frozen=True)
class ConditionReport:
    kind: str
    records: tuple[ConditionRecord, ...]

    @property
    def all_satisfied(self) -> bool:
        return all(r.satisfied for r in self.records)

    @property
    def any_satisfied(self) -> bool:
        return any(r.satisfied for r in self.records)

    @property
    def failed(self) -> tuple[str, ...]:
        return tuple(r.cid for r in self.records if not r.satisfied)

    @property
    def satisfied_ids(self) -> tuple[str, ...]:
        return tuple(r.cid for r in self.records if r.satisfied)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "all_satisfied": self.all_satisfied,
            "conditions": [r.to_dict() for r in self.records],
        }


def _nonzero_record(cid: str, value: float, rx: int | None = None) -> ConditionRecord:
    dist = mod_distance(value, np.pi)
    return ConditionRecord(cid, float(value), float(np.pi), dist, "nonzero", dist > PHASE_TOL, rx=rx)


def _require_shape(channel: ComplexChannelMatrix, shape: tuple[int, int], which: str) -> None:
    if channel.magnitude.shape != shape:
        raise ValueError(
            f"{which} conditions need a {shape[0]}x{shape[1]} channel, "
            f"got {channel.num_rx}x{channel.num_tx}"
        )


_CROSS_IDS = ("rx1-a", "rx1-b", "rx2-a", "rx2-b", "rx3-a", "rx3-b")


def check_conditions(channel: ComplexChannelMatrix, which: str) -> ConditionReport:
    """Evaluate a named condition set on a channel.

    "phase-align"  closure sum must hit 0 mod pi, three separation sums must not
    "acs-ic3"      all six cross sums must stay away from 0 mod pi
    "singularity"  the six known rank-one traps: phase sum 0 mod 2pi AND gain ratio 1
    "x-channel"    the 2x2 cross-phase sum must stay away from 0 mod pi
    "uplinks"      both per-receiver cross-phase sums on a 2x4 channel
    """
    p = channel.phase
    if which == "phase-align":
        _require_shape(channel, (3, 3), which)
        closure = p[2, 1] + p[1, 0] + p[0, 2] - p[0, 1] - p[1, 2] - p[2, 0]
        dist = mod_distance(closure, np.pi)
        records = [
            ConditionRecord("closure", float(closure), float(np.pi), dist, "zero", dist <= PHASE_TOL)
        ]
        separations = (
            ("rx1-separation", p[1, 0] - p[1, 2] + p[0, 2] - p[0, 0], 0),
            ("rx2-separation", p[1, 1] + p[0, 2] - p[0, 1] - p[1, 2], 1),
            ("rx3-separation", p[2, 2] + p[1, 0] - p[1, 2] - p[2, 0], 2),
        )
        records += [_nonzero_record(cid, val, rx) for cid, val, rx in separations]
        return ConditionReport(which, tuple(records))

    if which == "acs-ic3":
        _require_shape(channel, (3, 3), which)
        records = [
            _nonzero_record(_CROSS_IDS[k], cross_phase_sum(channel, k), implicated_receiver(k))
            for k in range(NUM_CROSS_SUMS)
        ]
        return ConditionReport(which, tuple(records))

    if which == "singularity":
        _require_shape(channel, (3, 3), which)
        records = []
        for k in range(NUM_CROSS_SUMS):
            value = cross_phase_sum(channel, k)
            ratio = cross_gain_ratio(channel, k)
            dist = mod_distance(value, TWO_PI)
            ok = dist <= PHASE_TOL and abs(ratio - 1.0) <= RATIO_TOL
            records.append(
                ConditionRecord(
                    _CROSS_IDS[k], float(value), float(TWO_PI), dist, "zero", ok,
                    magnitude_ratio=ratio, rx=implicated_receiver(k),
                )
            )
        return ConditionReport(which, tuple(records))

    if which == "x-channel":
        _require_shape(channel, (2, 2), which)
        value = p[0, 0] + p[1, 1] - p[1, 0] - p[0, 1]
        return ConditionReport(which, (_nonzero_record("cross-phase", value),))

    if which == "uplinks":
        _require_shape(channel, (2, 4), which)
        records = (
            _nonzero_record("cell1-cross-phase", p[0, 0] + p[1, 1] - p[1, 0] - p[0, 1], 0),
            _nonzero_record("cell2-cross-phase", p[1, 2] + p[0, 3] - p[0, 2] - p[1, 3], 1),
        )
        return ConditionReport(which, records)

    raise ValueError(f"unknown condition set {which!r}; expected one of {CONDITION_SETS}")


def _check_compatible(beamformers: "BeamformerSet", channel: ComplexChannelMatrix) -> None:
    if channel.num_tx != beamformers.num_tx:
        raise ValueError(
            f"beamformer set has {beamformers.num_tx} transmitters, channel has {channel.num_tx}"
        )
    if channel.num_rx != beamformers.num_rx:
        raise ValueError(
            f"beamformer set targets {beamformers.num_rx} receivers, channel has {channel.num_rx}"
        )


def alignment_residual(beamformers: "BeamformerSet", channel: ComplexChannelMatrix) -> float:
    """Worst Euclidean mismatch over the scheme's alignment coincidences.

    Each recorded coincidence says two receive images are equal (or equal up
    to sign where only the line is pinned down).  Freshly built sets sit at
    rounding level; a perturbed column shows up at the perturbation scale.
    """
    _check_compatible(beamformers, channel)
    S = beamformers.extension
    worst = 0.0
    for pair in beamformers.alignments:
        ktx, kcol = pair.kept
        dtx, dcol = pair.dropped
        left = extend_rotation(channel.phase[pair.rx, ktx], S).matrix @ beamformers.column(ktx, kcol)
        right = extend_rotation(channel.phase[pair.rx, dtx], S).matrix @ beamformers.column(dtx, dcol)
        d = float(np.linalg.norm(left - right))
        if pair.up_to_sign:
            d = min(d, float(np.linalg.norm(left + right)))
        worst = max(worst, d)
    return worst


@dataclass(frozen=True)
class ReceiverIndependence:
    rx: int
    rows: int
    cols: int
    singular_values: np.ndarray
    min_principal_angle: float | None
    status: str  # "independent" | "dependent" | "indeterminate"

    def to_dict(self) -> dict:
        return {
            "rx": self.rx,
            "rows": self.rows,
            "cols": self.cols,
            "singular_values": [float(s) for s in self.singular_values],
            "min_principal_angle": self.min_principal_angle,
            "status": self.status,
        }


@dataclass(frozen=True)
class IndependenceReport:
    scheme: str
    receivers: tuple[ReceiverIndependence, ...]

    @property
    def all_independent(self) -> bool:
        return all(r.status == "independent" for r in self.receivers)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "all_independent": self.all_independent,
            "receivers": [r.to_dict() for r in self.receivers],
        }


def _principal_angle(desired: np.ndarray, interference: np.ndarray) -> float | None:
    if desired.size == 0 or interference.size == 0:
        return None
    qa, _ = np.linalg.qr(desired)
    qb, _ = np.linalg.qr(interference)
    svals = np.linalg.svd(qa.T @ qb, compute_uv=False)
    cos_max = float(np.clip(svals.max(initial=0.0), -1.0, 1.0))
    return float(np.arccos(cos_max))


def independence_margin(beamformers: "BeamformerSet", channel: ComplexChannelMatrix) -> IndependenceReport:
    """Stack each receiver's desired images with its deduplicated interference
    basis and judge linear independence by the smallest singular value."""
    _check_compatible(beamformers, channel)
    S = beamformers.extension
    out = []
    for rx in range(beamformers.num_rx):
        desired = [
            extend_rotation(channel.phase[rx, t], S).matrix @ beamformers.column(t, c)
            for t, c in beamformers.desired_streams(rx)
        ]
        interference = [
            extend_rotation(channel.phase[rx, t], S).matrix @ beamformers.column(t, c)
            for t, c in beamformers.interference_basis(rx)
        ]
        stack = np.column_stack(desired + interference)
        svals = np.linalg.svd(stack, compute_uv=False)
        smallest = float(svals.min())
        if smallest > SV_INDEPENDENT:
            status = "independent"
        elif smallest < SV_DEPENDENT:
            status = "dependent"
        else:
            status = "indeterminate"
        angle = _principal_angle(
            np.column_stack(desired) if desired else np.empty((2 * S, 0)),
            np.column_stack(interference) if interference else np.empty((2 * S, 0)),
        )
        out.append(
            ReceiverIndependence(rx, 2 * S, stack.shape[1], np.sort(svals)[::-1], angle, status)
        )
    return IndependenceReport(beamformers.scheme, tuple(out))


def solve_phasor_pair(alpha: float, beta: float) -> tuple[float, float]:
    """Real coefficients (c1, c2) with c1*exp(j*alpha) + c2*exp(j*beta) = 1.

    Splitting into real and imaginary parts gives a 2x2 linear system whose
    determinant is sin(beta - alpha); the solve is degenerate exactly when
    the two phasors are collinear.
    """
    det = np.sin(beta - alpha)
    if abs(det) <= PHASE_TOL:
        raise DegenerateAnglesError(
            f"phasor pair is collinear: |sin(alpha - beta)| = {abs(det):.3e}"
        )
    c1 = np.sin(beta) / det
    c2 = -np.sin(alpha) / det
    return float(c1), float(c2)


@dataclass(frozen=True)
class ContainmentDemo:
    """Outcome of the double-alignment containment construction.

    A transmitter-1 column aligned into the interference spans at both other
    receivers is trapped: its own-receiver image lies inside the interference
    span there too, with coefficients scaled by the phasor-pair solution.
    """

    extension: int
    residual: float
    c1: float
    c2: float
    rx2_coeffs: np.ndarray   # combination weights used at receiver 2 (over tx-3 images)
    rx3_coeffs: np.ndarray   # combination weights used at receiver 3 (over tx-2 images)
    own_rx_tx3_coeffs: np.ndarray  # c1 * rx2_coeffs: weights of tx-3 images at receiver 1
    own_rx_tx2_coeffs: np.ndarray  # c2 * rx3_coeffs: weights of tx-2 images at receiver 1

    def to_dict(self) -> dict:
        return {
            "extension": self.extension,
            "residual": self.residual,
            "c1": self.c1,
            "c2": self.c2,
            "rx2_coeffs": [float(x) for x in self.rx2_coeffs],
            "rx3_coeffs": [float(x) for x in self.rx3_coeffs],
            "own_rx_tx3_coeffs": [float(x) for x in self.own_rx_tx3_coeffs],
            "own_rx_tx2_coeffs": [float(x) for x in self.own_rx_tx2_coeffs],
        }


def demonstrate_containment(
    channel: ComplexChannelMatrix,
    seed: int,
    extension: int = 3,
    aligned_streams: int = 2,
) -> ContainmentDemo:
    """Build a transmitter-1 column aligned at receivers 2 and 3 and show its
    receiver-1 image falls inside the interference span there.

    Requires the cyclic phase sum (tx1->rx2->tx3 ... around the triangle) to
    stay away from multiples of pi.  Channels where that sum vanishes are
    exactly the ones the single-symbol phase-alignment scheme needs, and
    there the containment genuinely fails.
    """
    if channel.magnitude.shape != (3, 3):
        raise ValueError("containment demo needs a 3x3 channel")
    if extension < 1 or aligned_streams < 1:
        raise ValueError("extension and aligned_streams must be positive")
    p = channel.phase
    alpha = p[0, 2] - p[1, 2] + p[1, 0] - p[0, 0]
    beta = p[0, 1] - p[2, 1] + p[2, 0] - p[0, 0]
    cyc = alpha - beta
    if mod_distance(cyc, np.pi) <= PHASE_TOL:
        raise DegenerateAnglesError(
            "cyclic phase sum sits on a multiple of pi; the containment construction degenerates"
        )

    rng = np.random.default_rng(seed)
    S, d = extension, aligned_streams

    def complex_block(cols: int) -> np.ndarray:
        z = (rng.standard_normal((S, cols)) + 1j * rng.standard_normal((S, cols))) / np.sqrt(2.0)
        return z / np.linalg.norm(z, axis=0, keepdims=True)

    v3 = complex_block(d)
    a = rng.standard_normal(d)
    # Alignment at receiver 2 defines the column; alignment at receiver 3 is
    # then arranged by solving for the first tx-2 basis vector.
    v1 = np.exp(1j * (p[1, 2] - p[1, 0])) * (v3 @ a)
    b = np.concatenate(([1.0], rng.standard_normal(d - 1))) if d > 1 else np.array([1.0])
    v2 = np.empty((S, d), dtype=complex)
    if d > 1:
        v2[:, 1:] = complex_block(d - 1)
    v2[:, 0] = np.exp(1j * (p[2, 0] - p[2, 1])) * v1 - (v2[:, 1:] @ b[1:] if d > 1 else 0.0)

    c1, c2 = solve_phasor_pair(alpha, beta)
    a_prime = c1 * a
    b_prime = c2 * b

    rot = lambda phi: extend_rotation(phi, S).matrix
    left = rot(p[0, 0]) @ lift(v1)
    right = np.zeros(2 * S)
    for s in range(d):
        right += a_prime[s] * (rot(p[0, 2]) @ lift(v3[:, s]))
        right += b_prime[s] * (rot(p[0, 1]) @ lift(v2[:, s]))
    residual = float(np.linalg.norm(left - right))
    return ContainmentDemo(S, residual, c1, c2, a, b, a_prime, b_prime)
