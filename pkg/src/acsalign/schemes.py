"""Beamformer constructions for the alignment schemes.

Every scheme follows the same recipe: pick a few free columns, derive the
rest through link rotations so that interfering streams land on top of each
other at the receivers they bother, and record which receive images coincide
so later stages can deduplicate the interference basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channel import ComplexChannelMatrix, extend_rotation, rotation_matrix, sample_channel
from .verify import InfeasibleChannelError, check_conditions, independence_margin

__all__ = [
    "AlignmentPair",
    "SchemeDescriptor",
    "BeamformerSet",
    "build_phase_alignment",
    "build_acs_ic3",
    "build_x_channel",
    "build_cognitive_x",
    "build_uplinks",
    "build_scheme",
    "sample_feasible_channel",
    "scheme_channel_shape",
    "scheme_feasibility_kind",
    "CANDIDATE_DRAWS",
    "GENERIC_PHASE_MARGIN",
    "SCHEME_TAGS",
]

SCHEME_TAGS = ("phase-align", "acs-ic3", "x-channel", "cognitive-x", "uplinks")

# How many free-column draws the randomized builders try before keeping the
# best conditioned one.
CANDIDATE_DRAWS = 8

# Phase distance (radians) to the degenerate set below which a random draw is
# rejected by sample_feasible_channel.  Feasibility is an open condition, so
# arbitrarily small margins are still feasible but condition the construction
# badly; the receive-side singular values shrink roughly with this distance.
GENERIC_PHASE_MARGIN = 1e-2

# Channel geometry (num_rx, num_tx) each scheme expects.
_SCHEME_SHAPES = {
    "phase-align": (3, 3),
    "acs-ic3": (3, 3),
    "x-channel": (2, 2),
    "cognitive-x": (2, 2),
    "uplinks": (2, 4),
}

# Which condition set gates each scheme. Cognitive reuses the 2x2 cross-phase
# condition: its two cross streams separate at receiver 2 under the same sum.
_FEASIBILITY_KIND = {
    "phase-align": "phase-align",
    "acs-ic3": "acs-ic3",
    "x-channel": "x-channel",
    "cognitive-x": "x-channel",
    "uplinks": "uplinks",
}


def scheme_channel_shape(tag: str) -> tuple[int, int]:
    try:
        return _SCHEME_SHAPES[tag]
    except KeyError:
        raise ValueError(f"unknown scheme {tag!r}; expected one of {SCHEME_TAGS}") from None


def scheme_feasibility_kind(tag: str) -> str:
    try:
        return _FEASIBILITY_KIND[tag]
    except KeyError:
        raise ValueError(f"unknown scheme {tag!r}; expected one of {SCHEME_TAGS}") from None


@dataclass(frozen=True)
class AlignmentPair:
    """Two streams whose receive images coincide at one receiver.

    `dropped` is the derived column, `kept` the one retained in that
    receiver's interference basis.  `up_to_sign` marks coincidences where the
    construction only pins down the line, not the orientation.
    """

    rx: int
    kept: tuple[int, int]
    dropped: tuple[int, int]
    up_to_sign: bool = False


@dataclass(frozen=True)
class SchemeDescriptor:
    scheme: str
    extension: int
    streams_per_tx: tuple[int, ...]
    dof: Fraction
    feasibility: str

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "extension": self.extension,
            "streams_per_tx": list(self.streams_per_tx),
            "dof": str(self.dof),
            "feasibility": self.feasibility,
        }


@dataclass(frozen=True)
class BeamformerSet:
    """Unit-norm transmit columns for every stream of a scheme.

    matrices[t] is (2S, d_t) with one column per stream of transmitter t;
    stream_rx[t][c] is the receiver that stream is meant for; power_share[t][c]
    is its fraction of the transmitter's block power budget (the budget itself
    is S times the operating SNR).  removed_streams lists (rx, tx, column)
    triples whose interference a receiver cancels through side information.
    """

    scheme: str
    extension: int
    matrices: tuple[np.ndarray, ...]
    stream_rx: tuple[tuple[int, ...], ...]
    power_share: tuple[np.ndarray, ...]
    alignments: tuple[AlignmentPair, ...]
    removed_streams: frozenset[tuple[int, int, int]] = frozenset()
    cognition: str | None = None

    def __post_init__(self):
        if self.extension < 1:
            raise ValueError("extension must be at least 1")
        if not (len(self.matrices) == len(self.stream_rx) == len(self.power_share)):
            raise ValueError("per-transmitter field lengths disagree")
        mats = []
        shares = []
        for t, (m, rxs, sh) in enumerate(zip(self.matrices, self.stream_rx, self.power_share)):
            m = np.array(m, dtype=float)
            sh = np.array(sh, dtype=float)
            if m.ndim != 2 or m.shape[0] != 2 * self.extension:
                raise ValueError(f"transmitter {t}: expected a (2S, d) column matrix")
            if m.shape[1] != len(rxs) or sh.shape != (m.shape[1],):
                raise ValueError(f"transmitter {t}: per-stream metadata does not match columns")
            norms = np.linalg.norm(m, axis=0)
            if not np.allclose(norms, 1.0, atol=1e-12):
                raise ValueError(f"transmitter {t}: columns must be unit norm")
            if np.linalg.svd(m, compute_uv=False).min() <= 1e-9:
                raise ValueError(f"transmitter {t}: columns are linearly dependent")
            if np.any(sh < 0) or sh.sum() > 1.0 + 1e-12:
                raise ValueError(f"transmitter {t}: power shares must be nonnegative, summing to at most 1")
            m.setflags(write=False)
            sh.setflags(write=False)
            mats.append(m)
            shares.append(sh)
        object.__setattr__(self, "matrices", tuple(mats))
        object.__setattr__(self, "power_share", tuple(shares))
        object.__setattr__(self, "stream_rx", tuple(tuple(int(r) for r in rxs) for rxs in self.stream_rx))

    @property
    def num_tx(self) -> int:
        return len(self.matrices)

    @property
    def num_rx(self) -> int:
        return max(max(rxs) for rxs in self.stream_rx) + 1

    @property
    def streams_per_tx(self) -> tuple[int, ...]:
        return tuple(m.shape[1] for m in self.matrices)

    @property
    def total_streams(self) -> int:
        return sum(self.streams_per_tx)

    @property
    def descriptor(self) -> SchemeDescriptor:
        return SchemeDescriptor(
            self.scheme,
            self.extension,
            self.streams_per_tx,
            Fraction(self.total_streams, 2 * self.extension),
            _FEASIBILITY_KIND[self.scheme],
        )

    def column(self, tx: int, col: int) -> np.ndarray:
        return self.matrices[tx][:, col]

    def streams(self) -> tuple[tuple[int, int, int], ...]:
        """All (tx, column, rx) stream triples in transmitter-major order."""
        return tuple(
            (t, c, self.stream_rx[t][c])
            for t in range(self.num_tx)
            for c in range(self.matrices[t].shape[1])
        )

    def desired_streams(self, rx: int) -> tuple[tuple[int, int], ...]:
        return tuple((t, c) for t, c, r in self.streams() if r == rx)

    def interference_basis(self, rx: int) -> tuple[tuple[int, int], ...]:
        """Interfering (tx, column) pairs at rx, deduplicated and genie-filtered.

        Aligned duplicates land on a kept column's image, so dropping them
        loses nothing; removed_streams never enter at all.
        """
        dropped = {p.dropped for p in self.alignments if p.rx == rx}
        removed = {(t, c) for r, t, c in self.removed_streams if r == rx}
        return tuple(
            (t, c)
            for t, c, r in self.streams()
            if r != rx and (t, c) not in dropped and (t, c) not in removed
        )


def _orthonormal_columns(rng: np.random.Generator, dim: int, cols: int) -> np.ndarray:
    a = rng.standard_normal((dim, cols))
    q, r = np.linalg.qr(a)
    # Fix the QR sign convention so the draw is reproducible at the bit level.
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def _require_feasible(channel: ComplexChannelMatrix, scheme: str) -> None:
    kind = _FEASIBILITY_KIND[scheme]
    report = check_conditions(channel, kind)
    if not report.all_satisfied:
        raise InfeasibleChannelError(scheme, report.failed)


def _uniform_shares(counts: tuple[int, ...]) -> tuple[np.ndarray, ...]:
    return tuple(np.full(d, 1.0 / d) for d in counts)


def _best_draw(assemble, channel: ComplexChannelMatrix, seed: int, draws: int) -> BeamformerSet:
    """Assemble `draws` candidate beamformer sets and keep the best conditioned.

    The score is the smallest receive-side singular value across receivers.
    Candidates come from one sequential rng, so the result is deterministic in
    (channel, seed) and the first candidate reproduces a single plain draw.
    """
    if draws < 1:
        raise ValueError("need at least one candidate draw")
    rng = np.random.default_rng(seed)
    best = None
    best_score = -np.inf
    for _ in range(draws):
        candidate = assemble(rng)
        report = independence_margin(candidate, channel)
        score = min(r.singular_values[-1] for r in report.receivers)
        if score > best_score:
            best, best_score = candidate, score
    return best


def sample_feasible_channel(
    scheme: str,
    seed: int,
    min_margin: float = GENERIC_PHASE_MARGIN,
    max_attempts: int = 64,
) -> ComplexChannelMatrix:
    """Draw a random channel for `scheme` with a safe feasibility margin.

    A draw whose gating phase sums come within `min_margin` radians of a
    multiple of pi is redrawn (deterministically: attempt k reseeds with
    (seed, k)).  Attempt 0 is the plain sample_channel draw, so channels that
    were already safe come back unchanged.  Only schemes whose feasibility is
    an open condition can be sampled; the closure-gated scheme needs specially
    constructed channels instead.
    """
    kind = scheme_feasibility_kind(scheme)
    num_rx, num_tx = scheme_channel_shape(scheme)
    if scheme == "phase-align":
        raise ValueError(
            "random channels fail the closure condition almost surely; "
            "use construct_special_channel('phase-example') or a channel file"
        )
    if min_margin < 0:
        raise ValueError("min_margin must be nonnegative")
    for attempt in range(max_attempts):
        entropy = seed if attempt == 0 else [seed, attempt]
        chn = sample_channel(entropy, num_tx, num_rx)
        report = check_conditions(chn, kind)
        if min(rec.distance for rec in report.records) >= min_margin:
            return chn
    raise InfeasibleChannelError(
        scheme,
        ("margin",),
        f"no draw with margin >= {min_margin} within {max_attempts} attempts",
    )


def build_phase_alignment(channel: ComplexChannelMatrix) -> BeamformerSet:
    """Single-symbol scheme for the 3-user channel: one stream per user.

    The closure condition makes the product of rotations around the
    interference triangle equal +/-identity, so starting from a fixed unit
    vector and chaining two link rotations aligns both interferers at every
    receiver.  Deterministic: no randomness is needed.
    """
    if channel.magnitude.shape != (3, 3):
        raise ValueError("phase alignment needs a 3x3 channel")
    _require_feasible(channel, "phase-align")
    p = channel.phase
    # Closure makes every unit vector an eigenvector of the loop rotation.
    v1 = np.array([1.0, 0.0])
    v3 = rotation_matrix(p[1, 0] - p[1, 2]) @ v1   # receiver-2 coincidence
    v2 = rotation_matrix(p[0, 2] - p[0, 1]) @ v3   # receiver-1 coincidence
    alignments = (
        AlignmentPair(rx=0, kept=(2, 0), dropped=(1, 0)),
        AlignmentPair(rx=1, kept=(0, 0), dropped=(2, 0)),
        # The third coincidence follows from closure, which only fixes the line.
        AlignmentPair(rx=2, kept=(0, 0), dropped=(1, 0), up_to_sign=True),
    )
    return BeamformerSet(
        scheme="phase-align",
        extension=1,
        matrices=(v1[:, None], v2[:, None], v3[:, None]),
        stream_rx=((0,), (1,), (2,)),
        power_share=_uniform_shares((1, 1, 1)),
        alignments=alignments,
    )


def build_acs_ic3(
    channel: ComplexChannelMatrix,
    seed: int,
    check: bool = True,
    draws: int = CANDIDATE_DRAWS,
) -> BeamformerSet:
    """Five-slot scheme for the 3-user channel: four streams per user (12/10 total).

    Per transmitter, two free orthonormal columns are drawn; the remaining two
    are rotated copies of other transmitters' free columns, arranged so that
    at every receiver the eight interfering streams occupy only six directions.
    Several candidate draws are scored by the smallest receive-side singular
    value and the best one is kept, so one unlucky draw cannot spoil an
    otherwise healthy channel.

    `check=False` skips the feasibility gate; useful for probing what happens
    on channels that violate it.
    """
    if channel.magnitude.shape != (3, 3):
        raise ValueError("this construction needs a 3x3 channel")
    if check:
        if not channel.fully_connected:
            raise InfeasibleChannelError("acs-ic3", ("fully-connected",))
        _require_feasible(channel, "acs-ic3")
    S = 5
    p = channel.phase
    alignments = (
        AlignmentPair(rx=0, kept=(2, 0), dropped=(1, 2)),
        AlignmentPair(rx=0, kept=(1, 1), dropped=(2, 3)),
        AlignmentPair(rx=1, kept=(0, 0), dropped=(2, 2)),
        AlignmentPair(rx=1, kept=(2, 1), dropped=(0, 3)),
        AlignmentPair(rx=2, kept=(1, 0), dropped=(0, 2)),
        AlignmentPair(rx=2, kept=(0, 1), dropped=(1, 3)),
    )

    def rot(phi: float) -> np.ndarray:
        return extend_rotation(phi, S).matrix

    def assemble(rng: np.random.Generator) -> BeamformerSet:
        free = [_orthonormal_columns(rng, 2 * S, 2) for _ in range(3)]
        v1 = np.column_stack([
            free[0][:, 0],
            free[0][:, 1],
            rot(p[2, 1] - p[2, 0]) @ free[1][:, 0],   # lands on tx-2 free column 1 at receiver 3
            rot(p[1, 2] - p[1, 0]) @ free[2][:, 1],   # lands on tx-3 free column 2 at receiver 2
        ])
        v2 = np.column_stack([
            free[1][:, 0],
            free[1][:, 1],
            rot(p[0, 2] - p[0, 1]) @ free[2][:, 0],   # lands on tx-3 free column 1 at receiver 1
            rot(p[2, 0] - p[2, 1]) @ free[0][:, 1],   # lands on tx-1 free column 2 at receiver 3
        ])
        v3 = np.column_stack([
            free[2][:, 0],
            free[2][:, 1],
            rot(p[1, 0] - p[1, 2]) @ free[0][:, 0],   # lands on tx-1 free column 1 at receiver 2
            rot(p[0, 1] - p[0, 2]) @ free[1][:, 1],   # lands on tx-2 free column 2 at receiver 1
        ])
        return BeamformerSet(
            scheme="acs-ic3",
            extension=S,
            matrices=(v1, v2, v3),
            stream_rx=((0,) * 4, (1,) * 4, (2,) * 4),
            power_share=_uniform_shares((4, 4, 4)),
            alignments=alignments,
        )

    return _best_draw(assemble, channel, seed, draws)


def build_x_channel(
    channel: ComplexChannelMatrix,
    seed: int,
    check: bool = True,
    draws: int = CANDIDATE_DRAWS,
) -> BeamformerSet:
    """Three-slot scheme for 2x2 crossed messages: each transmitter serves both
    receivers with two streams per message (8/6 total).

    The two blocks bound for receiver 2 are rotated so they coincide at
    receiver 1, and vice versa, collapsing four interfering streams into a
    two-dimensional nuisance at each receiver.  The best conditioned of
    several candidate draws is kept.
    """
    if channel.magnitude.shape != (2, 2):
        raise ValueError("the crossed-message construction needs a 2x2 channel")
    if check:
        _require_feasible(channel, "x-channel")
    S = 3
    p = channel.phase
    alignments = (
        AlignmentPair(rx=1, kept=(0, 0), dropped=(1, 0)),
        AlignmentPair(rx=1, kept=(0, 1), dropped=(1, 1)),
        AlignmentPair(rx=0, kept=(0, 2), dropped=(1, 2)),
        AlignmentPair(rx=0, kept=(0, 3), dropped=(1, 3)),
    )

    def rot(phi: float) -> np.ndarray:
        return extend_rotation(phi, S).matrix

    def assemble(rng: np.random.Generator) -> BeamformerSet:
        to_rx1 = _orthonormal_columns(rng, 2 * S, 2)   # tx 1 block for receiver 1
        to_rx2 = _orthonormal_columns(rng, 2 * S, 2)   # tx 1 block for receiver 2
        other_rx1 = rot(p[1, 0] - p[1, 1]) @ to_rx1    # tx 2 block for rx 1: coincides at rx 2
        other_rx2 = rot(p[0, 0] - p[0, 1]) @ to_rx2    # tx 2 block for rx 2: coincides at rx 1
        return BeamformerSet(
            scheme="x-channel",
            extension=S,
            matrices=(
                np.column_stack([to_rx1, to_rx2]),
                np.column_stack([other_rx1, other_rx2]),
            ),
            stream_rx=((0, 0, 1, 1), (0, 0, 1, 1)),
            power_share=_uniform_shares((4, 4)),
            alignments=alignments,
        )

    return _best_draw(assemble, channel, seed, draws)


def build_cognitive_x(channel: ComplexChannelMatrix, cognition: str = "receiver") -> BeamformerSet:
    """Single-symbol 2x2 scheme with one message known to the second receiver.

    Three streams in two real dimensions: the two cross streams are rotated
    to share one line at receiver 1, the direct stream is sent so its
    receiver-1 image is orthogonal to that line, and its interference at
    receiver 2 is cancelled through cognition.  With transmitter-side
    cognition the cancellation happens in the encoding; the rate accounting
    is identical, so both variants build the same geometry.
    """
    if channel.magnitude.shape != (2, 2):
        raise ValueError("the cognitive construction needs a 2x2 channel")
    if cognition not in ("receiver", "transmitter"):
        raise ValueError(f"cognition must be 'receiver' or 'transmitter', got {cognition!r}")
    _require_feasible(channel, "cognitive-x")
    p = channel.phase
    v_cross = np.array([1.0, 0.0])                            # tx 1 stream for rx 2
    v_other = rotation_matrix(p[0, 0] - p[0, 1]) @ v_cross    # tx 2 stream for rx 2
    v_own = rotation_matrix(np.pi / 2) @ v_cross              # tx 1 stream for rx 1
    return BeamformerSet(
        scheme="cognitive-x",
        extension=1,
        matrices=(np.column_stack([v_own, v_cross]), v_other[:, None]),
        stream_rx=((0, 1), (1,)),
        power_share=_uniform_shares((2, 1)),
        alignments=(AlignmentPair(rx=0, kept=(0, 1), dropped=(1, 0)),),
        removed_streams=frozenset({(1, 0, 0)}),
        cognition=cognition,
    )


def build_uplinks(
    channel: ComplexChannelMatrix,
    seed: int,
    check: bool = True,
    draws: int = CANDIDATE_DRAWS,
) -> BeamformerSet:
    """Three-slot scheme for two interfering two-user uplinks (8/6 total).

    Transmitters 1 and 2 serve receiver 1, transmitters 3 and 4 serve
    receiver 2.  Within each pair the second transmitter's block is a rotated
    copy of the first, chosen to coincide at the other cell's receiver.  The
    best conditioned of several candidate draws is kept.
    """
    if channel.magnitude.shape != (2, 4):
        raise ValueError("the uplink construction needs a 2x4 channel (2 receivers, 4 transmitters)")
    if check:
        _require_feasible(channel, "uplinks")
    S = 3
    p = channel.phase
    alignments = (
        AlignmentPair(rx=1, kept=(0, 0), dropped=(1, 0)),
        AlignmentPair(rx=1, kept=(0, 1), dropped=(1, 1)),
        AlignmentPair(rx=0, kept=(2, 0), dropped=(3, 0)),
        AlignmentPair(rx=0, kept=(2, 1), dropped=(3, 1)),
    )

    def rot(phi: float) -> np.ndarray:
        return extend_rotation(phi, S).matrix

    def assemble(rng: np.random.Generator) -> BeamformerSet:
        cell1 = _orthonormal_columns(rng, 2 * S, 2)
        cell2 = _orthonormal_columns(rng, 2 * S, 2)
        cell1_partner = rot(p[1, 0] - p[1, 1]) @ cell1   # coincides with tx 1 at receiver 2
        cell2_partner = rot(p[0, 2] - p[0, 3]) @ cell2   # coincides with tx 3 at receiver 1
        return BeamformerSet(
            scheme="uplinks",
            extension=S,
            matrices=(cell1, cell1_partner, cell2, cell2_partner),
            stream_rx=((0, 0), (0, 0), (1, 1), (1, 1)),
            power_share=_uniform_shares((2, 2, 2, 2)),
            alignments=alignments,
        )

    return _best_draw(assemble, channel, seed, draws)


def build_scheme(tag: str, channel: ComplexChannelMatrix, seed: int = 0, check: bool = True) -> BeamformerSet:
    """Dispatch a scheme tag to its builder with a uniform signature."""
    if tag == "phase-align":
        return build_phase_alignment(channel)
    if tag == "acs-ic3":
        return build_acs_ic3(channel, seed, check=check)
    if tag == "x-channel":
        return build_x_channel(channel, seed, check=check)
    if tag == "cognitive-x":
        return build_cognitive_x(channel)
    if tag == "uplinks":
        return build_uplinks(channel, seed, check=check)
    raise ValueError(f"unknown scheme {tag!r}; expected one of {SCHEME_TAGS}")
