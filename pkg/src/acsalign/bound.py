"""Exhaustive search over linear stream allocations for the 3-user channel.

The model: over S complex slots (2S real dimensions per receiver), user i
decodes d_i streams, and each unordered user pair (i, j) may overlap in
d_ij alignment dimensions at the third receiver.  A receiver must fit all
desired plus distinct interference dimensions into 2S, and a transmitter's
overlaps with the two others must partition within its own d_i.  Everything
is exact integer/rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

__all__ = [
    "AllocationProfile",
    "AllocationCheck",
    "BoundResult",
    "SearchSpaceError",
    "check_allocation",
    "iter_feasible_profiles",
    "max_dof",
    "DEFAULT_PROFILE_LIMIT",
]

DEFAULT_PROFILE_LIMIT = 20_000_000


class SearchSpaceError(Exception):
    """The exhaustive enumeration would exceed its iteration budget."""


@dataclass(frozen=True)
class AllocationProfile:
    """Stream counts and pairwise overlaps for one candidate allocation.

    overlaps holds (d12, d23, d31): the overlap of a pair is a single number,
    so symmetry between (i, j) and (j, i) is structural.
    """

    extension: int
    streams: tuple[int, int, int]
    overlaps: tuple[int, int, int]

    def __post_init__(self):
        if int(self.extension) != self.extension or self.extension < 1:
            raise ValueError("extension must be a positive integer")
        for name, triple in (("streams", self.streams), ("overlaps", self.overlaps)):
            if len(triple) != 3:
                raise ValueError(f"{name} must have three entries")
            if any(int(v) != v or v < 0 for v in triple):
                raise ValueError(f"{name} must be nonnegative integers")
        object.__setattr__(self, "streams", tuple(int(v) for v in self.streams))
        object.__setattr__(self, "overlaps", tuple(int(v) for v in self.overlaps))

    def overlap(self, i: int, j: int) -> int:
        """Overlap between users i and j (1-based, order irrelevant)."""
        key = frozenset((i, j))
        table = {frozenset((1, 2)): 0, frozenset((2, 3)): 1, frozenset((3, 1)): 2}
        if key not in table:
            raise ValueError(f"no overlap between users {i} and {j}")
        return self.overlaps[table[key]]

    @property
    def ratio(self) -> Fraction:
        return Fraction(sum(self.streams), 2 * self.extension)

    def to_dict(self) -> dict:
        return {
            "extension": self.extension,
            "streams": list(self.streams),
            "overlaps": {"d12": self.overlaps[0], "d23": self.overlaps[1], "d31": self.overlaps[2]},
            "ratio": str(self.ratio),
        }


@dataclass(frozen=True)
class AllocationCheck:
    feasible: bool
    violations: tuple[str, ...]


def check_allocation(profile: AllocationProfile) -> AllocationCheck:
    """Test the partition and receiver-dimension constraints of one profile."""
    d1, d2, d3 = profile.streams
    d12, d23, d31 = profile.overlaps
    two_s = 2 * profile.extension
    total = d1 + d2 + d3
    violations = []
    # Each transmitter's overlaps with the other two are disjoint slices of
    # its own streams.
    if d12 + d31 > d1:
        violations.append("partition-user-1")
    if d12 + d23 > d2:
        violations.append("partition-user-2")
    if d23 + d31 > d3:
        violations.append("partition-user-3")
    # A receiver sees its own streams plus both interferers, who may share
    # only their mutual overlap there.
    if total - d23 > two_s:
        violations.append("receiver-1")
    if total - d31 > two_s:
        violations.append("receiver-2")
    if total - d12 > two_s:
        violations.append("receiver-3")
    return AllocationCheck(not violations, tuple(violations))


def iter_feasible_profiles(
    extension: int,
    d_max: int | None = None,
    profile_limit: int = DEFAULT_PROFILE_LIMIT,
) -> Iterator[AllocationProfile]:
    """Yield every feasible profile in lexicographic (d1, d2, d3, d12, d23, d31) order.

    Loop bounds encode the constraints exactly, so nothing feasible is
    skipped and nothing infeasible is yielded.  Work is metered against
    profile_limit; exceeding it raises instead of truncating silently.
    """
    if extension < 1:
        raise ValueError("extension must be at least 1")
    if d_max is None:
        d_max = 3 * extension
    if d_max < 2 * extension:
        raise ValueError("d_max below 2S would bind the search; use at least 2S")
    two_s = 2 * extension
    work = 0
    for d1 in range(d_max + 1):
        for d2 in range(d_max + 1):
            for d3 in range(d_max + 1):
                work += 1
                total = d1 + d2 + d3
                lo = max(0, total - two_s)  # receiver bounds floor every overlap
                for d12 in range(lo, min(d1, d2) + 1):
                    for d23 in range(lo, min(d2 - d12, d3) + 1):
                        y_hi = min(d1 - d12, d3 - d23)
                        for d31 in range(lo, y_hi + 1):
                            work += 1
                            if work > profile_limit:
                                raise SearchSpaceError(
                                    f"enumeration for S={extension} exceeds {profile_limit} steps"
                                )
                            yield AllocationProfile(extension, (d1, d2, d3), (d12, d23, d31))
    if work > profile_limit:
        raise SearchSpaceError(f"enumeration for S={extension} exceeds {profile_limit} steps")


@dataclass(frozen=True)
class BoundResult:
    extension: int
    best_ratio: Fraction
    argmax: tuple[AllocationProfile, ...]
    num_feasible: int

    def to_dict(self) -> dict:
        return {
            "extension": self.extension,
            "best_ratio": str(self.best_ratio),
            "num_feasible": self.num_feasible,
            "argmax": [p.to_dict() for p in self.argmax],
        }


def max_dof(
    extension: int,
    d_max: int | None = None,
    profile_limit: int = DEFAULT_PROFILE_LIMIT,
) -> BoundResult:
    """Exact maximum of (d1+d2+d3)/(2S) over all feasible profiles, with every
    maximizing profile reported."""
    best_total = -1
    argmax: list[AllocationProfile] = []
    count = 0
    for profile in iter_feasible_profiles(extension, d_max, profile_limit):
        count += 1
        total = sum(profile.streams)
        if total > best_total:
            best_total = total
            argmax = [profile]
        elif total == best_total:
            argmax.append(profile)
    if best_total < 0:
        raise RuntimeError("enumeration yielded no profiles; d_max too small?")
    return BoundResult(extension, Fraction(best_total, 2 * extension), tuple(argmax), count)
