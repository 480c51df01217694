"""Refinement ladders, irreducible units and shared grid points.

Levels are numbered from 1 (coarsest).  Inside an irreducible unit every
coordinate is an exact :class:`fractions.Fraction` in ``[0, 1]``; in two
dimensions a coordinate is an ``(x, y)`` tuple of fractions.  Conversion
to floating point happens only when fields are sampled.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import combinations, product
from math import gcd

import numpy as np

from .errors import LadderError, NonIntegerSegments, NonIntegerSteps

TIME_ONLY = "time"
PATHS = (TIME_ONLY, 1, 2)


def as_fraction(value):
    """Exact rational from a Fraction, int, ``"num/den"`` string or decimal."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # repr gives the shortest decimal that round-trips, so 0.01 -> 1/100
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def _path(value):
    if value in ("time", "time-only", "t"):
        return TIME_ONLY
    if value in (1, 2, "1", "2"):
        return int(value)
    raise LadderError(f"unknown refinement path {value!r}; expected 'time', 1 or 2")


@dataclass(frozen=True)
class GridLadder:
    """Systematically refined uniform grids on the periodic unit square/interval.

    ``ratio`` is the refinement ratio of the refined dimension(s).  On the
    time-only path the spatial grid is fixed and ``ratio`` applies to the
    time step; otherwise space is refined by ``ratio`` and time by
    ``ratio ** path_exponent``.  Two-dimensional ladders are square.
    """

    dims: int
    base_segments: int
    ratio: Fraction
    levels: int
    path_exponent: object
    base_steps: int
    t_end: Fraction

    @property
    def time_ratio(self):
        if self.path_exponent == TIME_ONLY:
            return self.ratio
        return self.ratio ** self.path_exponent

    @property
    def space_ratio(self):
        return Fraction(1) if self.path_exponent == TIME_ONLY else self.ratio

    def segments(self, level):
        return int(self.base_segments / self.space_ratio ** (level - 1))

    def steps(self, level):
        return int(self.base_steps / self.time_ratio ** (level - 1))

    def dx(self, level):
        return Fraction(1, self.segments(level))

    def dt(self, level):
        return self.t_end / self.steps(level)

    def spacing(self, level):
        """Grid-spacing parameter h: dt on the time-only path, dx otherwise."""
        if self.path_exponent == TIME_ONLY:
            return self.dt(level)
        return self.dx(level)

    def segment_counts(self):
        return tuple(self.segments(l) for l in range(1, self.levels + 1))

    def step_counts(self):
        return tuple(self.steps(l) for l in range(1, self.levels + 1))

    def points(self, level):
        """Number of spatial grid points (periodic, so equal to segments**dims)."""
        return self.segments(level) ** self.dims


def build_ladder(base_segments, ratio, levels, path_exponent=1, dt=None,
                 t_end=1, dims=1):
    """Validate and build a :class:`GridLadder`.

    ``dt`` is the time step on the coarsest level; it defaults to ``dx``.
    Raises :class:`NonIntegerSegments` / :class:`NonIntegerSteps` naming the
    first level at which the ladder breaks.
    """
    ratio = as_fraction(ratio)
    path = _path(path_exponent)
    if dims not in (1, 2):
        raise LadderError(f"dims must be 1 or 2, got {dims}")
    if not Fraction(1, 2) <= ratio < 1:
        raise LadderError(f"refinement ratio {ratio} outside [1/2, 1)")
    if levels < 3:
        raise LadderError(f"need at least 3 levels, got {levels}")
    if int(base_segments) != base_segments or base_segments < 1:
        raise LadderError(f"base_segments must be a positive integer, got {base_segments}")
    base_segments = int(base_segments)
    t_end = as_fraction(t_end)
    if t_end <= 0:
        raise LadderError(f"t_end must be positive, got {t_end}")
    dt = Fraction(1, base_segments) if dt is None else as_fraction(dt)
    if dt <= 0:
        raise LadderError(f"dt must be positive, got {dt}")

    space_ratio = Fraction(1) if path == TIME_ONLY else ratio
    time_ratio = ratio if path == TIME_ONLY else ratio ** path
    for level in range(1, levels + 1):
        s = base_segments / space_ratio ** (level - 1)
        if s.denominator != 1:
            raise NonIntegerSegments(level, s)
    for level in range(1, levels + 1):
        n = t_end / (dt * time_ratio ** (level - 1))
        if n.denominator != 1:
            raise NonIntegerSteps(level, n)
    return GridLadder(dims, base_segments, ratio, levels, path,
                      int(t_end / dt), t_end)


# ---------------------------------------------------------------------------
# irreducible units


def lattice(s):
    """Unit-relative grid coordinates of a level with ``s`` segments."""
    return tuple(Fraction(i, s) for i in range(s + 1))


def _on_lattice(x, s):
    return (x * s).denominator == 1


@dataclass(frozen=True)
class UnitSignature:
    s_per_level: tuple
    repeats: int
    dims: int = 1
    pair_shared: dict = field(default_factory=dict, compare=False)
    all_shared: tuple = ()
    objective: tuple = ()

    @property
    def levels(self):
        return len(self.s_per_level)

    def segments(self, level):
        return self.s_per_level[level - 1]

    def defined_on(self, coord):
        """Levels (1-based) on which a unit-relative coordinate is a grid point."""
        cs = coord if self.dims == 2 else (coord,)
        return tuple(l for l, s in enumerate(self.s_per_level, 1)
                     if all(_on_lattice(c, s) for c in cs))

    def index(self, coord, level):
        """Unit-relative integer index of ``coord`` on ``level``."""
        s = self.segments(level)
        cs = coord if self.dims == 2 else (coord,)
        idx = []
        for c in cs:
            i = c * s
            if i.denominator != 1:
                raise LadderError(f"{coord} is not a grid point of level {level}")
            idx.append(int(i))
        return tuple(idx)


def _lift(points_1d, dims):
    if dims == 1:
        return tuple(sorted(points_1d))
    return tuple(product(sorted(points_1d), repeat=2))


def _pair_lattice_1d(s_i, s_j):
    return lattice(gcd(s_i, s_j))


def irreducible_unit(ladder_or_counts, dims=None):
    """Smallest repeating unit of a set of grids.

    Accepts a :class:`GridLadder` or a sequence of per-level segment
    counts.  The unit repeats ``gcd(S_l)`` times and holds
    ``S_l / gcd(S_l)`` segments on level ``l``.
    """
    if isinstance(ladder_or_counts, GridLadder):
        counts = ladder_or_counts.segment_counts()
        dims = ladder_or_counts.dims if dims is None else dims
    else:
        counts = tuple(int(c) for c in ladder_or_counts)
        dims = 1 if dims is None else dims
    if len(counts) < 2 or any(c < 1 for c in counts):
        raise LadderError(f"invalid segment counts {counts}")
    g = reduce(gcd, counts)
    s = tuple(c // g for c in counts)

    pairs = {}
    for i, j in combinations(range(1, len(s) + 1), 2):
        pairs[(i, j)] = _lift(_pair_lattice_1d(s[i - 1], s[j - 1]), dims)
    all_1d = lattice(reduce(gcd, s))  # gcd(s) == 1, so this is {0, 1}
    unit = UnitSignature(s, g, dims, pairs, _lift(all_1d, dims))
    object.__setattr__(unit, "objective", objective_locations(unit))
    return unit


def shared_points(unit, pair):
    """Coordinates shared by a pair of levels ``(i, j)``, or by all levels."""
    if pair == "all":
        return unit.all_shared
    i, j = pair
    if not 1 <= i < j <= unit.levels:
        raise LadderError(f"invalid level pair {pair} for a {unit.levels}-level unit")
    return unit.pair_shared[(i, j)]


def objective_locations(unit, policy="two-level"):
    """Points defined on at least two levels but not on all of them.

    ``policy="two-level"`` takes every such point.  ``"finest-pair"``
    keeps only points shared by the two finest levels, the choice used for
    the two-dimensional demonstration.
    """
    all_set = set(unit.all_shared)
    if policy == "two-level":
        cands = set()
        for pts in unit.pair_shared.values():
            cands.update(pts)
        keep = [c for c in cands
                if c not in all_set and len(unit.defined_on(c)) >= 2]
    elif policy == "finest-pair":
        L = unit.levels
        keep = [c for c in unit.pair_shared[(L - 1, L)] if c not in all_set]
    else:
        raise ValueError(f"unknown objective policy {policy!r}")
    return tuple(sorted(keep))


def location_kind(coord):
    """'corner' / 'edge' / 'interior' for a 2D point; 'boundary' / 'interior' in 1D."""
    if isinstance(coord, tuple):
        on = sum(c in (0, 1) for c in coord)
        return ("interior", "edge", "corner")[on]
    return "boundary" if coord in (0, 1) else "interior"


def _half_open(coords, dims):
    if dims == 1:
        return tuple(c for c in coords if c < 1)
    return tuple(c for c in coords if all(x < 1 for x in c))


def shared_fraction(unit, include_midas=False, policy="two-level"):
    """Usable points per unit relative to the finest level's points per unit.

    Points on the unit's upper/right margin belong to the next unit and
    are not counted.
    """
    usable = len(_half_open(unit.all_shared, unit.dims))
    if include_midas:
        usable += len(_half_open(objective_locations(unit, policy), unit.dims))
    return Fraction(usable, unit.s_per_level[-1] ** unit.dims)


@dataclass(frozen=True)
class SupportPoint:
    coord: object
    indices: dict  # level -> unit-relative index tuple
    provenance: str  # "all-shared" | "objective"


def shared_point_map(unit, include_objective=True, policy="two-level"):
    """Retained locations of one unit with their per-level indices."""
    pts = [SupportPoint(c, {l: unit.index(c, l) for l in unit.defined_on(c)},
                        "all-shared")
           for c in _half_open(unit.all_shared, unit.dims)]
    if include_objective:
        for c in _half_open(objective_locations(unit, policy), unit.dims):
            pts.append(SupportPoint(
                c, {l: unit.index(c, l) for l in unit.defined_on(c)}, "objective"))
    return tuple(pts)


def global_indices(unit, coord, level):
    """Array indices of ``coord`` on ``level`` in every repetition of the unit.

    Returns one integer array per dimension; in 2D they broadcast to a
    ``(repeats, repeats)`` block.  Coordinate 1 wraps to the next unit,
    and the last unit wraps periodically to the first.
    """
    s = unit.segments(level)
    S = s * unit.repeats
    base = np.arange(unit.repeats) * s
    out = []
    for d, i in enumerate(unit.index(coord, level)):
        ix = (base + i) % S
        if unit.dims == 2:
            ix = ix[:, None] if d == 0 else ix[None, :]
        out.append(ix)
    return tuple(out)


def sample(values, unit, level, coord):
    """Field values at ``coord`` across all unit repetitions (flattened)."""
    values = np.asarray(values)
    expected = (unit.segments(level) * unit.repeats,) * unit.dims
    if values.shape != expected:
        raise LadderError(
            f"field of shape {values.shape} does not match level {level} "
            f"of the unit (expected {expected})")
    return values[global_indices(unit, coord, level)].ravel()


def expand_lattice(unit, level):
    """Global 1D coordinates of ``level`` rebuilt by tiling the unit."""
    s = unit.segments(level)
    pts = set()
    for m in range(unit.repeats):
        for x in lattice(s):
            pts.add((m + x) / unit.repeats)
    return tuple(sorted(pts))
