"""Interpolating differences between approximate solutions (MIDAS).

With a fractional refinement ratio, only the margins of an irreducible
unit carry points shared by every level.  MIDAS recovers coefficient
terms at interior *objective* locations, meaning points defined on at
least two levels.  It interpolates the level differences
``e_{j+1,j} = phi_{j+1} - phi_j`` linearly (bilinearly in 2D) from the
points where each difference is directly available, then solves the
reduced system::

    e_{j+1,j} = sum_m T_m (r**p_m - 1) r**((j - 1) p_m),   j = 1..k

for the terms ``T_m`` on the window's coarsest level.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import floor, gcd

import numpy as np

from .errors import (InsufficientNeighbors, MismatchedLadder, NonBracketing,
                     SingularSystem)
from .estimator import ExpansionFit, WindowFit, _orders, _values
from .grid import (irreducible_unit, sample, shared_point_map, shared_points)


@dataclass
class DiffField:
    """``e_ij = phi_i - phi_j`` keyed by unit-relative coordinate.

    Each value is an array over all repetitions of the unit.
    """

    pair: tuple
    values: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __getitem__(self, coord):
        return self.values[coord]

    def __contains__(self, coord):
        return coord in self.values


@dataclass(frozen=True)
class InterpStencil:
    objective: object
    neighbors: tuple
    weights: tuple

    def apply(self, lookup):
        return sum(float(w) * lookup(n) for n, w in zip(self.neighbors, self.weights))


def differences(field_i, field_j, unit, pair):
    """Direct differences at every location shared by levels ``i > j``."""
    i, j = pair
    if not i > j:
        raise ValueError(f"pair {pair} must list the finer level first")
    fi, fj = _values(field_i), _values(field_j)
    for lvl, f in ((i, fi), (j, fj)):
        expected = (unit.segments(lvl) * unit.repeats,) * unit.dims
        if f.shape != expected:
            raise MismatchedLadder(
                f"level {lvl} field has shape {f.shape}, unit expects {expected}")
    out = DiffField((i, j))
    for c in shared_points(unit, (j, i)):
        out.values[c] = sample(fi, unit, i, c) - sample(fj, unit, j, c)
        out.provenance[c] = "direct"
    return out


def _weights_1d(xo, xa, xb):
    if not (xa <= xo <= xb and xa < xb):
        raise NonBracketing(f"{xo} is not bracketed by ({xa}, {xb})")
    span = xb - xa
    return (xb - xo) / span, (xo - xa) / span


def interp_weights(objective, neighbors):
    """Exact linear (1D) or bilinear (2D) weights for an objective point.

    In 1D ``neighbors`` is a bracketing pair.  In 2D it is either the four
    corners of the containing rectangle or, for a point on a grid line,
    the two bracketing points along that line.
    """
    neighbors = tuple(neighbors)
    if not isinstance(objective, tuple):
        xo = Fraction(objective)
        if len(neighbors) == 1 and neighbors[0] == xo:
            return InterpStencil(xo, neighbors, (Fraction(1),))
        if len(neighbors) != 2:
            raise NonBracketing("1D interpolation needs two neighbours")
        xa, xb = sorted(Fraction(n) for n in neighbors)
        return InterpStencil(xo, (xa, xb), _weights_1d(xo, xa, xb))

    xo, yo = objective
    xs = sorted({n[0] for n in neighbors})
    ys = sorted({n[1] for n in neighbors})
    if len(neighbors) == 1 and neighbors[0] == objective:
        return InterpStencil(objective, neighbors, (Fraction(1),))
    if len(neighbors) == 2 and (len(xs) == 1 or len(ys) == 1):
        if len(xs) == 1 and xs[0] == xo:
            ga, gb = _weights_1d(yo, ys[0], ys[1])
            return InterpStencil(objective, ((xo, ys[0]), (xo, ys[1])), (ga, gb))
        if len(ys) == 1 and ys[0] == yo:
            ga, gb = _weights_1d(xo, xs[0], xs[1])
            return InterpStencil(objective, ((xs[0], yo), (xs[1], yo)), (ga, gb))
        raise NonBracketing(f"edge neighbours {neighbors} do not pass through {objective}")
    if len(neighbors) != 4 or len(xs) != 2 or len(ys) != 2 \
            or set(neighbors) != set(product(xs, ys)):
        raise NonBracketing(f"neighbours {neighbors} do not form a rectangle")
    wx = _weights_1d(xo, *xs)
    wy = _weights_1d(yo, *ys)
    pts = tuple(product(xs, ys))
    weights = tuple(wx[a] * wy[b] for a, b in product(range(2), range(2)))
    return InterpStencil(objective, pts, weights)


def _bracket(c, g):
    """Nearest points of the lattice {i/g} enclosing ``c``."""
    if (c * g).denominator == 1:
        return (c,)
    lo = Fraction(floor(c * g), g)
    return (lo, lo + Fraction(1, g))


def stencil_for(unit, coord, pair):
    """Interpolation stencil for ``coord`` from the lattice shared by ``pair``."""
    i, j = pair
    g = gcd(unit.segments(i), unit.segments(j))
    if unit.dims == 1:
        return interp_weights(coord, _bracket(coord, g))
    bx, by = _bracket(coord[0], g), _bracket(coord[1], g)
    return interp_weights(coord, tuple(product(bx, by)))


def interpolate_differences(diffs, unit, coords):
    """Extend each :class:`DiffField` to ``coords`` by interpolation.

    A location keeps its direct value when both levels of the pair define
    it; otherwise the value is interpolated from the nearest locations
    where the difference is available.
    """
    out = {}
    for key, df in diffs.items():
        ext = DiffField(df.pair, dict(df.values), dict(df.provenance))
        i, j = df.pair
        for c in coords:
            if c in ext:
                continue
            st = stencil_for(unit, c, (j, i))
            missing = [n for n in st.neighbors if n not in df]
            if missing:
                raise InsufficientNeighbors(
                    f"e_{i}{j} is not available at {missing} to interpolate {c}")
            ext.values[c] = st.apply(df.values.__getitem__)
            ext.provenance[c] = "interpolated"
        out[key] = ext
    return out


def difference_system(orders, r):
    """k x k matrix of the consecutive-difference system."""
    p = _orders(orders)
    r = float(r)
    return np.array([[(r ** pm - 1) * r ** (j * pm) for pm in p] for j in range(len(p))])


def fit_from_differences(diffs, orders, r, phi, phi_level, base_spacing=None):
    """Coefficient terms from consecutive differences ``[e21, e32, ...]``.

    ``phi`` is the approximate solution on window level ``phi_level``
    (1-based) at the same points; the estimated exact solution is ``phi``
    minus the terms scaled to that level.
    """
    p = _orders(orders)
    e = np.asarray(diffs, dtype=float)
    if e.shape[0] != len(p):
        raise ValueError(f"need {len(p)} differences for {len(p)} orders, got {e.shape[0]}")
    M = difference_system(p, r)
    rest = e.shape[1:]
    try:
        terms = np.linalg.solve(M, e.reshape(len(p), -1)).reshape(e.shape)
    except np.linalg.LinAlgError as exc:  # distinct orders and r in (0,1) rule this out
        raise SingularSystem(str(exc)) from exc
    # phi_level may vary from point to point
    lvl = np.broadcast_to(np.asarray(phi_level, dtype=float), rest)
    pw = np.asarray(p).reshape((len(p),) + (1,) * len(rest))
    scale = float(r) ** ((lvl - 1)[None] * pw)
    phi_e = np.asarray(phi, dtype=float) - np.sum(scale * terms, axis=0)
    return ExpansionFit(phi_e, terms, base_spacing)


def midas_window(fields, orders, r, h, dims=1, policy="two-level", exact_fields=None,
                 levels=None):
    """MIDAS over one window of ``k + 1`` consecutive levels.

    ``fields`` (and ``exact_fields``) hold one full array per window level,
    coarsest first.  Returns a :class:`~poemkit.estimator.WindowFit` whose
    support is one all-shared point plus the objective locations of every
    repetition of the irreducible unit.
    """
    p = _orders(orders)
    k = len(p)
    fields = [_values(f) for f in fields]
    if len(fields) != k + 1:
        raise MismatchedLadder(f"{len(fields)} fields for a window of {k + 1} levels")
    counts = [f.shape[0] for f in fields]
    unit = irreducible_unit(counts, dims)
    pts = shared_point_map(unit, include_objective=True, policy=policy)
    coords = [sp.coord for sp in pts]

    diffs = {(j + 1, j): differences(fields[j], fields[j - 1], unit, (j + 1, j))
             for j in range(1, k + 1)}
    diffs = interpolate_differences(diffs, unit, coords)

    e_stack, phi, phi_lvl, exact, objective, eps_sh = [], [], [], [], [], []
    for sp in pts:
        top = max(sp.indices)
        e_stack.append([diffs[(j + 1, j)][sp.coord] for j in range(1, k + 1)])
        vals = sample(fields[top - 1], unit, top, sp.coord)
        phi.append(vals)
        phi_lvl.append(np.full(vals.shape, top))
        objective.append(np.full(vals.shape, sp.provenance == "objective"))
        if exact_fields is not None:
            ex = sample(_values(exact_fields[top - 1]), unit, top, sp.coord)
            exact.append(ex)
            if sp.provenance != "objective":
                eps_sh.append(sample(fields[0], unit, 1, sp.coord) - ex)

    e = np.concatenate([np.array(es) for es in e_stack], axis=1)
    phi = np.concatenate(phi)
    phi_lvl = np.concatenate(phi_lvl)
    fit = fit_from_differences(e, p, r, phi, phi_lvl, h)
    eps_t = fit.terms.sum(axis=0)  # estimated error of the coarsest level
    levels = tuple(levels) if levels is not None else tuple(range(1, k + 2))
    return WindowFit(levels, float(h), fit, eps_t, np.concatenate(objective),
                     np.concatenate(exact) if exact_fields is not None else None,
                     np.concatenate(eps_sh) if eps_sh else None)


def run_midas(ladder, fields, orders, policy="two-level", exact_fields=None):
    """Apply MIDAS to every window of ``k + 1`` consecutive ladder levels."""
    p = _orders(orders)
    k = len(p)
    if len(fields) != ladder.levels:
        raise MismatchedLadder(f"{len(fields)} fields for a {ladder.levels}-level ladder")
    out = []
    for w in range(ladder.levels - k):
        lv = tuple(range(w + 1, w + k + 2))
        out.append(midas_window(
            [fields[l - 1] for l in lv], p, ladder.ratio, float(ladder.spacing(lv[0])),
            ladder.dims, policy,
            None if exact_fields is None else [exact_fields[l - 1] for l in lv],
            levels=lv))
    return out
