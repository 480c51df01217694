"""Preset-orders expansion fits, error norms and convergence assessment.

The principal model at one location on level ``l`` of a refinement window
is::

    phi_l = phi_e_hat + sum_m T_m * r ** ((l - 1) * p_m)

where ``T_m = D_{p_m} h ** p_m`` are the coefficient terms on the
window's coarsest level.  The system is posed in the unknowns ``T_m``
(not ``D_{p_m}``) so the matrix entries stay in ``[0, 1]``.
"""
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import (DegenerateOrders, EmptyField, InsufficientWindows,
                     MismatchedSupport, NonPositiveValue, SingularSystem,
                     UndefinedOrder, ZeroLeadingTerm)
from .grid import irreducible_unit, sample, shared_point_map

DEFAULT_BETA = 0.01
DEFAULT_TOLERANCE = 0.1


@dataclass(frozen=True)
class PresetOrders:
    orders: tuple
    quantum: float = 1.0

    def __post_init__(self):
        orders = tuple(float(p) for p in self.orders)
        if not orders:
            raise ValueError("at least one preset order is required")
        if any(p <= 0 for p in orders):
            raise ValueError(f"preset orders must be positive, got {orders}")
        if len(set(orders)) != len(orders):
            raise DegenerateOrders(f"preset orders {orders} contain duplicates")
        if list(orders) != sorted(orders):
            raise ValueError(f"preset orders must be strictly increasing, got {orders}")
        if not self.quantum > 0:
            raise ValueError("order quantum must be positive")
        object.__setattr__(self, "orders", orders)

    @property
    def k(self):
        return len(self.orders)

    def __iter__(self):
        return iter(self.orders)


def _orders(orders):
    return orders.orders if isinstance(orders, PresetOrders) else tuple(float(p) for p in orders)


def build_system(orders, r, k=None):
    """Row ``l`` (0-based) is ``[1, r**(l p_1), ..., r**(l p_k)]``."""
    p = _orders(orders)
    if k is not None and k != len(p):
        raise ValueError(f"k={k} but {len(p)} orders were given")
    if len(set(p)) != len(p):
        raise DegenerateOrders(f"preset orders {p} contain duplicates")
    r = float(r)
    if not 0 < r < 1:
        raise ValueError(f"refinement ratio {r} outside (0, 1)")
    k = len(p)
    return np.array([[1.0] + [r ** (l * pm) for pm in p] for l in range(k + 1)])


@dataclass
class ExpansionFit:
    phi_e_hat: np.ndarray
    terms: np.ndarray  # shape (k, ...) -- T_m on the window's coarsest level
    base_spacing: Optional[float] = None

    @property
    def k(self):
        return self.terms.shape[0]

    def error_at(self, level, orders, r):
        """Estimated discretization error ``sum_m T_m r**((level-1) p_m)``."""
        p = _orders(orders)
        scale = np.array([float(r) ** ((level - 1) * pm) for pm in p])
        return np.tensordot(scale, self.terms, axes=1)


def _solve(matrix, rhs):
    try:
        return np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc


def fit_expansion(values, orders, r, base_spacing=None):
    """Solve the preset-order system at every sampled location.

    ``values`` has shape ``(k + 1, ...)``: the approximate solution on the
    window's levels, coarsest first, all sampled at the same locations.
    """
    p = _orders(orders)
    values = np.asarray(values, dtype=float)
    if values.shape[0] != len(p) + 1:
        raise ValueError(f"need {len(p) + 1} levels for {len(p)} orders, got {values.shape[0]}")
    A = build_system(p, r)
    rest = values.shape[1:]
    sol = _solve(A, values.reshape(len(p) + 1, -1))
    sol = sol.reshape((len(p) + 1,) + rest)
    return ExpansionFit(sol[0], sol[1:], base_spacing)


def estimate_error(phi_l, fit):
    """Estimated discretization error ``phi_l - phi_e_hat`` at the fitted points."""
    phi_l = np.asarray(phi_l, dtype=float)
    if phi_l.shape != np.shape(fit.phi_e_hat):
        raise MismatchedSupport(
            f"field has shape {phi_l.shape} but the fit covers {np.shape(fit.phi_e_hat)}")
    return phi_l - fit.phi_e_hat


class Norms(NamedTuple):
    l1: float
    l2: float
    linf: float


def norms(values):
    """Mean-absolute, root-mean-square and max-absolute norms."""
    f = np.abs(np.asarray(values, dtype=float)).ravel()
    if f.size == 0:
        raise EmptyField("cannot take norms of an empty field")
    l1 = float(np.mean(f))
    l2 = float(np.sqrt(np.mean(f * f)))
    linf = float(np.max(f))
    # round-off can reorder nearly equal norms of almost-constant fields
    l1 = min(l1, linf)
    l2 = min(max(l2, l1), linf)
    return Norms(l1, l2, linf)


def log_slope(h, values):
    """Slopes d(log10 value) / d(log10 h) between consecutive points."""
    h = np.asarray(h, dtype=float)
    v = np.asarray(values, dtype=float)
    if h.size < 2 or h.shape != v.shape:
        raise ValueError("need at least two (h, value) pairs of equal length")
    if np.any(np.diff(h) >= 0):
        raise ValueError("h must be strictly decreasing")
    if np.any(~(v > 0)) or np.any(~(h > 0)):
        raise NonPositiveValue("log slopes need positive h and values")
    lh, lv = np.log10(h), np.log10(v)
    return np.diff(lv) / np.diff(lh)


def beta_ratio(term_norms, beta=DEFAULT_BETA):
    """Ratio of the second to the first coefficient-term L2 norm and its verdict."""
    if len(term_norms) < 2:
        raise ValueError("the asymptotic criterion needs at least two coefficient terms")
    n1, n2 = float(term_norms[0]), float(term_norms[1])
    if n1 == 0:
        raise ZeroLeadingTerm("leading coefficient term vanishes; ratio is indeterminate")
    bt = n2 / n1
    return bt, bt < beta


@dataclass
class WindowFit:
    """Expansion fit over one window of k + 1 consecutive levels.

    Arrays are flat over the window's support.  ``objective`` marks points
    whose differences were (partly) interpolated; the rest are shared by
    every level of the window.
    """

    levels: tuple
    h: float
    fit: ExpansionFit
    eps_tilde: np.ndarray
    objective: np.ndarray
    phi_exact: Optional[np.ndarray] = None
    # actual error of the coarsest level at the shared (non-objective) points
    eps_shared: Optional[np.ndarray] = None


def _values(field_or_array):
    return np.asarray(getattr(field_or_array, "values", field_or_array), dtype=float)


def poem_windows(ladder, fields, orders, exact_fields=None):
    """Plain POEM over every window of ``k + 1`` consecutive ladder levels.

    The support of a window is the set of points shared by all of its
    levels: one point per repetition of the window's irreducible unit.
    """
    p = _orders(orders)
    k = len(p)
    fields = [_values(f) for f in fields]
    if len(fields) != ladder.levels:
        raise MismatchedSupport(f"{len(fields)} fields for a {ladder.levels}-level ladder")
    r = ladder.ratio
    out = []
    for w in range(ladder.levels - k):
        levels = tuple(range(w + 1, w + k + 2))
        counts = [ladder.segments(l) for l in levels]
        unit = irreducible_unit(counts, ladder.dims)
        pts = [sp for sp in shared_point_map(unit, include_objective=False)]
        stack = np.array([np.concatenate([sample(fields[l - 1], unit, i + 1, sp.coord)
                                          for sp in pts])
                          for i, l in enumerate(levels)])
        h = float(ladder.spacing(levels[0]))
        fit = fit_expansion(stack, p, r, base_spacing=h)
        eps_t = estimate_error(stack[0], fit)
        exact = eps = None
        if exact_fields is not None:
            exact = np.concatenate([sample(_values(exact_fields[levels[0] - 1]), unit, 1, sp.coord)
                                    for sp in pts])
            eps = stack[0] - exact
        out.append(WindowFit(levels, h, fit, eps_t, np.zeros(eps_t.shape, bool), exact, eps))
    return out


@dataclass
class WindowSummary:
    levels: tuple
    h: float
    n_points: int
    n_objective: int
    term_norms: tuple  # L2 norm of each coefficient term over the whole support
    term_norms_shared: tuple
    term_norms_objective: Optional[tuple]
    eps_tilde: Norms
    beta_tilde: Optional[float]
    asymptotic: Optional[bool]
    es_ex: Optional[Norms] = None  # phi_e_hat - phi_e
    eps_common: Optional[Norms] = None  # actual error on the shared points
    eps_tilde_common: Optional[Norms] = None

    @property
    def log_h(self):
        return math.log10(self.h)


@dataclass
class LevelError:
    level: int
    h: float
    norms: Norms

    @property
    def log_h(self):
        return math.log10(self.h)


@dataclass
class ConvergenceReport:
    orders: tuple
    beta: float
    windows: list
    level_errors: list = field(default_factory=list)

    @property
    def k(self):
        return len(self.orders)

    def log_h(self):
        return np.array([w.log_h for w in self.windows])

    def term_norm_matrix(self):
        return np.array([w.term_norms for w in self.windows])

    def term_slopes(self):
        """Per-term slopes, shape (windows - 1, k); row i joins windows i and i+1."""
        hs = np.array([w.h for w in self.windows])
        tn = self.term_norm_matrix()
        if len(self.windows) < 2:
            return np.empty((0, self.k))
        return np.column_stack([_safe_slopes(hs, tn[:, m]) for m in range(self.k)])

    def slopes_of(self, attr, which="l2"):
        hs = np.array([w.h for w in self.windows])
        vals = np.array([getattr(getattr(w, attr), which) for w in self.windows])
        return _safe_slopes(hs, vals)

    def level_error_slopes(self, which="l2"):
        hs = np.array([e.h for e in self.level_errors])
        vals = np.array([getattr(e.norms, which) for e in self.level_errors])
        return _safe_slopes(hs, vals)

    def to_dict(self):
        def nt(x):
            return None if x is None else dict(x._asdict())
        return {
            "orders": list(self.orders),
            "beta": self.beta,
            "windows": [{
                "levels": list(w.levels), "h": w.h, "log10_h": w.log_h,
                "n_points": w.n_points, "n_objective": w.n_objective,
                "term_l2": list(w.term_norms),
                "term_l2_shared": list(w.term_norms_shared),
                "term_l2_objective": None if w.term_norms_objective is None
                else list(w.term_norms_objective),
                "beta_tilde": w.beta_tilde,
                "asymptotic": w.asymptotic if w.beta_tilde is not None else "indeterminate",
                "eps_tilde": nt(w.eps_tilde), "es_ex": nt(w.es_ex),
                "eps_common": nt(w.eps_common), "eps_tilde_common": nt(w.eps_tilde_common),
            } for w in self.windows],
            "term_slopes": [list(map(_jsonable, row)) for row in self.term_slopes()],
            "level_errors": [{"level": e.level, "h": e.h, **e.norms._asdict()}
                             for e in self.level_errors],
        }


def _jsonable(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _safe_slopes(h, values):
    """Like :func:`log_slope` but yields NaN where a value is not positive."""
    h = np.asarray(h, dtype=float)
    v = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lv = np.where(v > 0, np.log10(np.where(v > 0, v, 1.0)), np.nan)
    return np.diff(lv) / np.diff(np.log10(h))


def _l2(x):
    return float(np.sqrt(np.mean(np.square(x)))) if np.size(x) else None


def summarize_window(wf, beta=DEFAULT_BETA):
    terms = wf.fit.terms
    obj = np.asarray(wf.objective, bool)
    tn = tuple(_l2(t) for t in terms)
    tn_sh = tuple(_l2(t[~obj]) for t in terms)
    tn_obj = tuple(_l2(t[obj]) for t in terms) if obj.any() else None
    bt = flag = None
    if len(tn) >= 2:
        try:
            bt, flag = beta_ratio(tn, beta)
        except ZeroLeadingTerm:
            pass
    es_ex = eps_c = eps_tc = None
    if wf.phi_exact is not None:
        es_ex = norms(wf.fit.phi_e_hat - wf.phi_exact)
    if wf.eps_shared is not None and np.size(wf.eps_shared):
        eps_c = norms(wf.eps_shared)
        eps_tc = norms(wf.eps_tilde[~obj])
    return WindowSummary(tuple(wf.levels), wf.h, int(obj.size), int(obj.sum()), tn, tn_sh,
                         tn_obj, norms(wf.eps_tilde), bt, flag, es_ex, eps_c, eps_tc)


def build_report(window_fits, orders, beta=DEFAULT_BETA, level_errors=()):
    windows = sorted((summarize_window(wf, beta) for wf in window_fits), key=lambda w: -w.h)
    return ConvergenceReport(_orders(orders), beta, windows, list(level_errors))


def level_error_table(spacings, fields, exact_fields):
    """Norms of the actual error ``phi_l - phi_e`` on every full level."""
    return [LevelError(l, float(h), norms(_values(f) - _values(e)))
            for l, (h, f, e) in enumerate(zip(spacings, fields, exact_fields), 1)]


# ---------------------------------------------------------------------------
# order checking


@dataclass(frozen=True)
class TermVerdict:
    order: float
    observed: float
    matches: bool


@dataclass(frozen=True)
class OrderCheck:
    verdicts: tuple
    mu: Optional[float]

    @property
    def all_match(self):
        return all(v.matches for v in self.verdicts)


def check_orders(report, orders=None, tolerance=DEFAULT_TOLERANCE, quantum=1.0):
    """Compare each term's finest-window slope with its preset order.

    The suggested replacement order is the smallest observed slope among the
    deviating terms, rounded to a multiple of ``quantum``.
    """
    if isinstance(orders, PresetOrders):
        quantum = orders.quantum
    p = report.orders if orders is None else _orders(orders)
    slopes = report.term_slopes()
    if slopes.shape[0] < 1:
        raise InsufficientWindows("order check needs at least two windows")
    finest = slopes[-1]
    verdicts = tuple(TermVerdict(pm, float(s), bool(abs(s - pm) <= tolerance))
                     for pm, s in zip(p, finest))
    bad = [v.observed for v in verdicts if not v.matches and math.isfinite(v.observed)]
    mu = None
    if bad:
        mu = max(quantum, round(min(bad) / quantum) * quantum)
    return OrderCheck(verdicts, mu)


def replace_orders(orders, check, quantum=1.0):
    """New preset orders with every deviating order replaced by mu."""
    p = _orders(orders)
    if check.mu is None:
        return p
    new = sorted({check.mu if not v.matches else v.order for v in check.verdicts})
    while len(new) < len(p):
        new.append(new[-1] + quantum)
    return tuple(float(x) for x in new)


@dataclass
class OrderIteration:
    final: tuple
    converged: bool
    trail: list  # [(orders, OrderCheck), ...]
    # "converged", "stalled" (the replacement reproduces tried orders) or "budget"
    status: str = "converged"

    def to_dict(self):
        return {
            "final": list(self.final),
            "converged": self.converged,
            "status": self.status,
            "trail": [{
                "orders": list(o),
                "verdicts": [{"order": v.order, "observed": _jsonable(v.observed),
                              "matches": v.matches} for v in c.verdicts],
                "suggested_mu": c.mu,
            } for o, c in self.trail],
        }


def iterate_orders(study, initial, max_iterations=5, tolerance=DEFAULT_TOLERANCE,
                   quantum=None):
    """Refit with corrected orders until every term converges at its preset rate.

    ``study`` maps a tuple of orders to a :class:`ConvergenceReport`.  When
    the budget runs out the last attempt is returned with
    ``converged=False``.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be at least 1")
    if quantum is None:
        quantum = initial.quantum if isinstance(initial, PresetOrders) else 1.0
    orders = _orders(initial)
    trail = []
    seen = set()
    for _ in range(max_iterations):
        check = check_orders(study(orders), orders, tolerance, quantum)
        trail.append((orders, check))
        if check.all_match:
            return OrderIteration(orders, True, trail)
        seen.add(orders)
        nxt = replace_orders(orders, check, quantum)
        if nxt in seen:
            return OrderIteration(orders, False, trail, "stalled")
        orders = nxt
    return OrderIteration(orders, False, trail, "budget")


# ---------------------------------------------------------------------------
# observed-order baseline


def gre_baseline(phi1, phi2, phi3, r):
    """Observed order and single-term error estimate from three solutions.

    Raises :class:`UndefinedOrder` where ``(phi3 - phi2) / (phi2 - phi1)``
    is not positive; the order is not clipped.
    """
    r = float(r)
    if not 0 < r < 1:
        raise ValueError(f"refinement ratio {r} outside (0, 1)")
    phi1, phi2, phi3 = (np.asarray(x, dtype=float) for x in (phi1, phi2, phi3))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (phi3 - phi2) / (phi2 - phi1)
    if np.any(~(ratio > 0)) or np.any(~np.isfinite(ratio)):
        raise UndefinedOrder("observed order undefined: differences change sign or vanish")
    q = np.log(ratio) / math.log(r)
    eps = (phi2 - phi1) / (r ** q - 1)
    if q.ndim == 0:
        return float(q), float(eps)
    return q, eps
