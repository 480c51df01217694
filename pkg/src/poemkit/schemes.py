"""Finite-difference reference solvers and manufactured solutions.

Three periodic test problems on ``[0, 1]`` (or the unit square):

* ``advect1d``   phi_t + a phi_x = 0
* ``advdiff1d``  phi_t + a phi_x = nu phi_xx + S(x, t)
* ``advect2d``   phi_t + a phi_x + a_y phi_y = 0

each with the exact solution ``2 + cos(2 pi (x [+ y] - (a [+ a_y]) t))``.

Two schemes are available.  ``BW`` is the one-sided Beam-Warming scheme
(1D advection only).  ``RK2U2`` is Heun's method in time over the
second-order upwind derivative, with a fourth-order central second
derivative for diffusion.  All spatial operators are assembled once as
sparse circulant matrices, so a run is a fixed sequence of
matrix-vector products and is bitwise reproducible.
"""
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .errors import NonIntegerSteps, UnstableParameters
from .grid import as_fraction

KINDS = ("advect1d", "advdiff1d", "advect2d")
SCHEMES = ("BW", "RK2U2")

RK2U2_MAX_CFL = 0.5
BW_MAX_CFL = 2.0
# Heun is stable on the negative real axis up to |lambda dt| = 2 and the
# fourth-order stencil's most negative eigenvalue is -16/3 nu/dx^2.
RK2U2_MAX_DIFFUSION = 0.375


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    a: float = 0.5
    a_y: float = 0.0
    nu: float = 0.0
    t_end: object = 2
    # test hook: start from this constant instead of the cosine profile;
    # also switches the manufactured source off.
    constant_initial: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}; expected one of {KINDS}")
        if not self.a > 0:
            raise ValueError("advection speed a must be positive")
        if self.kind == "advect2d" and not self.a_y > 0:
            raise ValueError("advection speed a_y must be positive for advect2d")
        if self.nu < 0:
            raise ValueError("diffusivity nu must be non-negative")
        object.__setattr__(self, "t_end", as_fraction(self.t_end))

    @property
    def dims(self):
        return 2 if self.kind == "advect2d" else 1


@dataclass
class FieldLevel:
    level: int
    segments: int
    steps: int
    dx: float
    dt: float
    values: np.ndarray

    @property
    def dims(self):
        return self.values.ndim


def grid_coords(segments, dims=1):
    x = np.arange(segments) / segments
    if dims == 1:
        return x
    return np.meshgrid(x, x, indexing="ij")


def exact_solution(problem, coords, t):
    """Analytical solution at ``coords`` (``x`` or ``(x, y)``) and time ``t``."""
    t = float(t)
    if problem.constant_initial is not None:
        shape = np.shape(coords[0] if problem.dims == 2 else coords)
        return np.full(shape, float(problem.constant_initial))
    if problem.dims == 2:
        x, y = coords
        phase = np.asarray(x) + np.asarray(y) - (problem.a + problem.a_y) * t
    else:
        phase = np.asarray(coords) - problem.a * t
    return 2.0 + np.cos(2 * np.pi * phase)


def source_term(problem, x, t):
    """Forcing that makes the cosine profile an exact advection-diffusion solution.

    Substituting ``2 + cos(2 pi (x - a t))`` into
    ``phi_t + a phi_x - nu phi_xx`` leaves ``4 pi^2 nu cos(2 pi (x - a t))``.
    """
    x = np.asarray(x, dtype=float)
    if problem.kind != "advdiff1d" or problem.constant_initial is not None:
        return np.zeros_like(x)
    return 4 * np.pi ** 2 * problem.nu * np.cos(2 * np.pi * (x - problem.a * float(t)))


def _circulant(n, coeffs):
    """Sparse periodic matrix with ``(M u)_i = sum_k coeffs[k] u_{i+k}``."""
    rows, cols, data = [], [], []
    idx = np.arange(n)
    for offset, c in sorted(coeffs.items()):
        rows.append(idx)
        cols.append((idx + offset) % n)
        data.append(np.full(n, c, dtype=float))
    m = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    m.sum_duplicates()
    return m


def upwind2_matrix(n, dx):
    """Second-order upwind first derivative for positive speed."""
    return _circulant(n, {0: 3 / (2 * dx), -1: -4 / (2 * dx), -2: 1 / (2 * dx)})


def central4_second_derivative(n, dx):
    h2 = 12 * dx * dx
    return _circulant(n, {-2: -1 / h2, -1: 16 / h2, 0: -30 / h2, 1: 16 / h2, 2: -1 / h2})


def beam_warming_matrix(n, c):
    """One Beam-Warming step for speed a > 0 and CFL number c."""
    return _circulant(n, {0: 1 - 1.5 * c + 0.5 * c * c,
                          -1: 2 * c - c * c,
                          -2: -0.5 * c + 0.5 * c * c})


def cfl_numbers(problem, segments, steps):
    dx = 1.0 / segments
    dt = float(problem.t_end / steps)
    cs = [problem.a * dt / dx]
    if problem.dims == 2:
        cs.append(problem.a_y * dt / dx)
    return cs, problem.nu * dt / dx ** 2


def check_stability(scheme, problem, segments, steps, max_cfl=None):
    cs, d = cfl_numbers(problem, segments, steps)
    if scheme == "BW":
        limit = BW_MAX_CFL if max_cfl is None else max_cfl
        bad = [c for c in cs if not 0 < c <= limit]
    else:
        limit = RK2U2_MAX_CFL if max_cfl is None else max_cfl
        if limit > RK2U2_MAX_CFL:
            warnings.warn(f"RK2U2 CFL gate raised to {limit} (default {RK2U2_MAX_CFL})",
                          stacklevel=3)
        bad = [c for c in cs if c > limit]
        if d > RK2U2_MAX_DIFFUSION:
            raise UnstableParameters(
                f"diffusion number {d:.4g} exceeds {RK2U2_MAX_DIFFUSION} "
                f"({segments} segments, {steps} steps)")
    if bad:
        raise UnstableParameters(
            f"{scheme}: CFL number {bad[0]:.4g} outside (0, {limit}] "
            f"({segments} segments, {steps} steps)")


def solve_grid(scheme, problem, segments, steps, level=1, max_cfl=None):
    """Advance the problem's initial data ``steps`` steps to ``t_end``."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if int(steps) != steps or steps < 1:
        raise NonIntegerSteps(level, Fraction(steps))
    if scheme == "BW" and problem.kind != "advect1d":
        raise ValueError("the BW scheme is only provided for advect1d")
    check_stability(scheme, problem, segments, steps, max_cfl)

    dims = problem.dims
    dx = 1.0 / segments
    dt = float(problem.t_end / steps)
    coords = grid_coords(segments, dims)
    u = exact_solution(problem, coords, 0.0).astype(float).ravel()

    if scheme == "BW":
        step = beam_warming_matrix(segments, problem.a * dt / dx)
        for _ in range(steps):
            u = step @ u
    else:
        d1 = upwind2_matrix(segments, dx)
        if dims == 1:
            op = -problem.a * d1
            if problem.nu:
                op = op + problem.nu * central4_second_derivative(segments, dx)
        else:
            eye = sp.identity(segments, format="csr")
            op = -problem.a * sp.kron(d1, eye) - problem.a_y * sp.kron(eye, d1)
        op = sp.csr_matrix(op)

        forced = problem.kind == "advdiff1d" and problem.nu and problem.constant_initial is None
        if forced:
            # S(x, t) = A cos(2 pi x - w t) expanded so each stage costs two axpys
            amp = 4 * np.pi ** 2 * problem.nu
            cx, sx = np.cos(2 * np.pi * coords), np.sin(2 * np.pi * coords)
            w = 2 * np.pi * problem.a

            def src(t):
                return amp * (np.cos(w * t) * cx + np.sin(w * t) * sx)
        for n in range(steps):
            k1 = op @ u
            if forced:
                k1 += src(n * dt)
            k2 = op @ (u + dt * k1)
            if forced:
                k2 += src((n + 1) * dt)
            u = u + 0.5 * dt * (k1 + k2)

    shape = (segments,) * dims
    return FieldLevel(level, segments, steps, dx, dt, u.reshape(shape))


def solve(scheme, problem, ladder, level, max_cfl=None):
    """Solve on one level of a :class:`~poemkit.grid.GridLadder`."""
    if ladder.dims != problem.dims:
        raise ValueError(f"ladder has {ladder.dims} dims but problem {problem.kind} has {problem.dims}")
    if ladder.t_end != problem.t_end:
        raise ValueError(f"ladder t_end {ladder.t_end} differs from problem t_end {problem.t_end}")
    return solve_grid(scheme, problem, ladder.segments(level), ladder.steps(level),
                      level=level, max_cfl=max_cfl)


def solve_ladder(scheme, problem, ladder, max_cfl=None):
    return [solve(scheme, problem, ladder, l, max_cfl) for l in range(1, ladder.levels + 1)]


def exact_field(problem, segments):
    """Exact solution sampled on a grid at ``t_end``."""
    return exact_solution(problem, grid_coords(segments, problem.dims), problem.t_end)
