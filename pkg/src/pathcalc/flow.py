"""Path-dependent flows: y' (t) = gamma(t, y restricted to [0, t]).

`solve_flow` extends a path from s by windowed Picard iteration: the window
length is capped at 1/(2K) for the field's declared Lipschitz constant K, so
each sweep contracts by at least 1/2 in the sup norm.  Sweep integrals use
trapezoid quadrature on the solver grid (the fixed point is the implicit
trapezoid scheme, second order).  `euler_flow` is the deliberately simple
first-order oracle: one explicit left-point pass, no iteration, kept
independent so the two routes can check each other.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError, FlowIterationError
from .functionals import DirectionField
from .paths import LINEAR, PathBase, SplicedPath, stop

_DIVERGENCE_CAP = 1e12


class _LiveSplice(PathBase):
    """Internal path view over a partially filled extension buffer.

    Shares (not copies) the solver's arrays; ``filled`` marks how many
    segment nodes are currently defined.  Callers must only evaluate at
    times covered by the filled prefix.  No validation, no caching.
    """

    def __init__(self, left, switch, seg_times, seg_values):
        self.left = left
        self.switch = switch
        self.seg_times = seg_times
        self.seg_values = seg_values
        self.filled = 1
        self.dim = left.dim
        self.horizon = left.horizon

    def knots(self):
        t = self.left.knots()
        return np.concatenate([t[t < self.switch],
                               self.seg_times[:self.filled]])

    def _seg(self):
        return self.seg_times[:self.filled], self.seg_values[:self.filled]

    def _eval(self, ts):
        out = np.empty((len(ts), self.dim))
        before = ts < self.switch
        if np.any(before):
            out[before] = self.left._eval(ts[before])
        after = ~before
        if np.any(after):
            st, sv = self._seg()
            u = ts[after]
            idx = np.minimum(np.searchsorted(st, u, side="right") - 1,
                             len(st) - 1)
            vals = sv[idx].copy()
            between = (st[idx] != u) & (idx < len(st) - 1)
            if np.any(between):
                j = idx[between]
                frac = ((u[between] - st[j]) / (st[j + 1] - st[j]))[:, None]
                vals[between] = sv[j] + frac * (sv[j + 1] - sv[j])
            out[after] = vals
        return out

    def _eval_left(self, ts):
        out = np.empty((len(ts), self.dim))
        before = ts <= self.switch
        if np.any(before):
            out[before] = self.left._eval_left(ts[before])
        after = ~before
        if np.any(after):
            out[after] = self._eval(ts[after])  # extension is continuous
        return out

    def _integral_prefix(self, ts):
        out = np.empty((len(ts), self.dim))
        before = ts <= self.switch
        if np.any(before):
            out[before] = self.left._integral_prefix(ts[before])
        after = ~before
        if np.any(after):
            st, sv = self._seg()
            u = ts[after]
            head = self.left._integral_prefix(np.array([self.switch]))[0]
            hi = int(np.searchsorted(st, u.max(), side="right"))
            pref = _kernels.trapezoid_prefix(st[:hi], sv[:hi])
            idx = np.minimum(np.searchsorted(st, u, side="right") - 1, hi - 1)
            part = pref[idx] + (u - st[idx])[:, None] * 0.5 * (
                sv[idx] + self._eval(u))
            out[after] = head + part
        return out

    def _running_max_prefix(self, ts):
        out = np.empty((len(ts), self.dim))
        before = ts < self.switch
        if np.any(before):
            out[before] = self.left._running_max_prefix(ts[before])
        after = ~before
        if np.any(after):
            st, sv = self._seg()
            u = ts[after]
            head = self.left._sup_before(self.switch) if self.switch > 0 \
                else np.full(self.dim, -np.inf)
            rm = np.maximum.accumulate(sv, axis=0)
            idx = np.minimum(np.searchsorted(st, u, side="right") - 1,
                             len(st) - 1)
            out[after] = np.maximum(head, np.maximum(rm[idx], self._eval(u)))
        return out

    def _sup_before(self, u):
        if u <= self.switch:
            return self.left._sup_before(u)
        return self._running_max_prefix(np.array([u]))[0]


@dataclass
class FlowSolution:
    """Solved flow: the extended path plus solver provenance."""

    path: PathBase
    start: float
    until: float
    direction: DirectionField
    substep: float
    picard_tol: float
    grid: np.ndarray
    values: np.ndarray
    iterations: list = field(default_factory=list)
    quadrature: str = "trapezoid"

    def residual(self, ts=None):
        """|Y(t) - Y(s) - integral of gamma along Y| at the given times
        (solver grid by default), using the solver's own quadrature."""
        if ts is None:
            ts = self.grid
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < self.start or ts.max() > self.until):
            raise DomainError("residual times must lie in [start, until]")
        g = self.direction.eval_many(self.grid, self.path)
        idx = np.searchsorted(self.grid, ts, side="right") - 1
        if self.quadrature == "trapezoid":
            pref = _kernels.trapezoid_prefix(self.grid, g)
            part = pref[idx] + (ts - self.grid[idx])[:, None] * 0.5 * (
                g[idx] + self.direction.eval_many(ts, self.path))
        else:
            pref = _kernels.left_prefix(self.grid, g)
            part = pref[idx] + (ts - self.grid[idx])[:, None] * g[idx]
        gap = self.path.eval(ts) - (self.values[0] + part)
        return np.abs(gap).max(axis=1)

    @property
    def tol_residual(self):
        # iteration bound plus float accumulation over the grid
        scale = float(np.abs(self.values).max()) + 1.0
        fp = 4e-16 * scale * max(len(self.grid), 1)
        return max(10.0 * self.picard_tol, fp)


def _make_grid(s, until, substep, grid):
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        if grid[0] != s or grid[-1] != until:
            raise DomainError("explicit grid must run from s to until")
        if not np.all(np.diff(grid) > 0):
            raise DomainError("grid times must be strictly increasing")
        return grid, float(np.diff(grid).max())
    span = until - s
    if substep is None:
        substep = span / 1024.0
    if substep <= 0:
        raise ConfigError("substep must be positive")
    n = max(1, int(np.ceil(span / substep - 1e-12)))
    grid = s + span * np.arange(n + 1) / n
    grid[0] = s
    grid[-1] = until
    return grid, span / n


def _window_runs(grid, cap):
    """Split the grid into index runs of span <= cap (with fp slack)."""
    runs = []
    i0 = 0
    last = len(grid) - 1
    slack = cap * (1 + 1e-9) if np.isfinite(cap) else np.inf
    while i0 < last:
        j = int(np.searchsorted(grid, grid[i0] + slack, side="right")) - 1
        j = min(max(j, i0), last)
        if j == i0:
            raise ConfigError(
                f"substep {grid[i0 + 1] - grid[i0]:g} is not below the "
                f"contraction window {cap:g}; refine the grid")
        runs.append((i0, j))
        i0 = j
    return runs


def solve_flow(w, s, gamma, until=None, substep=None, window=None,
               picard_tol=1e-10, max_iters=100, grid=None,
               initial_guess="constant"):
    """Extend w past s by Picard iteration along the direction field.

    Returns a FlowSolution whose path equals w on [0, s] exactly, follows
    the solved extension on [s, until] (linear interpolation between solver
    grid points) and stays frozen at Y(until) afterwards.  A direction that
    evaluates to zero along the whole extension returns the stopped path
    itself, so the zero-field flow is exact.
    """
    s = float(s)
    until = w.horizon if until is None else float(until)
    if not 0.0 <= s <= w.horizon:
        raise DomainError(f"start {s} outside [0, {w.horizon}]")
    if not s <= until <= w.horizon:
        raise DomainError(f"until must lie in [{s}, {w.horizon}]")
    if gamma.dim_out != w.dim:
        raise DomainError("direction dimension does not match the path")
    if picard_tol <= 0:
        raise ConfigError("picard_tol must be positive")
    if max_iters < 1:
        raise ConfigError("max_iters must be at least 1")
    if initial_guess not in ("constant", "euler"):
        raise ConfigError(f"unknown initial guess {initial_guess!r}")
    if s == until:
        g0 = np.array([s])
        v0 = w.eval(s)[None, :]
        return FlowSolution(stop(w, s), s, until, gamma, 0.0, picard_tol,
                            g0, v0, [])

    grid, mesh = _make_grid(s, until, substep, grid)
    K = gamma.lipschitz_K
    cap = 0.5 / K if K > 0 else np.inf
    if window is not None:
        if window <= 0:
            raise ConfigError("window must be positive")
        cap = min(cap, float(window))
    runs = _window_runs(grid, cap)

    n = len(grid)
    values = np.empty((n, w.dim))
    values[0] = w.eval(s)
    live = _LiveSplice(w, s, grid, values)
    iterations = []

    for i0, i1 in runs:
        ts = grid[i0:i1 + 1]
        v0 = values[i0].copy()
        if initial_guess == "euler":
            for j in range(i0, i1):
                live.filled = j + 1
                gj = gamma.eval(grid[j], live)
                values[j + 1] = values[j] + (grid[j + 1] - grid[j]) * gj
        else:
            values[i0 + 1:i1 + 1] = v0
        live.filled = i1 + 1
        done = False
        for it in range(1, max_iters + 1):
            g = gamma.eval_many(ts, live)
            new = v0 + _kernels.trapezoid_prefix(ts, g)
            delta = float(np.abs(new - values[i0:i1 + 1]).max())
            values[i0:i1 + 1] = new
            if delta <= picard_tol:
                iterations.append(it)
                done = True
                break
            if not np.isfinite(delta) or delta > _DIVERGENCE_CAP:
                break
        if not done:
            partial = SplicedPath(w, s, grid[:i1 + 1], values[:i1 + 1],
                                  seg_mode=LINEAR)
            raise FlowIterationError(
                f"Picard did not contract to {picard_tol:g} within "
                f"{max_iters} sweeps on window [{ts[0]:g}, {ts[-1]:g}] "
                f"(last change {delta:g}); is the declared Lipschitz "
                f"constant {K:g} honest?",
                last_iterate=partial, sup_change=delta)

    if np.all(values == values[0]):
        # the field vanished along the whole extension: the flow is the
        # stopped path, returned as such so downstream identities are exact
        path = stop(w, s)
    else:
        path = SplicedPath(w, s, grid, values, seg_mode=LINEAR)
    return FlowSolution(path, s, until, gamma, mesh, picard_tol, grid,
                        values, iterations)


def euler_flow(w, s, gamma, until=None, substep=None, grid=None):
    """First-order oracle: explicit left-point steps, no iteration.

    Independent of solve_flow on purpose; used to cross-check it.  Exact
    for constant fields.
    """
    s = float(s)
    until = w.horizon if until is None else float(until)
    if not 0.0 <= s <= until <= w.horizon:
        raise DomainError("need 0 <= s <= until <= horizon")
    if gamma.dim_out != w.dim:
        raise DomainError("direction dimension does not match the path")
    if s == until:
        return FlowSolution(stop(w, s), s, until, gamma, 0.0, 0.0,
                            np.array([s]), w.eval(s)[None, :], [])
    grid, mesh = _make_grid(s, until, substep, grid)
    n = len(grid)
    values = np.empty((n, w.dim))
    values[0] = w.eval(s)
    live = _LiveSplice(w, s, grid, values)
    for j in range(n - 1):
        live.filled = j + 1
        gj = gamma.eval(grid[j], live)
        values[j + 1] = values[j] + (grid[j + 1] - grid[j]) * gj
    if np.all(values == values[0]):
        path = stop(w, s)
    else:
        path = SplicedPath(w, s, grid, values, seg_mode=LINEAR)
    return FlowSolution(path, s, until, gamma, mesh, 0.0, grid, values, [1],
                        quadrature="left")
