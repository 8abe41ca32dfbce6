"""Grid-backed paths on [0, T] and the stopped/bumped/spliced algebra.

A path is a right-continuous function of time known exactly on its grid.  Two
interpolation modes exist: 'cadlag_hold' (piecewise constant, jumps at grid
times) and 'linear' (continuous, piecewise linear).  Stopping, bumping and
concatenation return view objects that delegate to their base path, so values
before the surgery point are bit-identical to the original and quantities such
as prefix integrals stay exact under the declared mode.  That exactness is a
contract, not an optimization: several downstream checks assert identities to
machine precision.
"""

import csv
import io

import numpy as np

from . import _kernels
from .errors import DomainError

CADLAG = "cadlag_hold"
LINEAR = "linear"
_MODES = (CADLAG, LINEAR)


def _as_times(ts):
    arr = np.asarray(ts, dtype=float)
    scalar = arr.ndim == 0
    return np.atleast_1d(arr), scalar


class PathBase:
    """Interface shared by all path types.

    Subclasses provide ``dim``, ``horizon`` and the vectorized primitives
    ``_eval``, ``_eval_left``, ``_integral_prefix``, ``_running_max_prefix``
    and ``_sup_before`` over validated, in-domain time arrays.
    """

    dim = None
    horizon = None

    def _check(self, ts):
        if ts.size and (ts.min() < 0.0 or ts.max() > self.horizon):
            raise DomainError(
                f"time outside [0, {self.horizon}]: range "
                f"[{ts.min()}, {ts.max()}]")
        return ts

    def eval(self, ts):
        """Value(s) at time(s) ts; (d,) for a scalar, (m, d) for an array."""
        arr, scalar = _as_times(ts)
        out = self._eval(self._check(arr))
        return out[0] if scalar else out

    def eval_left(self, ts):
        """Left limit(s) at ts (equals eval for continuous paths)."""
        arr, scalar = _as_times(ts)
        out = self._eval_left(self._check(arr))
        return out[0] if scalar else out

    def integral_prefix(self, ts):
        """Componentwise integral over [0, u] for each u in ts.

        Exact for the declared interpolation mode (trapezoid on linear
        segments, left rectangles on held segments).
        """
        arr, scalar = _as_times(ts)
        out = self._integral_prefix(self._check(arr))
        return out[0] if scalar else out

    def running_max_prefix(self, ts):
        """Componentwise running maximum over [0, u] for each u in ts."""
        arr, scalar = _as_times(ts)
        out = self._running_max_prefix(self._check(arr))
        return out[0] if scalar else out

    def knots(self):
        """Times where the path's description changes, including 0 and T."""
        raise NotImplementedError


class GridPath(PathBase):
    """Concrete path: strictly increasing times from 0 to T and values.

    values has shape (n, d); eval at grid times returns stored values exactly
    in both modes.
    """

    def __init__(self, times, values, interp_mode=LINEAR):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if times.ndim != 1 or values.ndim != 2:
            raise DomainError("times must be 1-d and values (n, d)")
        if len(times) != len(values):
            raise DomainError("times and values length mismatch")
        if len(times) < 2:
            raise DomainError("need at least the endpoints 0 and T")
        if times[0] != 0.0:
            raise DomainError("grid must start at 0")
        if not np.all(np.diff(times) > 0):
            raise DomainError("grid times must be strictly increasing")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
            raise DomainError("times and values must be finite")
        if interp_mode not in _MODES:
            raise DomainError(f"unknown interp_mode {interp_mode!r}")
        self.times = times.copy()
        self.values = values.copy()
        self.times.setflags(write=False)
        self.values.setflags(write=False)
        self.interp_mode = interp_mode
        self.dim = values.shape[1]
        self.horizon = float(times[-1])
        self._prefix = None
        self._runmax = None

    def knots(self):
        return self.times

    def _locate(self, ts):
        # index of the largest grid time <= u; valid since ts >= times[0]
        return np.searchsorted(self.times, ts, side="right") - 1

    def _eval(self, ts):
        idx = self._locate(ts)
        out = self.values[idx].copy()
        if self.interp_mode == LINEAR:
            between = self.times[idx] != ts
            if np.any(between):
                j = idx[between]
                t0 = self.times[j]
                t1 = self.times[j + 1]
                frac = ((ts[between] - t0) / (t1 - t0))[:, None]
                out[between] = self.values[j] + frac * (self.values[j + 1] -
                                                        self.values[j])
        return out

    def _eval_left(self, ts):
        if self.interp_mode == LINEAR:
            return self._eval(ts)
        idx = np.searchsorted(self.times, ts, side="left") - 1
        idx = np.maximum(idx, 0)  # left limit at 0 is the value at 0
        return self.values[idx].copy()

    def _node_prefix(self):
        if self._prefix is None:
            if self.interp_mode == LINEAR:
                self._prefix = _kernels.trapezoid_prefix(self.times, self.values)
            else:
                self._prefix = _kernels.left_prefix(self.times, self.values)
            self._prefix.setflags(write=False)
        return self._prefix

    def _integral_prefix(self, ts):
        pref = self._node_prefix()
        idx = self._locate(ts)
        out = pref[idx].copy()
        rem = (ts - self.times[idx])[:, None]
        if self.interp_mode == LINEAR:
            # trapezoid over the partial segment [t_idx, u]
            out += rem * 0.5 * (self.values[idx] + self._eval(ts))
        else:
            out += rem * self.values[idx]
        return out

    def _node_runmax(self):
        if self._runmax is None:
            self._runmax = np.maximum.accumulate(self.values, axis=0)
            self._runmax.setflags(write=False)
        return self._runmax

    def _running_max_prefix(self, ts):
        rm = self._node_runmax()
        idx = self._locate(ts)
        out = rm[idx].copy()
        if self.interp_mode == LINEAR:
            np.maximum(out, self._eval(ts), out=out)
        return out

    def _sup_before(self, u):
        # componentwise sup over [0, u); u > 0 required
        if self.interp_mode == LINEAR:
            return self._running_max_prefix(np.array([u]))[0]
        idx = np.searchsorted(self.times, u, side="left") - 1
        idx = max(idx, 0)
        return self._node_runmax()[idx].copy()


class StoppedPath(PathBase):
    """View of ``base`` frozen at ``stop_time``.

    eval(s) = base(s) for s < stop_time and base(stop_time) afterwards.
    """

    def __init__(self, base, stop_time):
        stop_time = float(stop_time)
        if not 0.0 <= stop_time <= base.horizon:
            raise DomainError(f"stop time {stop_time} outside [0, {base.horizon}]")
        self.base = base
        self.stop_time = stop_time
        self.value_at_stop = base.eval(stop_time)
        self.dim = base.dim
        self.horizon = base.horizon

    def knots(self):
        t = self.base.knots()
        kept = t[t < self.stop_time]
        tail = [self.stop_time] if self.stop_time < self.horizon else []
        return np.concatenate([kept, tail, [self.horizon]])

    def _eval(self, ts):
        out = np.broadcast_to(self.value_at_stop, (len(ts), self.dim)).copy()
        before = ts < self.stop_time
        if np.any(before):
            out[before] = self.base._eval(ts[before])
        return out

    def _eval_left(self, ts):
        out = np.broadcast_to(self.value_at_stop, (len(ts), self.dim)).copy()
        before = ts <= self.stop_time
        if np.any(before):
            out[before] = self.base._eval_left(ts[before])
        return out

    def _integral_prefix(self, ts):
        out = np.empty((len(ts), self.dim))
        before = ts <= self.stop_time
        if np.any(before):
            out[before] = self.base._integral_prefix(ts[before])
        after = ~before
        if np.any(after):
            base_part = self.base._integral_prefix(np.array([self.stop_time]))[0]
            out[after] = base_part + (ts[after] - self.stop_time)[:, None] \
                * self.value_at_stop
        return out

    def _running_max_prefix(self, ts):
        return self.base._running_max_prefix(np.minimum(ts, self.stop_time))

    def _sup_before(self, u):
        if u > self.stop_time:
            return self._running_max_prefix(np.array([self.stop_time]))[0]
        return self.base._sup_before(u)


class BumpedPath(PathBase):
    """Stopped path with a vertical bump h added from the stop time onward.

    Values strictly before the stop time are bit-identical to the base; the
    prefix integral up to the stop time is unchanged (the bump carries no
    measure there).
    """

    def __init__(self, stopped, bump):
        if not isinstance(stopped, StoppedPath):
            raise DomainError("BumpedPath requires a StoppedPath base")
        bump = np.asarray(bump, dtype=float).reshape(-1)
        if bump.shape != (stopped.dim,):
            raise DomainError(f"bump must have shape ({stopped.dim},)")
        self.base = stopped
        self.bump = bump.copy()
        self.bump.setflags(write=False)
        self.stop_time = stopped.stop_time
        self.bumped_value = stopped.value_at_stop + bump
        self.dim = stopped.dim
        self.horizon = stopped.horizon

    def knots(self):
        return self.base.knots()

    def _eval(self, ts):
        out = np.broadcast_to(self.bumped_value, (len(ts), self.dim)).copy()
        before = ts < self.stop_time
        if np.any(before):
            out[before] = self.base._eval(ts[before])
        return out

    def _eval_left(self, ts):
        out = np.broadcast_to(self.bumped_value, (len(ts), self.dim)).copy()
        before = ts <= self.stop_time
        if np.any(before):
            out[before] = self.base._eval_left(ts[before])
        return out

    def _integral_prefix(self, ts):
        out = np.empty((len(ts), self.dim))
        before = ts <= self.stop_time
        if np.any(before):
            out[before] = self.base._integral_prefix(ts[before])
        after = ~before
        if np.any(after):
            at_stop = self.base._integral_prefix(np.array([self.stop_time]))[0]
            out[after] = at_stop + (ts[after] - self.stop_time)[:, None] \
                * self.bumped_value
        return out

    def _running_max_prefix(self, ts):
        out = self.base._running_max_prefix(np.minimum(ts, self.stop_time))
        hit = ts >= self.stop_time
        if np.any(hit):
            out[hit] = np.maximum(out[hit], self.bumped_value)
        return out

    def _sup_before(self, u):
        if u > self.stop_time:
            return np.maximum(self.base._sup_before(u), self.bumped_value)
        return self.base._sup_before(u)


class SplicedPath(PathBase):
    """``left`` on [0, s), then an explicit grid segment from s onward.

    The right segment runs on [s, seg_end] with its own interpolation mode and
    is held constant on (seg_end, T].  A jump at s is permitted.  This is the
    return type of concatenation and of flow solutions (history + extension).
    """

    def __init__(self, left, switch, seg_times, seg_values, seg_mode=LINEAR):
        seg_times = np.asarray(seg_times, dtype=float)
        seg_values = np.asarray(seg_values, dtype=float)
        if seg_values.ndim == 1:
            seg_values = seg_values[:, None]
        switch = float(switch)
        if not 0.0 <= switch <= left.horizon:
            raise DomainError("switch time outside the base horizon")
        if seg_times[0] != switch:
            raise DomainError("segment must start at the switch time")
        if seg_times[-1] > left.horizon:
            raise DomainError("segment extends past the horizon")
        if len(seg_times) > 1 and not np.all(np.diff(seg_times) > 0):
            raise DomainError("segment times must be strictly increasing")
        if seg_values.shape != (len(seg_times), left.dim):
            raise DomainError("segment values shape mismatch")
        if seg_mode not in _MODES:
            raise DomainError(f"unknown interp_mode {seg_mode!r}")
        self.left = left
        self.switch = switch
        self.seg_times = seg_times.copy()
        self.seg_values = seg_values.copy()
        self.seg_times.setflags(write=False)
        self.seg_values.setflags(write=False)
        self.seg_mode = seg_mode
        self.seg_end = float(seg_times[-1])
        self.dim = left.dim
        self.horizon = left.horizon
        self._seg_prefix = None

    def knots(self):
        t = self.left.knots()
        parts = [t[t < self.switch], self.seg_times]
        if self.seg_end < self.horizon:
            parts.append([self.horizon])
        return np.concatenate(parts)

    def _seg_eval(self, ts, left_limit=False):
        # ts within [switch, horizon]; frozen at the last segment value
        out = np.broadcast_to(self.seg_values[-1], (len(ts), self.dim)).copy()
        inside = ts <= self.seg_end
        if np.any(inside):
            u = ts[inside]
            if left_limit and self.seg_mode == CADLAG:
                idx = np.searchsorted(self.seg_times, u, side="left") - 1
                idx = np.maximum(idx, 0)
                out[inside] = self.seg_values[idx]
            else:
                idx = np.searchsorted(self.seg_times, u, side="right") - 1
                vals = self.seg_values[idx].copy()
                if self.seg_mode == LINEAR:
                    between = self.seg_times[idx] != u
                    if np.any(between):
                        j = idx[between]
                        t0 = self.seg_times[j]
                        t1 = self.seg_times[j + 1]
                        frac = ((u[between] - t0) / (t1 - t0))[:, None]
                        vals[between] = self.seg_values[j] + frac * (
                            self.seg_values[j + 1] - self.seg_values[j])
                out[inside] = vals
        return out

    def _eval(self, ts):
        out = np.empty((len(ts), self.dim))
        before = ts < self.switch
        if np.any(before):
            out[before] = self.left._eval(ts[before])
        after = ~before
        if np.any(after):
            out[after] = self._seg_eval(ts[after])
        return out

    def _eval_left(self, ts):
        out = np.empty((len(ts), self.dim))
        before = ts <= self.switch
        if np.any(before):
            out[before] = self.left._eval_left(ts[before])
        after = ~before
        if np.any(after):
            out[after] = self._seg_eval(ts[after], left_limit=True)
        return out

    def _seg_node_prefix(self):
        # integral of the segment from switch to each segment node
        if self._seg_prefix is None:
            if self.seg_mode == LINEAR:
                self._seg_prefix = _kernels.trapezoid_prefix(
                    self.seg_times, self.seg_values)
            else:
                self._seg_prefix = _kernels.left_prefix(
                    self.seg_times, self.seg_values)
            self._seg_prefix.setflags(write=False)
        return self._seg_prefix

    def _integral_prefix(self, ts):
        out = np.empty((len(ts), self.dim))
        before = ts <= self.switch
        if np.any(before):
            out[before] = self.left._integral_prefix(ts[before])
        after = ~before
        if np.any(after):
            u = ts[after]
            head = self.left._integral_prefix(np.array([self.switch]))[0]
            pref = self._seg_node_prefix()
            inner = np.minimum(u, self.seg_end)
            idx = np.searchsorted(self.seg_times, inner, side="right") - 1
            part = pref[idx].copy()
            rem = (inner - self.seg_times[idx])[:, None]
            if self.seg_mode == LINEAR:
                part += rem * 0.5 * (self.seg_values[idx] + self._seg_eval(inner))
            else:
                part += rem * self.seg_values[idx]
            tail = np.clip(u - self.seg_end, 0.0, None)[:, None] \
                * self.seg_values[-1]
            out[after] = head + part + tail
        return out

    def _running_max_prefix(self, ts):
        out = np.empty((len(ts), self.dim))
        before = ts < self.switch
        if np.any(before):
            out[before] = self.left._running_max_prefix(ts[before])
        after = ~before
        if np.any(after):
            u = ts[after]
            head = self.left._sup_before(self.switch) if self.switch > 0 \
                else np.full(self.dim, -np.inf)
            seg_rm = np.maximum.accumulate(self.seg_values, axis=0)
            inner = np.minimum(u, self.seg_end)
            idx = np.searchsorted(self.seg_times, inner, side="right") - 1
            part = seg_rm[idx].copy()
            if self.seg_mode == LINEAR:
                np.maximum(part, self._seg_eval(inner), out=part)
            out[after] = np.maximum(head, part)
        return out

    def _sup_before(self, u):
        if u <= self.switch:
            return self.left._sup_before(u)
        prev = self._running_max_prefix(np.array([u]))[0]
        if self.seg_mode == CADLAG and u <= self.seg_end:
            # drop the value taken exactly at u; cadlag sup over [0, u)
            idx = np.searchsorted(self.seg_times, u, side="left") - 1
            head = self.left._sup_before(self.switch) if self.switch > 0 \
                else np.full(self.dim, -np.inf)
            if idx >= 0:
                seg_rm = np.maximum.accumulate(self.seg_values, axis=0)
                head = np.maximum(head, seg_rm[idx])
            return head
        return prev


def stop(x, t):
    """Path frozen at t: x on [0, t), constant x(t) afterwards.

    Stopping is idempotent: re-stopping at a later time returns the same
    object, and stop(x, T) is x itself.
    """
    t = float(t)
    if not 0.0 <= t <= x.horizon:
        raise DomainError(f"stop time {t} outside [0, {x.horizon}]")
    if t == x.horizon:
        return x
    if isinstance(x, StoppedPath):
        if t >= x.stop_time:
            return x
        return StoppedPath(x.base, t)
    return StoppedPath(x, t)


def bump(x, t, h):
    """Vertical bump: stop x at t, then add h from t onward."""
    stopped = stop(x, t)
    if not isinstance(stopped, StoppedPath) or stopped.stop_time != float(t):
        # stop() may hand back a path already frozen earlier; the bump must
        # still start at t, not at the old freeze point
        stopped = StoppedPath(stopped, t)
    return BumpedPath(stopped, h)


def concat(a, s, b):
    """Path following a before s and b (time-shifted to start at s) after.

    b must cover [0, T - s]; any longer tail is discarded.  A jump at s is
    permitted; values are exact at every representable time in either mode.
    """
    s = float(s)
    if not 0.0 <= s <= a.horizon:
        raise DomainError(f"junction {s} outside [0, {a.horizon}]")
    if a.dim != b.dim:
        raise DomainError("dimension mismatch between the two paths")
    span = a.horizon - s
    if b.horizon < span - 1e-15 * max(1.0, a.horizon):
        raise DomainError("second path too short to cover [0, T - s]")
    span = min(span, b.horizon)
    bk = np.asarray(b.knots())
    inner = bk[(bk > 0) & (bk < span)]
    seg_rel = np.concatenate([[0.0], inner, [span]])
    seg_times = s + seg_rel
    seg_times[0] = s
    seg_times[-1] = a.horizon
    # guard against duplicate floats introduced by the shift
    keep = np.concatenate([[True], np.diff(seg_times) > 0])
    seg_times = seg_times[keep]
    seg_values = b.eval(seg_rel[keep])
    mode = getattr(b, "interp_mode", getattr(b, "seg_mode", LINEAR))
    return SplicedPath(a, s, seg_times, seg_values, seg_mode=mode)


def dist_stopped(x, t, y, s):
    """|t - s| plus the sup distance between the two stopped paths.

    The sup runs over the union of the stopped paths' knots, where both
    values and left limits are compared; this is exact for piecewise
    constant and piecewise linear paths.
    """
    if x.horizon != y.horizon:
        raise DomainError("paths must share a horizon")
    if x.dim != y.dim:
        raise DomainError("paths must share a dimension")
    xs = stop(x, float(t))
    ys = stop(y, float(s))
    grid = np.unique(np.concatenate([xs.knots(), ys.knots()]))
    gap = np.abs(xs.eval(grid) - ys.eval(grid)).max()
    gap_left = np.abs(xs.eval_left(grid) - ys.eval_left(grid)).max()
    return abs(float(t) - float(s)) + max(gap, gap_left)


def constant_path(value, horizon=1.0, dim=None, interp_mode=LINEAR):
    """Constant path on [0, horizon]."""
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if dim is not None and v.size == 1:
        v = np.full(dim, v[0])
    return GridPath([0.0, float(horizon)], np.vstack([v, v]), interp_mode)


def ramp_path(slope=1.0, horizon=1.0, n=1025, interp_mode=LINEAR,
              offset=0.0):
    """x(s) = offset + slope * s sampled on a uniform grid (n nodes)."""
    t = np.linspace(0.0, float(horizon), int(n))
    v = np.atleast_1d(np.asarray(slope, dtype=float))[None, :] * t[:, None] \
        + np.atleast_1d(np.asarray(offset, dtype=float))[None, :]
    return GridPath(t, v, interp_mode)


def path_to_csv(path, dest):
    """Write a path as CSV: header t,v1,...,vd, one row per knot.

    Floats are written with repr so the round trip is byte stable.  The
    interpolation mode is recorded in a leading comment line.
    """
    mode = getattr(path, "interp_mode", getattr(path, "seg_mode", LINEAR))
    grid = np.asarray(path.knots())
    vals = path.eval(grid)
    own = isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__")
    fh = open(dest, "w", newline="") if own else dest
    try:
        fh.write(f"# interp_mode = {mode}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + [f"v{i + 1}" for i in range(path.dim)])
        for u, row in zip(grid, vals):
            writer.writerow([repr(float(u))] + [repr(float(v)) for v in row])
    finally:
        if own:
            fh.close()


def path_from_csv(src, interp_mode=None):
    """Read a path written by path_to_csv; returns a GridPath."""
    own = isinstance(src, (str, bytes)) or hasattr(src, "__fspath__")
    fh = open(src, "r", newline="") if own else src
    try:
        text = fh.read()
    finally:
        if own:
            fh.close()
    mode = interp_mode
    rows = []
    header_seen = False
    for line in io.StringIO(text):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("interp_mode") and mode is None:
                mode = body.split("=", 1)[1].strip()
            continue
        if not header_seen:
            header_seen = True  # column names; structure is positional
            continue
        rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        raise DomainError("no data rows in path CSV")
    arr = np.asarray(rows, dtype=float)
    return GridPath(arr[:, 0], arr[:, 1:], mode or LINEAR)
