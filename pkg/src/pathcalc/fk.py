"""Monte Carlo pricing of path payoffs and backward-equation checks.

An SDESpec bundles drift, diffusion, discount rate and terminal payoff.
`estimate_f` prices the payoff by Euler-Maruyama simulation from a given
(time, history) pair; `fk_residual` evaluates the backward-equation defect
of a candidate value functional; `martingale_check` tests the discounted
candidate along simulated paths, which catches wrong candidates without
knowing the true value.

Each sample path draws from its own counter-based substream, so path i is
identical whether paths are generated singly or in bulk.
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from ._kernels import left_prefix
from .errors import ConfigError, DomainError
from .flow import _LiveSplice
from .functionals import Functional, FunctionalWithDerivatives, \
    MatrixFunctional, VectorFunctional, constant_direction, \
    constant_functional, constant_matrix_field, square_functional
from .paths import LINEAR, SplicedPath, constant_path, stop


@dataclass
class SDESpec:
    """dX = drift dt + sigma dW, discount rate, terminal payoff at horizon."""

    drift: VectorFunctional
    sigma: MatrixFunctional
    rate: Functional
    payoff: Functional
    horizon: float = 1.0

    def __post_init__(self):
        self.horizon = float(self.horizon)
        if self.horizon <= 0:
            raise DomainError("horizon must be positive")
        if self.drift.dim_out != self.sigma.shape[0]:
            raise DomainError(
                f"drift is {self.drift.dim_out}-dimensional but sigma has "
                f"{self.sigma.shape[0]} rows")

    @property
    def dim(self):
        return self.drift.dim_out

    @property
    def noise_dim(self):
        return self.sigma.shape[1]

    @property
    def has_constant_coeffs(self):
        return (self.drift.constant_value is not None
                and self.sigma.constant_value is not None)


def _check_history(spec, t, x):
    if x.dim != spec.dim:
        raise DomainError(f"history is {x.dim}-dimensional, SDE is {spec.dim}")
    if x.horizon != spec.horizon:
        raise DomainError("history horizon must equal the SDE horizon")
    if not 0.0 <= t <= spec.horizon:
        raise DomainError(f"time {t} outside [0, {spec.horizon}]")


def _simulate_on_grid(spec, grid, x, seed, index):
    """One Euler-Maruyama path on an explicit grid; exact history before
    grid[0].  Constant coefficients take a vectorized route; otherwise the
    coefficients see the live prefix step by step."""
    n = len(grid) - 1
    dt = np.diff(grid)
    dw = rng.normals(seed, index, (n, spec.noise_dim)) * np.sqrt(dt)[:, None]
    start = x.eval(grid[0])
    values = np.empty((n + 1, spec.dim))
    values[0] = start
    if spec.has_constant_coeffs:
        a = spec.drift.constant_value
        sig = spec.sigma.constant_value
        inc = dt[:, None] * a[None, :] + dw @ sig.T
        values[1:] = start[None, :] + np.cumsum(inc, axis=0)
    else:
        live = _LiveSplice(x, grid[0], grid, values)
        for j in range(n):
            live.filled = j + 1
            a = spec.drift.eval(grid[j], live)
            sig = spec.sigma.eval(grid[j], live)
            values[j + 1] = values[j] + (dt[j] * a + sig @ dw[j])
    return SplicedPath(x, float(grid[0]), grid, values, LINEAR)


def simulate_sde(spec, t, x, n_steps=64, seed=0, index=0, grid=None):
    """Simulate the SDE from (t, x) to the horizon.

    The returned path equals x on [0, t] exactly.  t == horizon returns x
    itself.  An explicit grid must run from t to the horizon.
    """
    t = float(t)
    _check_history(spec, t, x)
    if t == spec.horizon:
        return x
    if grid is None:
        if n_steps < 1:
            raise ConfigError("n_steps must be at least 1")
        grid = np.linspace(t, spec.horizon, int(n_steps) + 1)
    else:
        grid = np.asarray(grid, dtype=float)
        if grid[0] != t or grid[-1] != spec.horizon \
                or not np.all(np.diff(grid) > 0):
            raise ConfigError("grid must increase from t to the horizon")
    return _simulate_on_grid(spec, grid, x, seed, index)


@dataclass
class MCEstimate:
    value: float
    stderr: float
    n_paths: int

    def within(self, reference, k=3.0):
        return abs(self.value - reference) <= k * self.stderr


def estimate_f(spec, t, x, n_paths=2000, n_steps=64, seed=0):
    """Monte Carlo value of the discounted payoff started from (t, x).

    At t == horizon no simulation happens and the payoff is returned with
    zero error.  The rate is integrated with left rectangles on the
    simulation grid.
    """
    t = float(t)
    _check_history(spec, t, x)
    if n_paths < 1:
        raise ConfigError("n_paths must be at least 1")
    if t == spec.horizon:
        return MCEstimate(spec.payoff.eval(t, x), 0.0, 0)
    grid = np.linspace(t, spec.horizon, int(n_steps) + 1)
    const_rate = spec.rate.constant_value
    if const_rate is not None:
        disc = float(np.exp(-const_rate * (spec.horizon - t)))
    ys = np.empty(n_paths)
    for i in range(n_paths):
        p = _simulate_on_grid(spec, grid, x, seed, i)
        if const_rate is None:
            rv = spec.rate.eval_many(grid, p)
            disc = float(np.exp(-left_prefix(grid, rv[:, None])[-1, 0]))
        ys[i] = disc * spec.payoff.eval(spec.horizon, p)
    value = float(ys.mean())
    stderr = float(ys.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    return MCEstimate(value, stderr, n_paths)


def _require_derivatives(f):
    for name in ("partial_t", "grad", "hess"):
        if getattr(f, name, None) is None:
            raise DomainError(f"{getattr(f, 'label', f)!r} lacks {name}; "
                              "a full derivative set is required")


def fk_residual(f, spec, t, x):
    """Backward-equation defect of a candidate value functional at (t, x):

        d_t f + <drift, grad f> - rate * f + (1/2) tr(hess f sigma sigma^T)

    evaluated on the stopped history.  Zero along solutions.
    """
    _require_derivatives(f)
    t = float(t)
    _check_history(spec, t, x)
    xt = stop(x, t)
    pt = f.partial_t.eval(t, xt)
    grad = f.grad_vector(t, xt)
    hess = f.hess_matrix(t, xt)
    a = spec.drift.eval(t, xt)
    sig = spec.sigma.eval(t, xt)
    r = spec.rate.eval(t, xt)
    val = f.eval(t, xt)
    return float(pt + a @ grad - r * val
                 + 0.5 * np.trace(hess @ (sig @ sig.T)))


@dataclass
class MartingaleReport:
    """Per-step drift of the discounted candidate along simulated paths."""

    times: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    ok_steps: np.ndarray

    @property
    def passed(self):
        return bool(self.ok_steps.all())

    @property
    def worst_z(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(self.means) / self.stderrs
        z[self.stderrs == 0.0] = np.where(
            self.means[self.stderrs == 0.0] == 0.0, 0.0, np.inf)
        return float(z.max())


def martingale_check(spec, f, t_grid, x0, n_paths=2000, seed=0, k=3.0):
    """Check that exp(-int r) f(t, X) has no drift along simulated paths.

    x0 is the initial history (a path, or a value promoted to a constant
    path); simulation starts at t_grid[0].  Each step passes when the mean
    increment is within k standard errors of zero; a zero standard error
    demands an exactly zero mean.  A wrong candidate shows a systematic
    drift and fails.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 2 or not np.all(np.diff(t_grid) > 0):
        raise DomainError("t_grid must be strictly increasing, >= 2 times")
    if not hasattr(x0, "eval"):
        x0 = constant_path(x0, horizon=spec.horizon, dim=spec.dim)
    _check_history(spec, float(t_grid[0]), x0)
    if t_grid[-1] > spec.horizon * (1 + 1e-12):
        raise DomainError("t_grid exceeds the horizon")
    if n_paths < 2:
        raise ConfigError("martingale check needs n_paths >= 2")
    m = len(t_grid)
    H = np.empty((n_paths, m))
    for i in range(n_paths):
        p = _simulate_on_grid(spec, t_grid, x0, seed, i)
        rv = spec.rate.eval_many(t_grid, p)
        disc = np.exp(-left_prefix(t_grid, rv[:, None])[:, 0])
        H[i] = disc * f.eval_many(t_grid, p)
    D = np.diff(H, axis=1)
    means = D.mean(axis=0)
    stderrs = D.std(axis=0, ddof=1) / np.sqrt(n_paths)
    ok = np.where(stderrs > 0.0, np.abs(means) <= k * stderrs, means == 0.0)
    return MartingaleReport(t_grid, means, stderrs, ok)


# ---------------------------------------------------------------------------
# closed-form benchmarks: (spec, value functional) pairs with residual 0


def benchmark(name, horizon=1.0):
    """Named SDE benchmarks whose value functionals are exact.

    gauss_square:   dX = dW, f(t, x) = x(t)^2 + (T - t), payoff X_T^2.
    drifted_linear: dX = mu dt + dW, f = x(t) + mu (T - t), payoff X_T.
    discount_const: dX = dW, rate rho, payoff 1, f = exp(-rho (T - t)).
    """
    T = float(horizon)
    if name == "gauss_square":
        spec = SDESpec(constant_direction([0.0]),
                       constant_matrix_field([[1.0]]),
                       constant_functional(0.0),
                       square_functional(), horizon=T)
        f = FunctionalWithDerivatives(
            lambda t, x: x.eval(t)[0] ** 2 + (T - t),
            label="square_plus_remaining",
            fn_many=lambda ts, x: x.eval(ts)[:, 0] ** 2 + (T - ts),
            partial_t=constant_functional(-1.0),
            grad=[Functional(lambda t, x: 2.0 * x.eval(t)[0],
                             fn_many=lambda ts, x: 2.0 * x.eval(ts)[:, 0],
                             label="2*eval")],
            hess=[[constant_functional(2.0)]])
        return spec, f
    if name == "drifted_linear":
        mu = 0.5
        spec = SDESpec(constant_direction([mu]),
                       constant_matrix_field([[1.0]]),
                       constant_functional(0.0),
                       Functional(lambda t, x: x.eval(t)[0],
                                  fn_many=lambda ts, x: x.eval(ts)[:, 0],
                                  label="eval"), horizon=T)
        f = FunctionalWithDerivatives(
            lambda t, x: x.eval(t)[0] + mu * (T - t),
            label="linear_plus_drift",
            fn_many=lambda ts, x: x.eval(ts)[:, 0] + mu * (T - ts),
            partial_t=constant_functional(-mu),
            grad=[constant_functional(1.0)],
            hess=[[constant_functional(0.0)]])
        return spec, f
    if name == "discount_const":
        rho = 0.25
        spec = SDESpec(constant_direction([0.0]),
                       constant_matrix_field([[1.0]]),
                       constant_functional(rho),
                       constant_functional(1.0), horizon=T)
        f = FunctionalWithDerivatives(
            lambda t, x: np.exp(-rho * (T - t)),
            label="pure_discount",
            fn_many=lambda ts, x: np.exp(-rho * (T - ts)),
            partial_t=Functional(
                lambda t, x: rho * np.exp(-rho * (T - t)),
                fn_many=lambda ts, x: rho * np.exp(-rho * (T - ts)),
                label="rho*discount"),
            grad=[constant_functional(0.0)],
            hess=[[constant_functional(0.0)]])
        return spec, f
    raise DomainError(f"unknown benchmark {name!r}; choices: gauss_square, "
                      "drifted_linear, discount_const")
