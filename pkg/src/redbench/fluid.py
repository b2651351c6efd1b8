"""Stochastic fluid model of a TCP population sharing one RED queue.

State is (W, Q, Q_hat): congestion window, instantaneous queue, averaged
queue. The drift field is

    dW/dt = 1/T - (W/2) * lambda        lambda = p(Q_hat) * W / T by default
    dQ/dt = W/T - C                     reflected at Q = 0 and Q = B
    dQ_hat/dt = w_q * C * (Q - Q_hat)

with multiplicative noise sqrt(1/T + (W/2) lambda) on W and sqrt(|W/T - C|)
on Q. Marking can act through the drift (expected-value mode) or through
sampled events applied as discrete window halvings (poisson mode); in event
mode the lambda terms leave both the drift and the window diffusion, since
the event stream itself carries that mean and variance.

Also here: a 1-D conservative finite-difference solver for densities
evolving under dp/dt = -d/dx[A p] + (1/2) d2/dx2[D p], used to cross-check
the window equation against Monte-Carlo ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, NoEquilibriumError, StabilityError
from .red import RedParams, drop_probability

__all__ = [
    "W_FLOOR",
    "MarkingProcess",
    "FluidParams",
    "FluidState",
    "Grid1D",
    "FPResult",
    "FluidEnsemble",
    "window_per_ack",
    "marking_intensity",
    "drift",
    "diffusion",
    "step_euler_maruyama",
    "simulate_fluid",
    "fixed_point",
    "solve_fokker_planck_1d",
    "window_fp_coefficients",
    "euler_maruyama_ensemble_1d",
]

W_FLOOR = 1.0

MARKING_MODES = ("expected", "poisson")


@dataclass(frozen=True)
class MarkingProcess:
    """How window-halving marks are generated.

    mode "expected" folds the intensity into the drift; "poisson" samples
    discrete events with probability intensity*dt per step and applies each
    as one halving. intensity_fn overrides the default p(Q_hat)*W/T law; it
    is called as intensity_fn(w, q_hat, params) and must accept numpy arrays
    for w and q_hat (ensemble runs pass whole trajectories at once).
    """

    mode: str = "expected"
    intensity_fn: Callable | None = None

    def __post_init__(self) -> None:
        if self.mode not in MARKING_MODES:
            raise ConfigError(
                f"marking mode must be one of {MARKING_MODES}, got {self.mode!r}"
            )


@dataclass(frozen=True)
class FluidParams:
    """Model parameters: path, service, averaging, marking, and flags."""

    rtt: float = 0.1
    capacity: float = 100.0
    w_q: float = 0.002
    red: RedParams = field(default_factory=RedParams)
    buffer: float = 50.0
    noise_enabled: bool = True
    marking_enabled: bool = True
    marking: MarkingProcess = field(default_factory=MarkingProcess)

    def __post_init__(self) -> None:
        if self.rtt <= 0.0 or not math.isfinite(self.rtt):
            raise ConfigError(f"rtt must be positive and finite, got {self.rtt}")
        if self.capacity <= 0.0 or not math.isfinite(self.capacity):
            raise ConfigError(f"capacity must be positive, got {self.capacity}")
        if not (0.0 < self.w_q <= 1.0):
            raise ConfigError(f"w_q must be in (0, 1], got {self.w_q}")
        if self.buffer <= 0.0:
            raise ConfigError(f"buffer must be positive, got {self.buffer}")


@dataclass
class FluidState:
    """One point of the fluid system: window, queue, averaged queue, time."""

    w: float = 1.0
    q: float = 0.0
    q_hat: float = 0.0
    t: float = 0.0

    def clamped(self, params: FluidParams) -> "FluidState":
        """Copy with the box constraints enforced."""
        return FluidState(
            w=max(self.w, W_FLOOR),
            q=min(max(self.q, 0.0), params.buffer),
            q_hat=max(self.q_hat, 0.0),
            t=self.t,
        )


def window_per_ack(w: float) -> float:
    """Additive-increase map applied per acknowledgement: w -> w + 1/w."""
    if w < W_FLOOR:
        raise ConfigError(f"window must be >= {W_FLOOR}, got {w}")
    return w + 1.0 / w


def marking_intensity(w: float, q_hat: float, params: FluidParams):
    """Event rate of the marking process, 0 when marking is disabled.

    Accepts scalars or numpy arrays for w and q_hat.
    """
    if not params.marking_enabled:
        return 0.0 if np.isscalar(w) else np.zeros_like(w)
    fn = params.marking.intensity_fn
    if fn is not None:
        lam = fn(w, q_hat, params)
        return np.maximum(lam, 0.0) if not np.isscalar(lam) else max(lam, 0.0)
    if np.isscalar(q_hat):
        p = drop_probability(q_hat, params.red)
    else:
        r = params.red
        ramp = r.p_max * (q_hat - r.q_min) / (r.q_max - r.q_min)
        p = np.where(q_hat < r.q_min, 0.0, np.where(q_hat >= r.q_max, 1.0, ramp))
    return p * w / params.rtt


def drift(state: FluidState, params: FluidParams) -> tuple[float, float, float]:
    """Expected rates of change (dW/dt, dQ/dt, dQ_hat/dt).

    The queue component is clipped at the boundaries: never negative when the
    queue is empty, never positive when it is full.
    """
    lam = marking_intensity(state.w, state.q_hat, params)
    dw = 1.0 / params.rtt - state.w / 2.0 * lam
    dq = state.w / params.rtt - params.capacity
    if state.q <= 0.0 and dq < 0.0:
        dq = 0.0
    elif state.q >= params.buffer and dq > 0.0:
        dq = 0.0
    dqh = params.w_q * params.capacity * (state.q - state.q_hat)
    return dw, dq, dqh


def diffusion(state: FluidState, params: FluidParams) -> tuple[float, float]:
    """Noise amplitudes (sigma_W, sigma_Q) of the expected-value form.

    sigma_W = sqrt(1/T + (W/2) lambda); sigma_Q = sqrt(|W/T - C|). The
    absolute value keeps sigma_Q real when the queue drains. Event-mode
    stepping replaces sigma_W with sqrt(1/T); this reporting helper always
    gives the expected-value amplitudes.
    """
    lam = marking_intensity(state.w, state.q_hat, params)
    sig_w = math.sqrt(1.0 / params.rtt + state.w / 2.0 * lam)
    sig_q = math.sqrt(abs(state.w / params.rtt - params.capacity))
    return sig_w, sig_q


def step_euler_maruyama(
    state: FluidState,
    params: FluidParams,
    dt: float,
    z1: float = 0.0,
    z2: float = 0.0,
    n_events: int = 0,
) -> FluidState:
    """Advance one step of size dt.

    z1 and z2 are standard normal draws supplied by the caller; they are
    ignored when noise is disabled. n_events is the number of marking events
    in this step (poisson mode only); each one halves the window. With noise
    off and no events the update is exactly forward Euler on the drift.
    Raises StabilityError when dt exceeds rtt/10.
    """
    if dt <= 0.0:
        raise StabilityError(f"dt must be positive, got {dt}")
    if dt > params.rtt / 10.0:
        raise StabilityError(
            f"dt={dt} exceeds the stability guard rtt/10 = {params.rtt / 10.0}"
        )
    if n_events < 0:
        raise ConfigError(f"n_events must be >= 0, got {n_events}")

    w, q, qh = state.w, state.q, state.q_hat
    rtt, c, buf = params.rtt, params.capacity, params.buffer
    poisson_mode = params.marking.mode == "poisson"
    lam = marking_intensity(w, qh, params)

    if poisson_mode:
        dw = 1.0 / rtt
    else:
        dw = 1.0 / rtt - w / 2.0 * lam
    dq_raw = w / rtt - c
    dq = dq_raw
    if q <= 0.0 and dq < 0.0:
        dq = 0.0
    elif q >= buf and dq > 0.0:
        dq = 0.0
    dqh = params.w_q * c * (q - qh)

    w1 = w + dw * dt
    q1 = q + dq * dt
    qh1 = qh + dqh * dt

    if params.noise_enabled:
        sqrt_dt = math.sqrt(dt)
        if poisson_mode:
            sig_w = math.sqrt(1.0 / rtt)
        else:
            sig_w = math.sqrt(1.0 / rtt + w / 2.0 * lam)
        sig_q = math.sqrt(abs(dq_raw))
        w1 = w1 + sig_w * sqrt_dt * z1
        q1 = q1 + sig_q * sqrt_dt * z2

    if poisson_mode and n_events > 0:
        w1 = w1 * 0.5**n_events

    if w1 < W_FLOOR:
        w1 = W_FLOOR
    if q1 < 0.0:
        q1 = 0.0
    elif q1 > buf:
        q1 = buf
    if qh1 < 0.0:
        qh1 = 0.0

    return FluidState(w=w1, q=q1, q_hat=qh1, t=state.t + dt)


def _poisson_from_uniform(u: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Poisson(mu) inverse-CDF lookup of uniform draws u, elementwise."""
    k = np.zeros(u.shape, dtype=np.int64)
    p = np.exp(-mu)
    c = p.copy()
    for i in range(1, 256):
        active = u >= c
        if not active.any():
            break
        k += active
        p = p * (mu / i)
        c = c + p
    return k


@dataclass
class FluidEnsemble:
    """Output of simulate_fluid: sample times, ensemble moments, and the
    first few stored trajectories (axis order: trajectory, time, variable;
    variables ordered W, Q, Q_hat)."""

    times: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    trajectories: np.ndarray
    n_traj: int
    seed: int


def simulate_fluid(
    params: FluidParams,
    t_end: float,
    dt: float | None = None,
    seed: int = 0,
    n_traj: int | None = None,
    init: FluidState | None = None,
    out_every: int | None = None,
    save_trajectories: int | None = None,
) -> FluidEnsemble:
    """Integrate an ensemble of trajectories and reduce it to moments.

    Trajectory i draws from its own stream seeded with (seed, i), consuming,
    in order: a block of n_steps normals for the window noise, a block for
    the queue noise (both only when noise is on), then a block of uniforms
    for event marking (poisson mode only). That fixed discipline makes every
    trajectory reproducible in isolation regardless of ensemble size.

    dt defaults to rtt/100; n_traj to 1000. Population variance is reported.
    save_trajectories caps how many trajectories are stored in full (default
    min(n_traj, 100)); moments always cover all of them.
    """
    if t_end <= 0.0:
        raise ConfigError(f"t_end must be positive, got {t_end}")
    if dt is None:
        dt = params.rtt / 100.0
    if dt <= 0.0:
        raise StabilityError(f"dt must be positive, got {dt}")
    if dt > params.rtt / 10.0:
        raise StabilityError(
            f"dt={dt} exceeds the stability guard rtt/10 = {params.rtt / 10.0}"
        )
    if n_traj is None:
        n_traj = 1000
    if n_traj < 1:
        raise ConfigError(f"n_traj must be >= 1, got {n_traj}")
    if seed < 0:
        raise ConfigError(f"seed must be >= 0, got {seed}")
    if init is None:
        init = FluidState()
    init = init.clamped(params)

    n_steps = max(1, int(round(t_end / dt)))
    if out_every is None:
        out_every = 1 if n_steps <= 1000 else math.ceil(n_steps / 1000)
    if out_every < 1:
        raise ConfigError(f"out_every must be >= 1, got {out_every}")
    sample_steps = list(range(0, n_steps + 1, out_every))
    if sample_steps[-1] != n_steps:
        sample_steps.append(n_steps)
    sample_of_step = {s: i for i, s in enumerate(sample_steps)}
    n_out = len(sample_steps)
    times = init.t + dt * np.asarray(sample_steps, dtype=float)

    if save_trajectories is None:
        save_trajectories = min(n_traj, 100)
    n_save = min(save_trajectories, n_traj)

    rtt, c, buf, w_q = params.rtt, params.capacity, params.buffer, params.w_q
    poisson_mode = params.marking.mode == "poisson"
    need_u = poisson_mode and params.marking_enabled
    need_z = params.noise_enabled
    inv_rtt = 1.0 / rtt
    sqrt_dt = math.sqrt(dt)
    sig_w_flat = math.sqrt(1.0 / rtt)

    # Moments accumulate as sums of deviations from a per-sample reference
    # (the first trajectory's value) so that identical trajectories yield a
    # variance of exactly zero instead of cancellation dust.
    sums = np.zeros((n_out, 3))
    sumsq = np.zeros((n_out, 3))
    ref = np.zeros((n_out, 3))
    saved = np.zeros((n_save, n_out, 3))

    chunk_cap = max(1, int(2_000_000 // max(n_steps, 1)))
    start = 0
    while start < n_traj:
        m = min(chunk_cap, n_traj - start)
        z1 = z2 = u = None
        if need_z or need_u:
            if need_z:
                z1 = np.empty((m, n_steps))
                z2 = np.empty((m, n_steps))
            if need_u:
                u = np.empty((m, n_steps))
            for j in range(m):
                rng = np.random.default_rng([seed, start + j])
                if need_z:
                    z1[j] = rng.standard_normal(n_steps)
                    z2[j] = rng.standard_normal(n_steps)
                if need_u:
                    u[j] = rng.random(n_steps)

        w = np.full(m, init.w)
        q = np.full(m, init.q)
        qh = np.full(m, init.q_hat)

        def record(idx: int) -> None:
            cols = (w, q, qh)
            if start == 0:
                for v, col in enumerate(cols):
                    ref[idx, v] = col[0]
            for v, col in enumerate(cols):
                dev = col - ref[idx, v]
                sums[idx, v] += dev.sum()
                sumsq[idx, v] += (dev * dev).sum()
            if start < n_save:
                take = min(n_save - start, m)
                saved[start : start + take, idx, 0] = w[:take]
                saved[start : start + take, idx, 1] = q[:take]
                saved[start : start + take, idx, 2] = qh[:take]

        record(0)
        for k in range(n_steps):
            lam = marking_intensity(w, qh, params)
            if poisson_mode:
                dw = inv_rtt
            else:
                dw = inv_rtt - w / 2.0 * lam
            dq_raw = w / rtt - c
            dq = np.where((q <= 0.0) & (dq_raw < 0.0), 0.0, dq_raw)
            dq = np.where((q >= buf) & (dq > 0.0), 0.0, dq)
            dqh = w_q * c * (q - qh)

            w1 = w + dw * dt
            q1 = q + dq * dt
            qh1 = qh + dqh * dt

            if need_z:
                if poisson_mode:
                    sig_w = sig_w_flat
                else:
                    sig_w = np.sqrt(inv_rtt + w / 2.0 * lam)
                sig_q = np.sqrt(np.abs(dq_raw))
                w1 = w1 + sig_w * sqrt_dt * z1[:, k]
                q1 = q1 + sig_q * sqrt_dt * z2[:, k]

            if need_u:
                d_n = _poisson_from_uniform(u[:, k], lam * dt)
                hit = d_n > 0
                if hit.any():
                    w1 = np.where(hit, w1 * np.power(0.5, d_n), w1)

            w = np.maximum(w1, W_FLOOR)
            q = np.clip(q1, 0.0, buf)
            qh = np.maximum(qh1, 0.0)

            idx = sample_of_step.get(k + 1)
            if idx is not None:
                record(idx)

        start += m

    dev_mean = sums / n_traj
    mean = ref + dev_mean
    var = np.maximum(sumsq / n_traj - dev_mean * dev_mean, 0.0)
    return FluidEnsemble(
        times=times,
        mean=mean,
        var=var,
        trajectories=saved,
        n_traj=n_traj,
        seed=seed,
    )


def fixed_point(
    params: FluidParams,
    fixed_p: float | None = None,
    max_iter: int = 200,
) -> FluidState:
    """Equilibrium of the drift field, found by bisection on Q_hat.

    At an interior equilibrium W* = C*T (queue balance), Q* = Q_hat*
    (averaging balance), and the window balance pins the marking probability
    at p* = 2/W*^2, i.e. W* = sqrt(2/p*). Diagnostic mode: passing fixed_p
    skips the queue coupling and returns the window/queue pair implied by
    that marking probability alone.

    Raises NoEquilibriumError naming the failed constraint when no interior
    equilibrium exists.
    """
    r = params.red
    w_star = params.capacity * params.rtt

    if fixed_p is not None:
        if not (0.0 < fixed_p <= 1.0):
            raise ConfigError(f"fixed_p must be in (0, 1], got {fixed_p}")
        w_diag = math.sqrt(2.0 / fixed_p)
        if fixed_p >= r.p_max:
            raise NoEquilibriumError(
                f"fixed_p={fixed_p} is at or above p_max={r.p_max}: "
                "the ramp cannot supply it at an interior point"
            )
        q_eq = r.q_min + fixed_p * (r.q_max - r.q_min) / r.p_max
        return FluidState(w=w_diag, q=q_eq, q_hat=q_eq, t=0.0)

    if not params.marking_enabled:
        raise NoEquilibriumError(
            "marking is disabled: the window drift 1/T is always positive"
        )
    if w_star < W_FLOOR:
        raise NoEquilibriumError(
            f"equilibrium window C*T = {w_star} is below the floor {W_FLOOR}"
        )

    def residual(q_hat: float) -> float:
        lam = marking_intensity(w_star, q_hat, params)
        return 1.0 / params.rtt - w_star / 2.0 * lam

    lo, hi = r.q_min, math.nextafter(r.q_max, r.q_min)
    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo < 0.0:
        raise NoEquilibriumError(
            f"equilibrium falls below q_min={r.q_min}: marking is already "
            f"too strong at the bottom of the ramp (residual {r_lo:g})"
        )
    if r_hi > 0.0:
        raise NoEquilibriumError(
            f"equilibrium falls above q_max={r.q_max}: maximum marking is too "
            f"weak to hold W = C*T = {w_star:g} (needs p >= {2.0 / w_star**2:g}, "
            f"ramp tops out at p_max={r.p_max})"
        )

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if residual(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    q_eq = 0.5 * (lo + hi)

    if q_eq > params.buffer:
        raise NoEquilibriumError(
            f"equilibrium queue {q_eq:g} exceeds the buffer {params.buffer:g}"
        )
    return FluidState(w=w_star, q=q_eq, q_hat=q_eq, t=0.0)


@dataclass
class Grid1D:
    """Uniform cell-centered grid carrying a probability density."""

    lo: float
    hi: float
    n: int
    density: np.ndarray

    def __post_init__(self) -> None:
        if not (self.hi > self.lo):
            raise ConfigError(f"need hi > lo, got lo={self.lo}, hi={self.hi}")
        if self.n < 3:
            raise ConfigError(f"grid needs at least 3 cells, got n={self.n}")
        self.density = np.asarray(self.density, dtype=float)
        if self.density.shape != (self.n,):
            raise ConfigError(
                f"density shape {self.density.shape} does not match n={self.n}"
            )
        if (self.density < 0.0).any():
            raise ConfigError("density must be nonnegative")

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.n) + 0.5) * self.dx

    @property
    def mass(self) -> float:
        return float(self.density.sum() * self.dx)

    @classmethod
    def from_pdf(cls, lo: float, hi: float, n: int, pdf: Callable) -> "Grid1D":
        """Evaluate pdf at cell centers, clip negatives, normalize to mass 1."""
        grid = cls(lo, hi, n, np.zeros(n))
        vals = np.maximum(np.asarray(pdf(grid.centers), dtype=float), 0.0)
        total = vals.sum() * grid.dx
        if total <= 0.0:
            raise ConfigError("pdf integrates to zero on the grid")
        grid.density = vals / total
        return grid


@dataclass
class FPResult:
    """Evolved density plus solver accounting."""

    grid: Grid1D
    clip_events: int
    mass_error: float
    steps: int


def solve_fokker_planck_1d(
    grid: Grid1D,
    drift_fn: Callable,
    diffusion_sq_fn: Callable,
    dt: float,
    t_end: float,
) -> FPResult:
    """Evolve the density to t_end with an explicit conservative scheme.

    The flux at each interior face is A*avg(p) - d(D p)/dx / 2; boundary
    faces carry zero flux (reflecting walls), so mass is conserved to
    rounding. dt must satisfy dt <= dx^2 / max(D); steps are further
    subdivided internally if the advective bound dx/max|A| is tighter.
    Negative cells produced by the scheme are clipped to zero and the density
    renormalized, with each occurrence counted.

    drift_fn and diffusion_sq_fn are evaluated on arrays of positions (faces
    and centers respectively); diffusion_sq_fn is D = sigma^2, not sigma.
    """
    if t_end <= 0.0:
        raise ConfigError(f"t_end must be positive, got {t_end}")
    if dt <= 0.0:
        raise StabilityError(f"dt must be positive, got {dt}")

    n, dx = grid.n, grid.dx
    centers = grid.centers
    faces = grid.lo + np.arange(1, n) * dx

    a_face = np.asarray(drift_fn(faces), dtype=float) * np.ones(n - 1)
    d_cent = np.asarray(diffusion_sq_fn(centers), dtype=float) * np.ones(n)
    if (d_cent < 0.0).any():
        raise ConfigError("diffusion_sq_fn returned negative values")

    d_max = float(d_cent.max())
    if d_max > 0.0 and dt > dx * dx / d_max:
        raise StabilityError(
            f"dt={dt} violates the diffusive bound dx^2/max(D) = {dx * dx / d_max:g}"
        )
    a_max = float(np.abs(a_face).max())
    n_sub = 1
    if a_max > 0.0:
        n_sub = max(1, int(math.ceil(dt / (0.5 * dx / a_max))))
    h = dt / n_sub

    p = grid.density.copy()
    mass0 = p.sum() * dx
    clip_events = 0
    steps = 0

    n_macro = max(1, int(math.ceil(t_end / dt - 1e-12)))
    t_done = 0.0
    flux = np.zeros(n + 1)
    for macro in range(n_macro):
        span = min(dt, t_end - t_done)
        m_sub = n_sub if span == dt else max(1, int(math.ceil(span / h - 1e-12)))
        hh = span / m_sub
        for _ in range(m_sub):
            flux[1:n] = a_face * 0.5 * (p[:-1] + p[1:]) - (
                d_cent[1:] * p[1:] - d_cent[:-1] * p[:-1]
            ) / (2.0 * dx)
            p = p - (hh / dx) * np.diff(flux)
            neg = p < 0.0
            if neg.any():
                clip_events += int(neg.sum())
                p[neg] = 0.0
                s = p.sum() * dx
                if s > 0.0:
                    p *= mass0 / s
            steps += 1
        t_done += span

    mass_error = abs(p.sum() * dx - mass0)
    out = Grid1D(grid.lo, grid.hi, n, p)
    return FPResult(grid=out, clip_events=clip_events, mass_error=mass_error, steps=steps)


def window_fp_coefficients(
    rtt: float,
    lam: float,
    drift_form: str = "rtt",
) -> tuple[Callable, Callable]:
    """Drift/diffusion coefficient pair for the window density equation at a
    frozen marking intensity.

    drift_form selects which reciprocal feeds the growth term: "rtt" gives
    A = 1/T - x*lam/2, D = 1/T + x*lam/2; "window" gives A = 1/x - x*lam/2,
    D = 1/x + x*lam/2. Both callables accept position arrays.
    """
    if rtt <= 0.0:
        raise ConfigError(f"rtt must be positive, got {rtt}")
    if lam < 0.0:
        raise ConfigError(f"lam must be >= 0, got {lam}")
    if drift_form not in ("rtt", "window"):
        raise ConfigError(f"drift_form must be 'rtt' or 'window', got {drift_form!r}")
    if drift_form == "rtt":
        a_fn = lambda x: 1.0 / rtt - x * (lam / 2.0)
        d_fn = lambda x: 1.0 / rtt + x * (lam / 2.0)
    else:
        a_fn = lambda x: 1.0 / x - x * (lam / 2.0)
        d_fn = lambda x: 1.0 / x + x * (lam / 2.0)
    return a_fn, d_fn


def euler_maruyama_ensemble_1d(
    a_fn: Callable,
    d_sq_fn: Callable,
    x0,
    t_end: float,
    dt: float,
    n_traj: int,
    seed: int,
    lo: float | None = None,
    hi: float | None = None,
) -> np.ndarray:
    """Final positions of n_traj scalar SDE paths dx = A dt + sqrt(D) dV.

    x0 is a scalar or an array of n_traj starting points. Positions are
    clamped to [lo, hi] after every step when bounds are given, matching the
    reflecting walls of the density solver. One shared stream (one block of
    n_traj normals per step) keeps the run deterministic in (seed, n_traj,
    step count).
    """
    if t_end <= 0.0 or dt <= 0.0:
        raise ConfigError("t_end and dt must be positive")
    if n_traj < 1:
        raise ConfigError(f"n_traj must be >= 1, got {n_traj}")
    n_steps = max(1, int(round(t_end / dt)))
    x = np.full(n_traj, float(x0)) if np.isscalar(x0) else np.asarray(x0, float).copy()
    if x.shape != (n_traj,):
        raise ConfigError(f"x0 shape {x.shape} does not match n_traj={n_traj}")
    rng = np.random.default_rng(seed)
    sqrt_dt = math.sqrt(dt)
    for _ in range(n_steps):
        a = np.asarray(a_fn(x), dtype=float)
        d = np.asarray(d_sq_fn(x), dtype=float)
        if (d < 0.0).any():
            raise ConfigError("d_sq_fn returned negative values")
        x = x + a * dt + np.sqrt(d) * sqrt_dt * rng.standard_normal(n_traj)
        if lo is not None:
            x = np.maximum(x, lo)
        if hi is not None:
            x = np.minimum(x, hi)
    return x
