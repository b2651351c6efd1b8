"""Queue-trace comparison between the packet simulator and the fluid model.

Both inputs are time series of (t, Q, Q_hat). They are resampled
piecewise-constant onto a shared uniform grid covering their overlapping
range after a warmup cutoff, and the module reports relative L1/Linf errors
plus steady-state means. The second series is the reference in the relative
norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DisjointRangeError

__all__ = ["CompareReport", "compare_series", "render_compare", "summary_line"]


@dataclass(frozen=True)
class CompareReport:
    t_lo: float
    t_hi: float
    n_grid: int
    rel_l1_q: float
    rel_linf_q: float
    rel_l1_qhat: float
    rel_linf_qhat: float
    mean_q_a: float
    mean_q_b: float
    mean_qhat_a: float
    mean_qhat_b: float


def _resample(t: np.ndarray, v: np.ndarray, grid: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(t, grid, side="right") - 1
    return v[np.maximum(idx, 0)]


def _rel_norms(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Relative L1 and Linf of (a - b) against reference b."""
    diff = np.abs(a - b)
    ref_l1 = float(np.abs(b).mean())
    ref_inf = float(np.abs(b).max())
    l1 = float(diff.mean()) / ref_l1 if ref_l1 > 0.0 else (
        0.0 if diff.max() == 0.0 else math.inf
    )
    linf = float(diff.max()) / ref_inf if ref_inf > 0.0 else (
        0.0 if diff.max() == 0.0 else math.inf
    )
    return l1, linf


def compare_series(
    t_a: np.ndarray,
    q_a: np.ndarray,
    qh_a: np.ndarray,
    t_b: np.ndarray,
    q_b: np.ndarray,
    qh_b: np.ndarray,
    warmup: float = 0.0,
    grid_dt: float | None = None,
) -> CompareReport:
    """Compare series A (measured) against series B (reference).

    Raises DisjointRangeError when the post-warmup overlap is empty.
    """
    t_a = np.asarray(t_a, dtype=float)
    t_b = np.asarray(t_b, dtype=float)
    if len(t_a) == 0 or len(t_b) == 0:
        raise ConfigError("both series need at least one sample")
    if warmup < 0.0:
        raise ConfigError(f"warmup must be >= 0, got {warmup}")
    t_lo = max(float(t_a[0]), float(t_b[0]), warmup)
    t_hi = min(float(t_a[-1]), float(t_b[-1]))
    if not (t_hi > t_lo):
        raise DisjointRangeError(
            f"no overlapping time range after warmup: [{t_lo}, {t_hi}]"
        )
    if grid_dt is None:
        grid_dt = (t_hi - t_lo) / 512.0
    if grid_dt <= 0.0:
        raise ConfigError(f"grid_dt must be positive, got {grid_dt}")
    n = int(math.floor((t_hi - t_lo) / grid_dt + 1e-12)) + 1
    grid = t_lo + np.arange(n) * grid_dt

    qa = _resample(t_a, np.asarray(q_a, float), grid)
    qha = _resample(t_a, np.asarray(qh_a, float), grid)
    qb = _resample(t_b, np.asarray(q_b, float), grid)
    qhb = _resample(t_b, np.asarray(qh_b, float), grid)

    l1_q, linf_q = _rel_norms(qa, qb)
    l1_qh, linf_qh = _rel_norms(qha, qhb)
    return CompareReport(
        t_lo=t_lo,
        t_hi=t_hi,
        n_grid=n,
        rel_l1_q=l1_q,
        rel_linf_q=linf_q,
        rel_l1_qhat=l1_qh,
        rel_linf_qhat=linf_qh,
        mean_q_a=float(qa.mean()),
        mean_q_b=float(qb.mean()),
        mean_qhat_a=float(qha.mean()),
        mean_qhat_b=float(qhb.mean()),
    )


def render_compare(r: CompareReport) -> str:
    lines = [
        f"comparison window   [{r.t_lo:.6f}, {r.t_hi:.6f}] s ({r.n_grid} grid points)",
        f"Q    rel L1 = {r.rel_l1_q:.6f}   rel Linf = {r.rel_linf_q:.6f}",
        f"Qhat rel L1 = {r.rel_l1_qhat:.6f}   rel Linf = {r.rel_linf_qhat:.6f}",
        f"Q    mean   measured = {r.mean_q_a:.6f}   reference = {r.mean_q_b:.6f}",
        f"Qhat mean   measured = {r.mean_qhat_a:.6f}   reference = {r.mean_qhat_b:.6f}",
        summary_line(r),
    ]
    return "\n".join(lines) + "\n"


def summary_line(r: CompareReport) -> str:
    """Single machine-readable key=value line."""
    return (
        "summary: "
        f"rel_l1_q={r.rel_l1_q:.9g} rel_linf_q={r.rel_linf_q:.9g} "
        f"rel_l1_qhat={r.rel_l1_qhat:.9g} rel_linf_qhat={r.rel_linf_qhat:.9g} "
        f"mean_q_a={r.mean_q_a:.9g} mean_q_b={r.mean_q_b:.9g} "
        f"mean_qhat_a={r.mean_qhat_a:.9g} mean_qhat_b={r.mean_qhat_b:.9g} "
        f"n_grid={r.n_grid}"
    )
