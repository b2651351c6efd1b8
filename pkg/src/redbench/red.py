"""Random Early Detection: averaging and drop law.

Pure scalar functions over plain floats. The packet simulator calls these once
per arrival, so everything here avoids numpy and allocation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import ConfigError

__all__ = [
    "DropCause",
    "RedParams",
    "RedState",
    "RedDecision",
    "ewma_update",
    "continuous_ewma_rate",
    "drop_probability",
    "red_decide",
]


class DropCause(enum.Enum):
    """Why a packet left the system early (or did not)."""

    NONE = "none"
    RED = "red"
    TAIL = "tail"


@dataclass(frozen=True)
class RedParams:
    """Parameters of the averaging and drop law.

    q_min, q_max  thresholds of the linear ramp, in packets
    p_max         drop probability at the top of the ramp
    w_q           EWMA weight applied per arrival
    use_count     apply the count adjustment p_a = p_b / (1 - count * p_b),
                  so inter-drop gaps become uniform rather than geometric
    """

    q_min: float = 5.0
    q_max: float = 15.0
    p_max: float = 0.1
    w_q: float = 0.002
    use_count: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.q_min < self.q_max):
            raise ConfigError(
                f"need 0 <= q_min < q_max, got q_min={self.q_min}, q_max={self.q_max}"
            )
        if not (0.0 < self.p_max <= 1.0):
            raise ConfigError(f"p_max must be in (0, 1], got {self.p_max}")
        if not (0.0 < self.w_q <= 1.0):
            raise ConfigError(f"w_q must be in (0, 1], got {self.w_q}")


@dataclass
class RedState:
    """Mutable per-queue state: the average, the post-drop counter, occupancy."""

    avg_queue: float = 0.0
    count: int = 0
    occupancy: int = 0


@dataclass(frozen=True)
class RedDecision:
    """Outcome of one arrival: drop or enqueue, why, and the probability used."""

    drop: bool
    cause: DropCause
    prob: float


def ewma_update(q_hat: float, q: float, w_q: float) -> float:
    """One averaging step: q_hat <- (1 - w_q) * q_hat + w_q * q."""
    if not (0.0 < w_q <= 1.0):
        raise ConfigError(f"w_q must be in (0, 1], got {w_q}")
    return (1.0 - w_q) * q_hat + w_q * q


def continuous_ewma_rate(q_hat: float, q: float, w_q: float, capacity: float) -> float:
    """Rate form of the averaging law: d(q_hat)/dt when updates arrive at
    line rate, i.e. one per service time 1/capacity.

    Returns w_q * capacity * (q - q_hat).
    """
    if not (0.0 < w_q <= 1.0):
        raise ConfigError(f"w_q must be in (0, 1], got {w_q}")
    if capacity <= 0.0:
        raise ConfigError(f"capacity must be positive, got {capacity}")
    return w_q * capacity * (q - q_hat)


def drop_probability(q_hat: float, params: RedParams) -> float:
    """Piecewise-linear drop law.

    0 below q_min, a linear ramp up to p_max at q_max, and 1 at or above q_max.
    """
    if q_hat < params.q_min:
        return 0.0
    if q_hat >= params.q_max:
        return 1.0
    return params.p_max * (q_hat - params.q_min) / (params.q_max - params.q_min)


def red_decide(
    state: RedState,
    params: RedParams,
    u: float,
    buffer: int,
) -> RedDecision:
    """Decide the fate of one arriving packet and update bookkeeping.

    `state.avg_queue` must already reflect this arrival (callers apply
    ewma_update first). `u` is a uniform [0, 1) draw supplied by the caller so
    that random streams stay under the caller's control. `buffer` is the hard
    occupancy limit; a full queue forces a tail drop regardless of the law.

    Mutates `state.count` (packets enqueued since the last drop; reset to 0 on
    any drop and whenever the law is inactive) and returns the decision.
    Occupancy itself is owned by the caller.
    """
    if not (0.0 <= u < 1.0):
        raise ConfigError(f"u must be in [0, 1), got {u}")
    if buffer < 1:
        raise ConfigError(f"buffer must be >= 1, got {buffer}")

    if state.occupancy >= buffer:
        state.count = 0
        return RedDecision(drop=True, cause=DropCause.TAIL, prob=1.0)

    p_b = drop_probability(state.avg_queue, params)
    if p_b <= 0.0:
        state.count = 0
        return RedDecision(drop=False, cause=DropCause.NONE, prob=0.0)
    if p_b >= 1.0:
        state.count = 0
        return RedDecision(drop=True, cause=DropCause.RED, prob=1.0)

    if params.use_count:
        denom = 1.0 - state.count * p_b
        p = p_b / denom if denom > 0.0 else 1.0
        if p > 1.0:
            p = 1.0
    else:
        p = p_b

    if u < p:
        state.count = 0
        return RedDecision(drop=True, cause=DropCause.RED, prob=p)
    state.count += 1
    return RedDecision(drop=False, cause=DropCause.NONE, prob=p)
