"""Discrete-event simulation of sources feeding one bottleneck queue.

Topology is fixed: every flow sends into a single FIFO queue drained at the
link capacity, and delivered packets exit through a propagation delay. UDP
flows replay the departure schedules produced by the traffic module; TCP
flows are closed-loop with per-ACK window growth of 1/W and a halving on the
first loss detected per window. The queue runs either RED or DropTail.

Event ordering is a total order on (time, kind, flow, seq) with service
completions ranked before arrivals, which makes every run a pure function of
its configuration and seed.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .fluid import window_per_ack
from .red import DropCause, RedParams, RedState, ewma_update, red_decide
from .traffic import FlowSpec, generate_departures

__all__ = [
    "LinkConfig",
    "Packet",
    "TcpSourceState",
    "QueueTrace",
    "DropRecord",
    "SimResult",
    "run_simulation",
    "queue_timeseries",
]

_SERVICE_DONE = 0
_ARRIVAL = 1
_ACK = 2
_LOSS = 3


@dataclass(frozen=True)
class LinkConfig:
    """The bottleneck: capacity in bit/s, propagation delay, buffer in
    packets, and the queueing discipline ("red" or "droptail").

    header_bytes is charged per packet at service time on top of the payload;
    byte accounting elsewhere (logs, reports) stays payload-only.
    """

    capacity: float = 10_000_000.0
    prop_delay: float = 0.0
    buffer: int = 50
    discipline: str = "red"
    red: RedParams = field(default_factory=RedParams)
    header_bytes: int = 0

    def __post_init__(self) -> None:
        if self.capacity <= 0.0 or not math.isfinite(self.capacity):
            raise ConfigError(f"capacity must be positive bit/s, got {self.capacity}")
        if self.prop_delay < 0.0:
            raise ConfigError(f"prop_delay must be >= 0, got {self.prop_delay}")
        if self.buffer < 1:
            raise ConfigError(f"buffer must be >= 1 packet, got {self.buffer}")
        if self.discipline not in ("red", "droptail"):
            raise ConfigError(
                f"discipline must be 'red' or 'droptail', got {self.discipline!r}"
            )
        if self.header_bytes < 0:
            raise ConfigError(f"header_bytes must be >= 0, got {self.header_bytes}")


@dataclass
class Packet:
    """One sent packet. t_recv stays None for packets dropped (drop_cause
    tells why) or still inside the system when the run ends."""

    flow: int
    seq: int
    size: int
    t_send: float
    t_recv: float | None = None
    drop_cause: DropCause = DropCause.NONE


@dataclass
class TcpSourceState:
    """Closed-loop sender bookkeeping.

    rtt_base is the return-path delay: an acknowledgment (or loss signal)
    reaches the source that long after the packet is delivered (or dropped).
    recovery_seq marks the first sequence number of the current window; only
    a loss at or beyond it triggers a halving, so one congestion episode
    costs one halving, not one per lost packet.
    """

    window: float = 1.0
    rtt_base: float = 0.0
    in_flight: int = 0
    next_seq: int = 1
    recovery_seq: int = 1


@dataclass
class QueueTrace:
    """Event-resolution samples of (t, occupancy, averaged occupancy)."""

    t: np.ndarray
    q: np.ndarray
    q_hat: np.ndarray


@dataclass(frozen=True)
class DropRecord:
    t: float
    flow: int
    seq: int
    cause: DropCause
    occupancy: int


@dataclass
class SimResult:
    packets: list[Packet]
    trace: QueueTrace
    drops: list[DropRecord]
    tcp_state: dict[int, TcpSourceState]
    red_state: RedState
    n_sent: int
    n_delivered: int
    n_dropped: int
    n_in_system: int
    t_end: float
    seed: int


def run_simulation(
    flows: list[FlowSpec],
    link: LinkConfig,
    t_end: float,
    seed: int,
    tcp_rtt_base: float = 0.0,
    tcp_initial_window: float = 1.0,
) -> SimResult:
    """Run the event loop until t_end and return logs plus the queue trace.

    Flows are numbered 1..n in list order. Each flow draws from its own
    stream spawned from the seed, and the RED decision draws from one more,
    so per-flow schedules do not depend on how many flows share the run.
    tcp_rtt_base and tcp_initial_window apply to every TCP flow;
    tcp_rtt_base must be positive when any flow is TCP, because the loss
    notification comes tcp_rtt_base after the drop and a zero delay would
    let the send/drop/notify cycle repeat without advancing time.
    """
    if not flows:
        raise ConfigError("need at least one flow")
    if t_end <= 0.0:
        raise ConfigError(f"t_end must be positive, got {t_end}")
    if seed < 0:
        raise ConfigError(f"seed must be >= 0, got {seed}")
    if tcp_rtt_base < 0.0:
        raise ConfigError(f"tcp_rtt_base must be >= 0, got {tcp_rtt_base}")
    if tcp_rtt_base == 0.0 and any(f.transport == "TCP" for f in flows):
        raise ConfigError(
            "tcp_rtt_base must be positive when TCP flows are present: "
            "with zero feedback delay a loss triggers sends, drops, and "
            "loss notifications at a single instant and simulated time "
            "cannot advance"
        )
    if tcp_initial_window < 1.0:
        raise ConfigError(
            f"tcp_initial_window must be >= 1, got {tcp_initial_window}"
        )

    n_flows = len(flows)
    root = np.random.SeedSequence(seed)
    streams = root.spawn(n_flows + 1)
    rng_red = np.random.default_rng(streams[n_flows])

    is_red = link.discipline == "red"
    red_params = link.red
    state = RedState()
    buffer = link.buffer
    w_q = red_params.w_q
    prop = link.prop_delay
    capacity = link.capacity
    header = link.header_bytes

    # Per-flow structures, indexed by flow id 1..n.
    schedules: dict[int, list[tuple[float, int]]] = {}
    sched_pos: dict[int, int] = {}
    tcp: dict[int, TcpSourceState] = {}
    payloads: dict[int, int] = {}
    durations: dict[int, float] = {}

    heap: list[tuple[float, int, int, int]] = []
    packets: list[Packet] = []
    drops: list[DropRecord] = []
    trace_t: list[float] = [0.0]
    trace_q: list[int] = [0]
    trace_qh: list[float] = [0.0]

    fifo: deque[Packet] = deque()
    occupancy = 0
    busy = False

    def push(t: float, kind: int, flow: int, seq: int) -> None:
        heapq.heappush(heap, (t, kind, flow, seq))

    def tcp_send(fid: int, now: float) -> None:
        src = tcp[fid]
        if now >= durations[fid]:
            return
        while src.in_flight < src.window:
            push(now, _ARRIVAL, fid, src.next_seq)
            src.in_flight += 1
            src.next_seq += 1

    for idx, spec in enumerate(flows):
        fid = idx + 1
        payloads[fid] = spec.payload
        durations[fid] = spec.duration_s
        if spec.transport == "TCP":
            tcp[fid] = TcpSourceState(
                window=tcp_initial_window, rtt_base=tcp_rtt_base
            )
            tcp_send(fid, 0.0)
        else:
            sched = generate_departures(spec, streams[idx])
            schedules[fid] = sched
            sched_pos[fid] = 0
            if sched:
                push(sched[0][0], _ARRIVAL, fid, 1)

    def sample(now: float) -> None:
        trace_t.append(now)
        trace_q.append(occupancy)
        trace_qh.append(state.avg_queue)

    def start_service(now: float) -> Packet:
        pkt = fifo.popleft()
        done = now + (pkt.size + header) * 8.0 / capacity
        push(done, _SERVICE_DONE, pkt.flow, pkt.seq)
        return pkt

    in_service: Packet | None = None

    while heap and heap[0][0] <= t_end:
        now, kind, fid, seq = heapq.heappop(heap)

        if kind == _SERVICE_DONE:
            pkt = in_service
            occupancy -= 1
            state.occupancy = occupancy
            pkt.t_recv = now + prop
            sample(now)
            if fid in tcp:
                push(pkt.t_recv + tcp[fid].rtt_base, _ACK, fid, seq)
            in_service = start_service(now) if fifo else None
            busy = in_service is not None

        elif kind == _ARRIVAL:
            if fid in tcp:
                size = payloads[fid]
            else:
                pos = sched_pos[fid]
                size = schedules[fid][pos][1]
                sched_pos[fid] = pos + 1
                nxt = sched_pos[fid]
                if nxt < len(schedules[fid]):
                    push(schedules[fid][nxt][0], _ARRIVAL, fid, nxt + 1)
            pkt = Packet(flow=fid, seq=seq, size=size, t_send=now)
            packets.append(pkt)

            state.avg_queue = ewma_update(state.avg_queue, occupancy, w_q)
            state.occupancy = occupancy
            if is_red:
                decision = red_decide(state, red_params, rng_red.random(), buffer)
                dropped = decision.drop
                cause = decision.cause
            else:
                dropped = occupancy >= buffer
                cause = DropCause.TAIL if dropped else DropCause.NONE

            if dropped:
                pkt.drop_cause = cause
                drops.append(DropRecord(now, fid, seq, cause, occupancy))
                sample(now)
                if fid in tcp:
                    push(now + tcp[fid].rtt_base, _LOSS, fid, seq)
            else:
                occupancy += 1
                state.occupancy = occupancy
                fifo.append(pkt)
                sample(now)
                if not busy:
                    in_service = start_service(now)
                    busy = True

        elif kind == _ACK:
            src = tcp[fid]
            src.in_flight -= 1
            src.window = window_per_ack(src.window)
            tcp_send(fid, now)

        else:  # _LOSS
            src = tcp[fid]
            src.in_flight -= 1
            if seq >= src.recovery_seq:
                src.window = max(1.0, src.window / 2.0)
                src.recovery_seq = src.next_seq
            tcp_send(fid, now)

    n_delivered = sum(1 for p in packets if p.t_recv is not None)
    n_dropped = sum(1 for p in packets if p.drop_cause is not DropCause.NONE)
    trace = QueueTrace(
        t=np.asarray(trace_t),
        q=np.asarray(trace_q, dtype=float),
        q_hat=np.asarray(trace_qh),
    )
    return SimResult(
        packets=packets,
        trace=trace,
        drops=drops,
        tcp_state=tcp,
        red_state=state,
        n_sent=len(packets),
        n_delivered=n_delivered,
        n_dropped=n_dropped,
        n_in_system=len(packets) - n_delivered - n_dropped,
        t_end=t_end,
        seed=seed,
    )


def queue_timeseries(
    trace: QueueTrace, sample_dt: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Resample the event trace onto a uniform grid, piecewise-constant.

    Grid points are k*sample_dt from 0 through the last event time; each
    carries the most recent event values at or before it. Returns (times,
    occupancy, averaged occupancy).
    """
    if sample_dt <= 0.0:
        raise ConfigError(f"sample_dt must be positive, got {sample_dt}")
    if len(trace.t) == 0:
        raise ConfigError("queue trace is empty")
    t_last = float(trace.t[-1])
    n = int(math.floor(t_last / sample_dt + 1e-12)) + 1
    times = np.arange(n) * sample_dt
    idx = np.searchsorted(trace.t, times, side="right") - 1
    idx = np.maximum(idx, 0)
    return times, trace.q[idx], trace.q_hat[idx]
