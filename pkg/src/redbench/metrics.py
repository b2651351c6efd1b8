"""Packet-log decoding, QoS statistics, binned series, and text reports.

The log format is line-oriented text: a `#red-bench-log v1` magic line,
optionally more comment lines starting with '#', then one packet per line as
`flow seq size t_send t_recv` with `-` standing for a packet that never
arrived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ParseError

__all__ = [
    "LOG_MAGIC",
    "PacketLogEntry",
    "FlowReport",
    "DecodeResult",
    "BinnedSeries",
    "write_packet_log",
    "parse_packet_log",
    "decode",
    "binned_series",
    "render_report",
]

LOG_MAGIC = "#red-bench-log v1"


@dataclass(frozen=True)
class PacketLogEntry:
    """One sent packet as recorded by the receiver-side log."""

    flow: int
    seq: int
    size: int
    t_send: float
    t_recv: float | None

    def __post_init__(self) -> None:
        if self.size < 0:
            raise ConfigError(f"size must be >= 0, got {self.size}")
        if self.t_recv is not None and self.t_recv < self.t_send:
            raise ConfigError(
                f"t_recv {self.t_recv} precedes t_send {self.t_send} "
                f"(flow {self.flow} seq {self.seq})"
            )


@dataclass(frozen=True)
class FlowReport:
    """Statistics block for one flow, or for all flows pooled (flow None)."""

    flow: int | None
    n_flows: int
    total_time: float
    total_packets: int
    min_delay: float
    max_delay: float
    avg_delay: float
    avg_jitter: float
    delay_stddev: float
    bytes_received: int
    avg_bitrate: float
    avg_packet_rate: float
    sent: int
    dropped: int
    dropped_pct: float
    avg_loss_burst: float


@dataclass(frozen=True)
class DecodeResult:
    flows: list[FlowReport]
    total: FlowReport


def write_packet_log(
    entries: list[PacketLogEntry], comments: list[str] | None = None
) -> str:
    """Serialize entries, preceded by the magic line and optional comments."""
    lines = [LOG_MAGIC]
    for c in comments or []:
        lines.append(c if c.startswith("#") else "# " + c)
    for e in entries:
        recv = "-" if e.t_recv is None else repr(float(e.t_recv))
        lines.append(f"{e.flow} {e.seq} {e.size} {float(e.t_send)!r} {recv}")
    return "\n".join(lines) + "\n"


def parse_packet_log(text: str) -> list[PacketLogEntry]:
    """Parse log text. The first line must be the version magic; later lines
    starting with '#' are comments. Raises ParseError with line numbers."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != LOG_MAGIC:
        raise ParseError(f"line 1: expected log header {LOG_MAGIC!r}")
    entries: list[PacketLogEntry] = []
    for ln, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ParseError(
                f"line {ln}: expected 5 fields (flow seq size t_send t_recv), "
                f"got {len(parts)}"
            )
        try:
            flow, seq, size = int(parts[0]), int(parts[1]), int(parts[2])
            t_send = float(parts[3])
            t_recv = None if parts[4] == "-" else float(parts[4])
            entries.append(PacketLogEntry(flow, seq, size, t_send, t_recv))
        except ConfigError as exc:
            raise ParseError(f"line {ln}: {exc}") from None
        except ValueError:
            raise ParseError(f"line {ln}: malformed entry {line!r}") from None
    return entries


def _loss_runs(lost_seqs: list[int]) -> list[int]:
    """Lengths of maximal runs of consecutive sequence numbers."""
    runs: list[int] = []
    prev = None
    for s in lost_seqs:
        if prev is not None and s == prev + 1:
            runs[-1] += 1
        else:
            runs.append(1)
        prev = s
    return runs


def _stats(
    flow: int | None,
    n_flows: int,
    received: list[PacketLogEntry],
    sent: int,
    dropped: int,
    burst_runs: list[int],
) -> FlowReport:
    """Assemble one report block. `received` must already be in the pairing
    order used for jitter (seq order per flow, receive order pooled)."""
    n = len(received)
    if n > 0:
        delays = np.asarray([e.t_recv - e.t_send for e in received])
        t0 = min(e.t_send for e in received)
        t1 = max(e.t_recv for e in received)
        total_time = t1 - t0
        bytes_received = sum(e.size for e in received)
        min_d = float(delays.min())
        max_d = float(delays.max())
        avg_d = float(delays.mean())
        std_d = float(delays.std())
        jitter = float(np.abs(np.diff(delays)).mean()) if n > 1 else 0.0
    else:
        total_time = 0.0
        bytes_received = 0
        min_d = max_d = avg_d = std_d = jitter = 0.0
    if total_time > 0.0:
        bitrate = bytes_received * 8.0 / total_time / 1000.0
        pkt_rate = n / total_time
    else:
        bitrate = 0.0
        pkt_rate = 0.0
    pct = 100.0 * dropped / sent if sent > 0 else 0.0
    burst = sum(burst_runs) / len(burst_runs) if burst_runs else 0.0
    return FlowReport(
        flow=flow,
        n_flows=n_flows,
        total_time=total_time,
        total_packets=n,
        min_delay=min_d,
        max_delay=max_d,
        avg_delay=avg_d,
        avg_jitter=jitter,
        delay_stddev=std_d,
        bytes_received=bytes_received,
        avg_bitrate=bitrate,
        avg_packet_rate=pkt_rate,
        sent=sent,
        dropped=dropped,
        dropped_pct=pct,
        avg_loss_burst=burst,
    )


def decode(log: str | list[PacketLogEntry]) -> DecodeResult:
    """Compute per-flow reports and the pooled TOTAL report.

    Accepts log text or already-parsed entries. Per flow, delay and jitter
    run over received packets in sequence order; the TOTAL block pools every
    flow's packets into one stream ordered by receive time. Raises ParseError
    for malformed text or an entry-free log.
    """
    entries = parse_packet_log(log) if isinstance(log, str) else list(log)
    if not entries:
        raise ParseError("log contains no packet entries")

    flow_ids = sorted({e.flow for e in entries})
    reports: list[FlowReport] = []
    all_runs: list[int] = []
    for fid in flow_ids:
        mine = sorted((e for e in entries if e.flow == fid), key=lambda e: e.seq)
        received = [e for e in mine if e.t_recv is not None]
        lost = [e.seq for e in mine if e.t_recv is None]
        runs = _loss_runs(lost)
        all_runs.extend(runs)
        reports.append(
            _stats(fid, 1, received, sent=len(mine), dropped=len(lost), burst_runs=runs)
        )

    pooled = sorted(
        (e for e in entries if e.t_recv is not None),
        key=lambda e: (e.t_recv, e.flow, e.seq),
    )
    total = _stats(
        None,
        len(flow_ids),
        pooled,
        sent=len(entries),
        dropped=sum(1 for e in entries if e.t_recv is None),
        burst_runs=all_runs,
    )
    return DecodeResult(flows=reports, total=total)


@dataclass
class BinnedSeries:
    """Per-bin metric table: one column per flow plus the pooled aggregate."""

    metric: str
    bin_ms: float
    starts: np.ndarray
    flow_ids: list[int]
    columns: np.ndarray
    aggregate: np.ndarray


def binned_series(
    log: str | list[PacketLogEntry], bin_ms: float, metric: str
) -> BinnedSeries:
    """Bin received packets by arrival time and reduce each bin.

    metric "bitrate" gives bytes*8/bin_s/1000 (Kbit/s), "delay" the mean
    delay, "jitter" the mean |delay difference| of consecutive packets whose
    later member lands in the bin. Empty bins hold 0. The aggregate column
    treats all flows as a single receive-ordered stream.
    """
    if bin_ms <= 0.0:
        raise ConfigError(f"bin_ms must be positive, got {bin_ms}")
    if metric not in ("bitrate", "delay", "jitter"):
        raise ConfigError(f"metric must be bitrate, delay, or jitter, got {metric!r}")
    entries = parse_packet_log(log) if isinstance(log, str) else list(log)
    if not entries:
        raise ParseError("log contains no packet entries")

    flow_ids = sorted({e.flow for e in entries})
    received = [e for e in entries if e.t_recv is not None]
    bin_s = bin_ms / 1000.0
    if not received:
        return BinnedSeries(
            metric=metric,
            bin_ms=bin_ms,
            starts=np.zeros(0),
            flow_ids=flow_ids,
            columns=np.zeros((0, len(flow_ids))),
            aggregate=np.zeros(0),
        )

    b_lo = math.floor(min(e.t_recv for e in received) / bin_s)
    b_hi = math.floor(max(e.t_recv for e in received) / bin_s)
    n_bins = b_hi - b_lo + 1
    starts = (b_lo + np.arange(n_bins)) * bin_s

    def bin_of(t: float) -> int:
        return math.floor(t / bin_s) - b_lo

    def reduce_stream(stream: list[PacketLogEntry]) -> np.ndarray:
        col = np.zeros(n_bins)
        if metric == "bitrate":
            acc = np.zeros(n_bins)
            for e in stream:
                acc[bin_of(e.t_recv)] += e.size
            col = acc * 8.0 / bin_s / 1000.0
        elif metric == "delay":
            cnt = np.zeros(n_bins)
            for e in stream:
                b = bin_of(e.t_recv)
                col[b] += e.t_recv - e.t_send
                cnt[b] += 1
            col = np.divide(col, cnt, out=np.zeros(n_bins), where=cnt > 0)
        else:
            cnt = np.zeros(n_bins)
            for prev, cur in zip(stream, stream[1:]):
                b = bin_of(cur.t_recv)
                col[b] += abs(
                    (cur.t_recv - cur.t_send) - (prev.t_recv - prev.t_send)
                )
                cnt[b] += 1
            col = np.divide(col, cnt, out=np.zeros(n_bins), where=cnt > 0)
        return col

    columns = np.zeros((n_bins, len(flow_ids)))
    for j, fid in enumerate(flow_ids):
        stream = sorted(
            (e for e in received if e.flow == fid), key=lambda e: e.seq
        )
        columns[:, j] = reduce_stream(stream)
    pooled = sorted(received, key=lambda e: (e.t_recv, e.flow, e.seq))
    aggregate = reduce_stream(pooled)
    return BinnedSeries(
        metric=metric,
        bin_ms=bin_ms,
        starts=starts,
        flow_ids=flow_ids,
        columns=columns,
        aggregate=aggregate,
    )


_SEP = "|-----|"


def _field(name: str, value: str) -> str:
    pad = name.ljust(21)
    if not pad.endswith(" "):
        pad += " "
    return pad + "= " + value


def _stat_lines(r: FlowReport, total_block: bool) -> list[str]:
    lines = [
        _field("Total time", f"{r.total_time:.6f} s"),
        _field("Total packets", str(r.total_packets)),
        _field("Minimum delay", f"{r.min_delay:.6f} s"),
        _field("Maximum delay", f"{r.max_delay:.6f} s"),
        _field("Average delay", f"{r.avg_delay:.6f} s"),
        _field("Average jitter", f"{r.avg_jitter:.6f} s"),
        _field("Delay standard deviation", f"{r.delay_stddev:.6f} s"),
        _field("Bytes received", str(r.bytes_received)),
        _field("Average bitrate", f"{r.avg_bitrate:.6f} Kbit/s"),
        _field("Average packet rate", f"{r.avg_packet_rate:.6f} pkt/s"),
        _field("Packets dropped", f"{r.dropped} ({r.dropped_pct:.2f} %)"),
    ]
    if total_block and r.avg_loss_burst == 0.0:
        lines.append(_field("Average loss-burst size", "0 pkt"))
    else:
        lines.append(_field("Average loss-burst size", f"{r.avg_loss_burst:.6f} pkt"))
    return lines


def render_report(result: DecodeResult) -> str:
    """Render the per-flow blocks and the TOTAL block as fixed-layout text."""
    out: list[str] = []
    for r in result.flows:
        out.append(_SEP)
        out.append(f"Flow number: {r.flow}")
        out.append(_SEP)
        out.extend(_stat_lines(r, total_block=False))
    out.append(_SEP)
    out.append("***** TOTAL RESULTS *****")
    out.append(_SEP)
    out.append(_field("Number of flows", str(result.total.n_flows)))
    out.extend(_stat_lines(result.total, total_block=True))
    out.append(_field("Error lines", "0"))
    out.append(_SEP)
    return "\n".join(out) + "\n"
