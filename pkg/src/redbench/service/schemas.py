"""Request/response bodies for the workbench service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel

from ..fluid import FluidParams, FluidState, MarkingProcess
from ..red import RedParams
from ..sim import LinkConfig


class RedConfig(BaseModel):
    q_min: float = 5.0
    q_max: float = 15.0
    p_max: float = 0.1
    w_q: float = 0.002
    use_count: bool = False

    def to_params(self) -> RedParams:
        return RedParams(
            q_min=self.q_min,
            q_max=self.q_max,
            p_max=self.p_max,
            w_q=self.w_q,
            use_count=self.use_count,
        )


class LinkBody(BaseModel):
    capacity: float = 10_000_000.0
    prop_delay: float = 0.0
    buffer: int = 50
    discipline: Literal["red", "droptail"] = "red"
    header_bytes: int = 0

    def to_config(self, red: RedParams) -> LinkConfig:
        return LinkConfig(
            capacity=self.capacity,
            prop_delay=self.prop_delay,
            buffer=self.buffer,
            discipline=self.discipline,
            red=red,
            header_bytes=self.header_bytes,
        )


class SimRequest(BaseModel):
    script: str
    link: LinkBody = LinkBody()
    red: RedConfig = RedConfig()
    seed: int = 1
    t_end: float | None = None
    tcp_rtt_base: float = 0.0
    tcp_initial_window: float = 1.0


class SimResponse(BaseModel):
    recv_log: str
    queue_dat: str
    sent: int
    delivered: int
    dropped: int
    in_system: int


class DecodeRequest(BaseModel):
    log: str
    bitrate_ms: float | None = None
    delay_ms: float | None = None
    jitter_ms: float | None = None


class DecodeResponse(BaseModel):
    report: str
    bitrate_dat: str | None = None
    delay_dat: str | None = None
    jitter_dat: str | None = None


class FluidRequest(BaseModel):
    mode: Literal["det", "sde", "fp"]
    rtt: float = 0.1
    capacity: float = 100.0
    w_q: float = 0.002
    red: RedConfig = RedConfig()
    buffer: float = 50.0
    noise: bool = True
    marking: bool = True
    marking_mode: Literal["expected", "poisson"] = "expected"
    t_end: float = 20.0
    dt: float | None = None
    seed: int = 1
    n_traj: int = 1000
    save_trajectories: int = 0
    init_w: float = 1.0
    init_q: float = 0.0
    init_qhat: float = 0.0
    fp_lo: float = 1.0
    fp_hi: float = 30.0
    fp_n: int = 96
    fp_mu: float = 10.0
    fp_sigma: float = 1.5
    fp_lam: float = 2.0
    fp_drift_form: Literal["rtt", "window"] = "rtt"
    fp_dt: float = 0.001

    def to_params(self, force_deterministic: bool) -> FluidParams:
        noise = self.noise and not force_deterministic
        mode = "expected" if force_deterministic else self.marking_mode
        return FluidParams(
            rtt=self.rtt,
            capacity=self.capacity,
            w_q=self.w_q,
            red=self.red.to_params(),
            buffer=self.buffer,
            noise_enabled=noise,
            marking_enabled=self.marking,
            marking=MarkingProcess(mode=mode),
        )

    def initial_state(self) -> FluidState:
        return FluidState(w=self.init_w, q=self.init_q, q_hat=self.init_qhat)


class FluidResponse(BaseModel):
    files: dict[str, str]
    summary: dict[str, float]


class CompareRequest(BaseModel):
    packet_dat: str
    fluid_dat: str
    warmup: float = 0.0
    grid_dt: float | None = None


class CompareResponse(BaseModel):
    report: str
    summary: str
    metrics: dict[str, float]
