"""FastAPI application exposing the workbench operations.

Each endpoint is a pure transformation: file contents go in as strings,
result files come back as strings, and nothing is stored server-side. All
domain validation errors surface as HTTP 422 with the original message.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import FastAPI, HTTPException

from ..compare import compare_series, render_compare, summary_line
from ..errors import RedbenchError
from ..files import format_config, format_dat, parse_dat
from ..fluid import (
    Grid1D,
    simulate_fluid,
    solve_fokker_planck_1d,
    window_fp_coefficients,
)
from ..metrics import (
    PacketLogEntry,
    binned_series,
    decode,
    parse_packet_log,
    render_report,
    write_packet_log,
)
from ..red import DropCause
from ..sim import run_simulation
from ..traffic import parse_flow_script
from .schemas import (
    CompareRequest,
    CompareResponse,
    DecodeRequest,
    DecodeResponse,
    FluidRequest,
    FluidResponse,
    SimRequest,
    SimResponse,
)


def _red_config_items(red) -> list[tuple[str, object]]:
    return [
        ("q_min", red.q_min),
        ("q_max", red.q_max),
        ("p_max", red.p_max),
        ("w_q", red.w_q),
        ("use_count", red.use_count),
    ]


def create_app() -> FastAPI:
    app = FastAPI(title="redbench", version="0.1.0")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/sim", response_model=SimResponse)
    def sim(req: SimRequest) -> SimResponse:
        try:
            flows = parse_flow_script(req.script)
            if not flows:
                raise HTTPException(422, "flow script defines no flows")
            t_end = req.t_end
            if t_end is None:
                t_end = max(f.duration_s for f in flows)
            link = req.link.to_config(req.red.to_params())
            result = run_simulation(
                flows,
                link,
                t_end,
                req.seed,
                tcp_rtt_base=req.tcp_rtt_base,
                tcp_initial_window=req.tcp_initial_window,
            )
        except RedbenchError as exc:
            raise HTTPException(422, str(exc)) from exc

        config: dict = {
            "cmd": "sim",
            "seed": req.seed,
            "t_end": t_end,
            "capacity": req.link.capacity,
            "prop_delay": req.link.prop_delay,
            "buffer": req.link.buffer,
            "discipline": req.link.discipline,
            "header_bytes": req.link.header_bytes,
        }
        config.update(_red_config_items(req.red))
        config["tcp_rtt_base"] = req.tcp_rtt_base
        config["tcp_initial_window"] = req.tcp_initial_window
        config["flows"] = len(flows)

        entries = [
            PacketLogEntry(p.flow, p.seq, p.size, p.t_send, p.t_recv)
            for p in result.packets
            if p.t_recv is not None or p.drop_cause is not DropCause.NONE
        ]
        recv_log = write_packet_log(entries, comments=[format_config(config)])
        queue_dat = format_dat(
            ["t", "Q", "Qhat"],
            np.column_stack([result.trace.t, result.trace.q, result.trace.q_hat]),
            config,
        )
        return SimResponse(
            recv_log=recv_log,
            queue_dat=queue_dat,
            sent=result.n_sent,
            delivered=result.n_delivered,
            dropped=result.n_dropped,
            in_system=result.n_in_system,
        )

    @app.post("/decode", response_model=DecodeResponse)
    def decode_ep(req: DecodeRequest) -> DecodeResponse:
        try:
            entries = parse_packet_log(req.log)
            result = decode(entries)
            report = render_report(result)
            dats: dict[str, str | None] = {
                "bitrate": None,
                "delay": None,
                "jitter": None,
            }
            for metric, bin_ms in (
                ("bitrate", req.bitrate_ms),
                ("delay", req.delay_ms),
                ("jitter", req.jitter_ms),
            ):
                if bin_ms is None:
                    continue
                table = binned_series(entries, bin_ms, metric)
                names = (
                    ["t"]
                    + [f"flow{fid}" for fid in table.flow_ids]
                    + ["aggregate"]
                )
                data = np.column_stack(
                    [table.starts, table.columns, table.aggregate]
                )
                dats[metric] = format_dat(
                    names,
                    data,
                    {"cmd": "decode", "metric": metric, "bin_ms": bin_ms},
                )
        except RedbenchError as exc:
            raise HTTPException(422, str(exc)) from exc
        return DecodeResponse(
            report=report,
            bitrate_dat=dats["bitrate"],
            delay_dat=dats["delay"],
            jitter_dat=dats["jitter"],
        )

    @app.post("/fluid", response_model=FluidResponse)
    def fluid_ep(req: FluidRequest) -> FluidResponse:
        try:
            return _run_fluid(req)
        except RedbenchError as exc:
            raise HTTPException(422, str(exc)) from exc

    @app.post("/compare", response_model=CompareResponse)
    def compare_ep(req: CompareRequest) -> CompareResponse:
        try:
            def pull(text: str, label: str):
                names, data = parse_dat(text)
                for col in ("t", "Q", "Qhat"):
                    if col not in names:
                        raise HTTPException(
                            422, f"{label} input lacks column {col!r}"
                        )
                if data.shape[0] == 0:
                    raise HTTPException(422, f"{label} input has no data rows")
                return (
                    data[:, names.index("t")],
                    data[:, names.index("Q")],
                    data[:, names.index("Qhat")],
                )

            t_a, q_a, qh_a = pull(req.packet_dat, "measured")
            t_b, q_b, qh_b = pull(req.fluid_dat, "reference")
            r = compare_series(
                t_a, q_a, qh_a, t_b, q_b, qh_b, req.warmup, req.grid_dt
            )
        except RedbenchError as exc:
            raise HTTPException(422, str(exc)) from exc
        metrics = {
            "rel_l1_q": r.rel_l1_q,
            "rel_linf_q": r.rel_linf_q,
            "rel_l1_qhat": r.rel_l1_qhat,
            "rel_linf_qhat": r.rel_linf_qhat,
            "mean_q_a": r.mean_q_a,
            "mean_q_b": r.mean_q_b,
            "mean_qhat_a": r.mean_qhat_a,
            "mean_qhat_b": r.mean_qhat_b,
        }
        return CompareResponse(
            report=render_compare(r), summary=summary_line(r), metrics=metrics
        )

    return app


def _run_fluid(req: FluidRequest) -> FluidResponse:
    config: dict = {
        "cmd": "fluid",
        "mode": req.mode,
        "seed": req.seed,
        "rtt": req.rtt,
        "capacity": req.capacity,
        "w_q": req.w_q,
        "buffer": req.buffer,
        "noise": req.noise,
        "marking": req.marking,
        "marking_mode": req.marking_mode,
        "t_end": req.t_end,
    }
    config.update(_red_config_items(req.red))

    if req.mode == "fp":
        config.update(
            fp_lo=req.fp_lo,
            fp_hi=req.fp_hi,
            fp_n=req.fp_n,
            fp_mu=req.fp_mu,
            fp_sigma=req.fp_sigma,
            fp_lam=req.fp_lam,
            fp_drift_form=req.fp_drift_form,
            fp_dt=req.fp_dt,
        )
        grid = Grid1D.from_pdf(
            req.fp_lo,
            req.fp_hi,
            req.fp_n,
            lambda x: np.exp(-0.5 * ((x - req.fp_mu) / req.fp_sigma) ** 2),
        )
        a_fn, d_fn = window_fp_coefficients(req.rtt, req.fp_lam, req.fp_drift_form)
        res = solve_fokker_planck_1d(grid, a_fn, d_fn, req.fp_dt, req.t_end)
        density = format_dat(
            ["x", "density"],
            np.column_stack([res.grid.centers, res.grid.density]),
            config,
        )
        return FluidResponse(
            files={"density.dat": density},
            summary={
                "mass": res.grid.mass,
                "mass_error": res.mass_error,
                "clip_events": float(res.clip_events),
                "steps": float(res.steps),
            },
        )

    det = req.mode == "det"
    params = req.to_params(force_deterministic=det)
    dt = req.dt if req.dt is not None else params.rtt / 100.0
    config["dt"] = dt
    n_traj = 1 if det else req.n_traj
    config["n_traj"] = n_traj
    config.update(init_w=req.init_w, init_q=req.init_q, init_qhat=req.init_qhat)
    n_save = 1 if det else min(req.save_trajectories, n_traj)
    ens = simulate_fluid(
        params,
        req.t_end,
        dt,
        req.seed,
        n_traj,
        init=req.initial_state(),
        save_trajectories=n_save,
    )

    files: dict[str, str] = {}
    cols = ["t", "W", "Q", "Qhat"]
    if det:
        data = np.column_stack([ens.times, ens.trajectories[0]])
        files["trajectory.dat"] = format_dat(cols, data, config)
    else:
        files["mean.dat"] = format_dat(
            cols, np.column_stack([ens.times, ens.mean]), config
        )
        files["var.dat"] = format_dat(
            cols, np.column_stack([ens.times, ens.var]), config
        )
        for i in range(n_save):
            files[f"traj{i + 1}.dat"] = format_dat(
                cols, np.column_stack([ens.times, ens.trajectories[i]]), config
            )
    final = ens.mean[-1]
    return FluidResponse(
        files=files,
        summary={"final_w": final[0], "final_q": final[1], "final_qhat": final[2]},
    )
