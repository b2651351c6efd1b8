"""Command line front end for the workbench.

Every subcommand is a thin client over the HTTP service: it reads input
files, builds a JSON request, posts it to the service, and writes the
returned text files. By default the request is served in process through
an ASGI transport, so no server needs to be running; pass --server to
talk to a remote instance instead.

Exit codes: 0 on success, 1 on usage errors (bad flags, unknown config
keys), 2 on runtime errors (missing files, parse failures, rejected
requests).
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from pathlib import Path
from typing import Any

import httpx

_UNSET = object()


class _UsageError(Exception):
    """Bad invocation: wrong flags or config keys. Maps to exit code 1."""


class _RunError(Exception):
    """Failure while executing a valid invocation. Maps to exit code 2."""


def _to_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise _UsageError(f"invalid boolean value {text!r}")


def _read_config(path: str) -> dict[str, str]:
    """Parse a key=value config file. Blank lines and # comments allowed."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _UsageError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise _UsageError(
                f"{path}:{lineno}: expected key=value, got {raw!r}"
            )
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve(args: argparse.Namespace, spec: dict[str, tuple]) -> None:
    """Fill unset options from the config file, then from defaults.

    Flags always win over the config file; the config file wins over the
    built-in defaults. Unknown config keys are a usage error.
    """
    cfg = _read_config(args.config) if args.config else {}
    unknown = set(cfg) - set(spec)
    if unknown:
        raise _UsageError(
            "unknown config keys: " + ", ".join(sorted(unknown))
        )
    for dest, (default, conv) in spec.items():
        if getattr(args, dest) is _UNSET:
            if dest in cfg:
                try:
                    setattr(args, dest, conv(cfg[dest]))
                except ValueError as exc:
                    raise _UsageError(
                        f"config key {dest}: {exc}"
                    ) from exc
            else:
                setattr(args, dest, default)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _RunError(f"cannot read {path}: {exc}") from exc


def _ensure_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text, newline="\n")


def _post(server: str | None, path: str, payload: dict[str, Any]) -> dict:
    """Post a request, in process when no server URL is given."""
    if server is None:
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())

        async def go() -> httpx.Response:
            async with httpx.AsyncClient(
                transport=transport,
                base_url="http://redbench.internal",
                timeout=None,
            ) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(go())
    else:
        try:
            resp = httpx.post(
                server.rstrip("/") + path, json=payload, timeout=None
            )
        except httpx.HTTPError as exc:
            raise _RunError(f"request to {server} failed: {exc}") from exc
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise _RunError(f"{path} returned {resp.status_code}: {detail}")
    return resp.json()


# Option tables: dest -> (default, converter for config-file strings).
# Positionals, --config, and --server are handled outside these tables.

_SIM_SPEC: dict[str, tuple] = {
    "out": (".", str),
    "seed": (1, int),
    "t_end": (None, float),
    "capacity": (10_000_000.0, float),
    "prop_delay": (0.0, float),
    "buffer": (50, int),
    "discipline": ("red", str),
    "header_bytes": (0, int),
    "qmin": (5.0, float),
    "qmax": (15.0, float),
    "pmax": (0.1, float),
    "wq": (0.002, float),
    "use_count": (False, _to_bool),
    "tcp_rtt_base": (0.0, float),
    "tcp_initial_window": (1.0, float),
}

_DECODE_SPEC: dict[str, tuple] = {
    "out": (".", str),
    "bitrate": (None, float),
    "delay": (None, float),
    "jitter": (None, float),
}

_FLUID_SPEC: dict[str, tuple] = {
    "out": (".", str),
    "rtt": (0.1, float),
    "capacity": (100.0, float),
    "wq": (0.002, float),
    "qmin": (5.0, float),
    "qmax": (15.0, float),
    "pmax": (0.1, float),
    "red_use_count": (False, _to_bool),
    "buffer": (50.0, float),
    "no_noise": (False, _to_bool),
    "no_marking": (False, _to_bool),
    "marking_mode": ("expected", str),
    "t_end": (20.0, float),
    "dt": (None, float),
    "seed": (1, int),
    "n_traj": (1000, int),
    "save_trajectories": (0, int),
    "init_w": (1.0, float),
    "init_q": (0.0, float),
    "init_qhat": (0.0, float),
    "fp_lo": (1.0, float),
    "fp_hi": (30.0, float),
    "fp_n": (96, int),
    "fp_mu": (10.0, float),
    "fp_sigma": (1.5, float),
    "fp_lam": (2.0, float),
    "fp_drift_form": ("rtt", str),
    "fp_dt": (0.001, float),
}

_COMPARE_SPEC: dict[str, tuple] = {
    "out": (None, str),
    "warmup": (0.0, float),
    "grid_dt": (None, float),
}


def _opt(parser: argparse.ArgumentParser, *names: str, **kwargs: Any) -> None:
    kwargs.setdefault("default", _UNSET)
    parser.add_argument(*names, **kwargs)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        default=None,
        metavar="FILE",
        help="key=value defaults file; explicit flags win",
    )
    parser.add_argument(
        "--server",
        default=None,
        metavar="URL",
        help="send the request to a running service instead of in process",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="redbench",
        description=(
            "Workbench for RED queue management: packet simulation, "
            "log decoding, fluid-model integration, and comparison."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser(
        "sim", help="run the packet simulator on a flow script"
    )
    p_sim.add_argument("script", help="flow script path")
    _opt(p_sim, "--out", metavar="DIR", help="output directory (default .)")
    _opt(p_sim, "--seed", type=int)
    _opt(p_sim, "--t-end", type=float, help="simulation horizon in seconds")
    _opt(p_sim, "--capacity", type=float, help="link rate in bit/s")
    _opt(p_sim, "--prop-delay", type=float, help="propagation delay in s")
    _opt(p_sim, "--buffer", type=int, help="queue capacity in packets")
    _opt(p_sim, "--discipline", choices=("red", "droptail"))
    _opt(p_sim, "--header-bytes", type=int)
    _opt(p_sim, "--qmin", type=float)
    _opt(p_sim, "--qmax", type=float)
    _opt(p_sim, "--pmax", type=float)
    _opt(p_sim, "--wq", type=float)
    _opt(p_sim, "--use-count", action="store_true")
    _opt(p_sim, "--tcp-rtt-base", type=float)
    _opt(p_sim, "--tcp-initial-window", type=float)
    _add_common(p_sim)
    p_sim.set_defaults(func=_cmd_sim)

    p_dec = sub.add_parser(
        "decode", help="decode a packet log into a QoS report"
    )
    p_dec.add_argument("log", help="packet log path")
    _opt(p_dec, "-b", "--bitrate", type=float, metavar="MS",
         help="write bitrate.dat with this bin width in ms")
    _opt(p_dec, "-d", "--delay", type=float, metavar="MS",
         help="write delay.dat with this bin width in ms")
    _opt(p_dec, "-j", "--jitter", type=float, metavar="MS",
         help="write jitter.dat with this bin width in ms")
    _opt(p_dec, "--out", metavar="DIR")
    _add_common(p_dec)
    p_dec.set_defaults(func=_cmd_decode)

    p_fl = sub.add_parser(
        "fluid", help="integrate the fluid model or its density equation"
    )
    p_fl.add_argument("mode", choices=("det", "sde", "fp"))
    _opt(p_fl, "--out", metavar="DIR")
    _opt(p_fl, "--rtt", type=float)
    _opt(p_fl, "--capacity", type=float, help="service rate in packets/s")
    _opt(p_fl, "--wq", type=float)
    _opt(p_fl, "--qmin", type=float)
    _opt(p_fl, "--qmax", type=float)
    _opt(p_fl, "--pmax", type=float)
    _opt(p_fl, "--red-use-count", action="store_true")
    _opt(p_fl, "--buffer", type=float)
    _opt(p_fl, "--no-noise", action="store_true")
    _opt(p_fl, "--no-marking", action="store_true")
    _opt(p_fl, "--marking-mode", choices=("expected", "poisson"))
    _opt(p_fl, "--t-end", type=float)
    _opt(p_fl, "--dt", type=float)
    _opt(p_fl, "--seed", type=int)
    _opt(p_fl, "--n-traj", type=int)
    _opt(p_fl, "--save-trajectories", type=int)
    _opt(p_fl, "--init-w", type=float)
    _opt(p_fl, "--init-q", type=float)
    _opt(p_fl, "--init-qhat", type=float)
    _opt(p_fl, "--fp-lo", type=float)
    _opt(p_fl, "--fp-hi", type=float)
    _opt(p_fl, "--fp-n", type=int)
    _opt(p_fl, "--fp-mu", type=float)
    _opt(p_fl, "--fp-sigma", type=float)
    _opt(p_fl, "--fp-lam", type=float)
    _opt(p_fl, "--fp-drift-form", choices=("rtt", "window"))
    _opt(p_fl, "--fp-dt", type=float)
    _add_common(p_fl)
    p_fl.set_defaults(func=_cmd_fluid)

    p_cmp = sub.add_parser(
        "compare", help="compare packet and fluid queue trajectories"
    )
    p_cmp.add_argument("packet_dat", help="packet queue table path")
    p_cmp.add_argument("fluid_dat", help="fluid trajectory table path")
    _opt(p_cmp, "--warmup", type=float, help="seconds to discard up front")
    _opt(p_cmp, "--grid-dt", type=float)
    _opt(p_cmp, "--out", metavar="DIR",
         help="also write compare.txt into this directory")
    _add_common(p_cmp)
    p_cmp.set_defaults(func=_cmd_compare)

    p_srv = sub.add_parser("serve", help="run the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(func=_cmd_serve)

    return parser


def _cmd_sim(args: argparse.Namespace) -> int:
    _resolve(args, _SIM_SPEC)
    payload = {
        "script": _read_text(args.script),
        "link": {
            "capacity": args.capacity,
            "prop_delay": args.prop_delay,
            "buffer": args.buffer,
            "discipline": args.discipline,
            "header_bytes": args.header_bytes,
        },
        "red": {
            "q_min": args.qmin,
            "q_max": args.qmax,
            "p_max": args.pmax,
            "w_q": args.wq,
            "use_count": bool(args.use_count),
        },
        "seed": args.seed,
        "t_end": args.t_end,
        "tcp_rtt_base": args.tcp_rtt_base,
        "tcp_initial_window": args.tcp_initial_window,
    }
    body = _post(args.server, "/sim", payload)
    out = _ensure_dir(args.out)
    _write(out / "recv.log", body["recv_log"])
    _write(out / "queue.dat", body["queue_dat"])
    print(f"wrote {out / 'recv.log'} and {out / 'queue.dat'}")
    print(
        "sent={sent} delivered={delivered} dropped={dropped} "
        "in_system={in_system}".format(**body)
    )
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    _resolve(args, _DECODE_SPEC)
    payload = {
        "log": _read_text(args.log),
        "bitrate_ms": args.bitrate,
        "delay_ms": args.delay,
        "jitter_ms": args.jitter,
    }
    body = _post(args.server, "/decode", payload)
    sys.stdout.write(body["report"])
    written = []
    for metric, key in (
        ("bitrate", "bitrate_dat"),
        ("delay", "delay_dat"),
        ("jitter", "jitter_dat"),
    ):
        text = body.get(key)
        if text is None:
            continue
        out = _ensure_dir(args.out)
        path = out / f"{metric}.dat"
        _write(path, text)
        written.append(str(path))
    if written:
        print("wrote " + ", ".join(written))
    return 0


def _cmd_fluid(args: argparse.Namespace) -> int:
    _resolve(args, _FLUID_SPEC)
    payload = {
        "mode": args.mode,
        "rtt": args.rtt,
        "capacity": args.capacity,
        "w_q": args.wq,
        "red": {
            "q_min": args.qmin,
            "q_max": args.qmax,
            "p_max": args.pmax,
            "w_q": args.wq,
            "use_count": bool(args.red_use_count),
        },
        "buffer": args.buffer,
        "noise": not args.no_noise,
        "marking": not args.no_marking,
        "marking_mode": args.marking_mode,
        "t_end": args.t_end,
        "dt": args.dt,
        "seed": args.seed,
        "n_traj": args.n_traj,
        "save_trajectories": args.save_trajectories,
        "init_w": args.init_w,
        "init_q": args.init_q,
        "init_qhat": args.init_qhat,
        "fp_lo": args.fp_lo,
        "fp_hi": args.fp_hi,
        "fp_n": args.fp_n,
        "fp_mu": args.fp_mu,
        "fp_sigma": args.fp_sigma,
        "fp_lam": args.fp_lam,
        "fp_drift_form": args.fp_drift_form,
        "fp_dt": args.fp_dt,
    }
    body = _post(args.server, "/fluid", payload)
    out = _ensure_dir(args.out)
    for name in sorted(body["files"]):
        _write(out / name, body["files"][name])
    print("wrote " + ", ".join(str(out / n) for n in sorted(body["files"])))
    for key in sorted(body["summary"]):
        print(f"{key}={body['summary'][key]}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    _resolve(args, _COMPARE_SPEC)
    payload = {
        "packet_dat": _read_text(args.packet_dat),
        "fluid_dat": _read_text(args.fluid_dat),
        "warmup": args.warmup,
        "grid_dt": args.grid_dt,
    }
    body = _post(args.server, "/compare", payload)
    # the rendered report already ends with the machine-readable summary line
    sys.stdout.write(body["report"])
    if args.out is not None:
        out = _ensure_dir(args.out)
        _write(out / "compare.txt", body["report"])
        print(f"wrote {out / 'compare.txt'}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for bad usage; remap the
        # latter onto this tool's usage code.
        return 0 if exc.code in (None, 0) else 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"redbench: error: {exc}", file=sys.stderr)
        return 1
    except _RunError as exc:
        print(f"redbench: error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 2


if __name__ == "__main__":
    sys.exit(main())
