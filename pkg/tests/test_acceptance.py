"""Acceptance suite. One test per criterion; each prints a visible
PASS/FAIL line with the measured numbers and enforces the stated
tolerances and runtime budgets.
"""

import math
import time

import numpy as np
import pytest

from redbench import (
    FlowSpec,
    FluidParams,
    FluidState,
    Grid1D,
    LinkConfig,
    PacketLogEntry,
    RedParams,
    decode,
    drift,
    drop_probability,
    euler_maruyama_ensemble_1d,
    ewma_update,
    fixed_point,
    queue_timeseries,
    render_report,
    run_simulation,
    simulate_fluid,
    solve_fokker_planck_1d,
    step_euler_maruyama,
    window_fp_coefficients,
)
from redbench.cli import main


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {n}: {detail}"


def synthetic_log(n, size, t_last_recv, delay):
    """n received packets, min t_send exactly 0, max t_recv exactly
    t_last_recv, so the receive span is t_last_recv bit for bit."""
    step = (t_last_recv - 2.0 * delay) / (n - 1)
    entries = [
        PacketLogEntry(1, k + 1, size, k * step, k * step + delay)
        for k in range(n - 1)
    ]
    entries.append(PacketLogEntry(1, n, size, t_last_recv - delay, t_last_recv))
    return entries


def test_criterion_1_decoder_arithmetic(capsys):
    t0 = time.perf_counter()
    udp = decode(synthetic_log(9257, 512, 19.998072, 0.14)).total
    tcp = decode(synthetic_log(4742, 500, 20.015369, 0.2)).total
    elapsed = time.perf_counter() - t0

    udp_got = (f"{udp.avg_bitrate:.6f}", f"{udp.avg_packet_rate:.6f}")
    tcp_got = (f"{tcp.avg_bitrate:.6f}", f"{tcp.avg_packet_rate:.6f}")
    ok = (
        udp_got == ("1896.016376", "462.894623")
        and tcp_got == ("947.671762", "236.917940")
        and elapsed < 1.0
    )
    report(
        capsys,
        1,
        ok,
        f"9257x512B -> {udp_got[0]} Kbit/s {udp_got[1]} pkt/s, "
        f"4742x500B -> {tcp_got[0]} Kbit/s {tcp_got[1]} pkt/s "
        f"(elapsed {elapsed:.3f} s < 1 s)",
    )


def test_criterion_2_report_golden_lines(capsys):
    entries = synthetic_log(9257, 512, 19.998072, 0.14)
    text = render_report(decode(entries))
    lines = text.splitlines()

    required = [
        "|-----|",
        "Flow number: 1",
        "***** TOTAL RESULTS *****",
        "Number of flows      = 1",
        "Total time           = 19.998072 s",
        "Total packets        = 9257",
        "Bytes received       = 4739584",
        "Average bitrate      = 1896.016376 Kbit/s",
        "Average packet rate  = 462.894623 pkt/s",
        "Packets dropped      = 0 (0.00 %)",
        "Average loss-burst size = 0.000000 pkt",
        "Average loss-burst size = 0 pkt",
        "Error lines          = 0",
    ]
    missing = [line for line in required if line not in lines]
    prefixes = [
        "Minimum delay        = ",
        "Maximum delay        = ",
        "Average delay        = ",
        "Average jitter       = ",
        "Delay standard deviation = ",
    ]
    missing += [
        p for p in prefixes if not any(line.startswith(p) for line in lines)
    ]
    ok = not missing
    report(
        capsys,
        2,
        ok,
        "all field names and zero-loss lines byte-exact"
        if ok
        else f"missing lines: {missing}",
    )


def test_criterion_3_overload_loss(capsys):
    t0 = time.perf_counter()
    flows = [
        FlowSpec(
            dest="10.2.0.10",
            transport="UDP",
            rate=1000.0 * k,
            payload=512,
            duration_ms=20000.0,
        )
        for k in range(1, 6)
    ]
    link = LinkConfig(capacity=10_000_000.0, buffer=50, discipline="red")
    res = run_simulation(flows, link, 20.0, 1)
    elapsed = time.perf_counter() - t0

    loss = res.n_dropped / res.n_sent
    target = 1.0 - 10.0 / 61.44
    ok = abs(loss - target) <= 0.05 and elapsed < 10.0
    report(
        capsys,
        3,
        ok,
        f"aggregate loss {loss:.5f} vs analytic {target:.5f} "
        f"(|diff| {abs(loss - target):.5f} <= 0.05, elapsed {elapsed:.2f} s < 10 s)",
    )


def test_criterion_4_red_law_suite(capsys):
    t0 = time.perf_counter()
    params = RedParams(q_min=5.0, q_max=15.0, p_max=0.1, w_q=0.002)

    piecewise_ok = (
        drop_probability(0.0, params) == 0.0
        and drop_probability(4.999999, params) == 0.0
        and drop_probability(10.0, params) == 0.05
        and drop_probability(15.0, params) == 1.0
        and drop_probability(50.0, params) == 1.0
    )

    rng = np.random.default_rng(2024)
    monotone_ok = True
    for _ in range(10_000):
        q_min = float(rng.uniform(0.0, 50.0))
        q_max = q_min + float(rng.uniform(0.5, 50.0))
        p = RedParams(
            q_min=q_min, q_max=q_max, p_max=float(rng.uniform(0.01, 1.0)), w_q=0.002
        )
        qs = np.sort(rng.uniform(q_min - 5.0, q_max + 5.0, size=6))
        probs = [drop_probability(float(q), p) for q in qs]
        if any(b < a for a, b in zip(probs, probs[1:])):
            monotone_ok = False
            break

    # dyadic weight and levels keep every term exact in binary, so the
    # closed form q + (q0 - q) * (1 - w)^n must match to the last bit
    ewma_ok = True
    q0, q, w = 32.0, 8.0, 0.5
    q_hat = q0
    for n in range(1, 41):
        q_hat = ewma_update(q_hat, q, w)
        if q_hat != q + (q0 - q) * (1.0 - w) ** n:
            ewma_ok = False
            break

    elapsed = time.perf_counter() - t0
    ok = piecewise_ok and monotone_ok and ewma_ok and elapsed < 1.0
    report(
        capsys,
        4,
        ok,
        f"piecewise exact={piecewise_ok}, monotone over 10^4 sets={monotone_ok}, "
        f"EWMA geometric exact={ewma_ok} (elapsed {elapsed:.3f} s < 1 s)",
    )


def euler_reference(state, params, dt):
    dw, dq, dqh = drift(state, params)
    w1 = state.w + dw * dt
    q1 = state.q + dq * dt
    qh1 = state.q_hat + dqh * dt
    if w1 < 1.0:
        w1 = 1.0
    if q1 < 0.0:
        q1 = 0.0
    elif q1 > params.buffer:
        q1 = params.buffer
    if qh1 < 0.0:
        qh1 = 0.0
    return FluidState(w=w1, q=q1, q_hat=qh1, t=state.t + dt)


def test_criterion_5_zero_noise_reduction(capsys):
    rng = np.random.default_rng(55)
    steps_per_set = 1000
    n_sets = 100
    identical = True
    for _ in range(n_sets):
        rtt = float(rng.uniform(0.05, 0.5))
        buffer = float(rng.uniform(20.0, 200.0))
        q_min = float(rng.uniform(1.0, 10.0))
        params = FluidParams(
            rtt=rtt,
            capacity=float(rng.uniform(50.0, 500.0)),
            w_q=float(rng.uniform(1e-4, 0.01)),
            red=RedParams(
                q_min=q_min,
                q_max=q_min + float(rng.uniform(2.0, 30.0)),
                p_max=float(rng.uniform(0.05, 1.0)),
                w_q=0.002,
            ),
            buffer=buffer,
            noise_enabled=False,
        )
        s = FluidState(
            w=float(rng.uniform(1.0, 30.0)),
            q=float(rng.uniform(0.0, buffer)),
            q_hat=float(rng.uniform(0.0, buffer)),
        )
        dt = rtt / 50.0
        for _ in range(steps_per_set):
            a = step_euler_maruyama(s, params, dt, z1=0.7, z2=-1.9)
            b = euler_reference(s, params, dt)
            if (a.w, a.q, a.q_hat) != (b.w, b.q, b.q_hat):
                identical = False
                break
            s = a
        if not identical:
            break

    # second reading of the same bound: one parameter set, 10^5 steps
    long_ok = True
    params = FluidParams(rtt=0.1, capacity=100.0, noise_enabled=False)
    s = FluidState(w=1.0, q=0.0, q_hat=0.0)
    for _ in range(100_000):
        a = step_euler_maruyama(s, params, 0.001, z1=0.7, z2=-1.9)
        b = euler_reference(s, params, 0.001)
        if (a.w, a.q, a.q_hat) != (b.w, b.q, b.q_hat):
            long_ok = False
            break
        s = a

    ok = identical and long_ok
    report(
        capsys,
        5,
        ok,
        f"stochastic stepper with noise off equals forward Euler bit for bit "
        f"over {n_sets} x {steps_per_set} steps and one 10^5-step run",
    )


def test_criterion_6_fixed_point(capsys):
    params = FluidParams(rtt=0.1, capacity=100.0)
    fp = fixed_point(params)
    residual = math.sqrt(sum(v * v for v in drift(fp, params)))
    ok = fp.w == 10.0 and fp.q_hat == 7.0 and fp.q == 7.0 and residual < 1e-9
    report(
        capsys,
        6,
        ok,
        f"W*={fp.w!r} (==10.0), Qhat*={fp.q_hat!r} (==7.0), "
        f"residual |drift| = {residual:.3e} < 1e-9",
    )


def test_criterion_7_langevin_fokker_planck(capsys):
    t0 = time.perf_counter()
    lo, hi, n = 1.0, 30.0, 96
    mu, sigma = 10.0, 1.5
    t_end = 2.0
    a_fn, d_fn = window_fp_coefficients(rtt=0.1, lam=2.0)

    grid = Grid1D.from_pdf(
        lo, hi, n, lambda x: np.exp(-0.5 * ((x - mu) / sigma) ** 2)
    )
    fp = solve_fokker_planck_1d(grid, a_fn, d_fn, dt=0.001, t_end=t_end)

    rng = np.random.default_rng(1)
    x0 = np.clip(rng.normal(mu, sigma, size=100_000), lo, hi)
    xs = euler_maruyama_ensemble_1d(
        a_fn, d_fn, x0, t_end=t_end, dt=0.002, n_traj=100_000, seed=2, lo=lo, hi=hi
    )
    hist, _ = np.histogram(xs, bins=n, range=(lo, hi), density=True)
    l1 = float(np.abs(hist - fp.grid.density).sum() * fp.grid.dx)
    mass_drift = abs(fp.grid.mass - 1.0)
    elapsed = time.perf_counter() - t0

    ok = (
        l1 < 0.05
        and fp.mass_error <= 1e-6
        and mass_drift <= 1e-6
        and elapsed < 60.0
    )
    report(
        capsys,
        7,
        ok,
        f"L1(EM 10^5-path histogram, FP density) = {l1:.4f} < 0.05, "
        f"mass error {fp.mass_error:.2e} <= 1e-6 "
        f"(elapsed {elapsed:.1f} s < 60 s)",
    )


def peak_lag(x, y, dt, max_lag_s):
    """Lag (s) at which cov(x(t), y(t + lag)) peaks; positive = y trails x."""
    x = x - x.mean()
    y = y - y.mean()
    kmax = int(max_lag_s / dt)
    lags = np.arange(-kmax, kmax + 1)
    cov = np.empty(lags.size)
    for i, k in enumerate(lags):
        if k >= 0:
            cov[i] = (x[: x.size - k] * y[k:]).mean()
        else:
            cov[i] = (x[-k:] * y[: y.size + k]).mean()
    return float(lags[int(np.argmax(cov))] * dt)


def test_criterion_8_packet_vs_fluid(capsys):
    t0 = time.perf_counter()
    # The packet link is dimensioned so that at the fluid equilibrium the
    # closed loop sees exactly the fluid round trip: 512 B at 409600 bit/s
    # gives 10 ms per packet (C = 100 pkt/s), and with 7 packets in the
    # system the wait + service + 10 ms propagation + 10 ms ack return sum
    # to T = 0.1 s.
    q_star = fixed_point(FluidParams(rtt=0.1, capacity=100.0)).q
    t_end, warmup, sample_dt = 60.0, 10.0, 0.05
    link = LinkConfig(
        capacity=409_600.0, prop_delay=0.01, buffer=50, discipline="red"
    )
    flow = FlowSpec(
        dest="sink", transport="TCP", payload=512, duration_ms=t_end * 1000.0
    )

    seed_means = []
    for seed in range(1, 31):
        res = run_simulation([flow], link, t_end, seed, tcp_rtt_base=0.01)
        t, q, _ = queue_timeseries(res.trace, sample_dt)
        seed_means.append(float(q[t >= warmup].mean()))
    mean_q = float(np.mean(seed_means))
    rel_err = abs(mean_q - q_star) / q_star

    long_run = run_simulation(
        [
            FlowSpec(
                dest="sink", transport="TCP", payload=512, duration_ms=150_000.0
            )
        ],
        link,
        150.0,
        1,
        tcp_rtt_base=0.01,
    )
    t, q, qh = queue_timeseries(long_run.trace, sample_dt)
    keep = t >= 20.0
    packet_lag = peak_lag(q[keep].astype(float), qh[keep], sample_dt, 10.0)

    ens = simulate_fluid(
        FluidParams(rtt=0.1, capacity=100.0),
        200.0,
        0.001,
        3,
        1,
        init=FluidState(w=10.0, q=7.0, q_hat=7.0),
        out_every=50,
        save_trajectories=1,
    )
    traj = ens.trajectories[0]
    keep = ens.times >= 20.0
    fluid_lag = peak_lag(traj[keep, 1], traj[keep, 2], sample_dt, 10.0)
    elapsed = time.perf_counter() - t0

    ok = (
        rel_err <= 0.20
        and packet_lag > 0.0
        and fluid_lag > 0.0
        and elapsed < 120.0
    )
    report(
        capsys,
        8,
        ok,
        f"mean queue over 30 seeds = {mean_q:.3f} vs fluid Q* = {q_star:.3f} "
        f"(rel err {rel_err:.3f} <= 0.20); Qhat trails Q by {packet_lag:.2f} s "
        f"(packet) and {fluid_lag:.2f} s (fluid), both > 0 "
        f"(elapsed {elapsed:.1f} s < 120 s)",
    )


def test_criterion_9_determinism(capsys, tmp_path):
    script = tmp_path / "flows.txt"
    script.write_text("-a 10.0.0.2 -T UDP -C 200 -c 512 -t 2000\n")

    def run_all(base):
        sim_dir = base / "sim"
        assert main(["sim", str(script), "--seed", "5", "--out", str(sim_dir)]) == 0
        dec_dir = base / "dec"
        assert (
            main(
                [
                    "decode",
                    str(sim_dir / "recv.log"),
                    "-b",
                    "500",
                    "-d",
                    "500",
                    "-j",
                    "500",
                    "--out",
                    str(dec_dir),
                ]
            )
            == 0
        )
        det_dir = base / "det"
        assert main(["fluid", "det", "--t-end", "1", "--out", str(det_dir)]) == 0
        sde_dir = base / "sde"
        assert (
            main(
                [
                    "fluid",
                    "sde",
                    "--t-end",
                    "1",
                    "--n-traj",
                    "30",
                    "--save-trajectories",
                    "1",
                    "--seed",
                    "11",
                    "--out",
                    str(sde_dir),
                ]
            )
            == 0
        )
        fp_dir = base / "fp"
        assert main(["fluid", "fp", "--t-end", "0.1", "--out", str(fp_dir)]) == 0
        cmp_dir = base / "cmp"
        assert (
            main(
                [
                    "compare",
                    str(sim_dir / "queue.dat"),
                    str(det_dir / "trajectory.dat"),
                    "--out",
                    str(cmp_dir),
                ]
            )
            == 0
        )
        return {
            str(p.relative_to(base)): p.read_bytes()
            for p in sorted(base.rglob("*"))
            if p.is_file()
        }

    first = run_all(tmp_path / "a")
    second = run_all(tmp_path / "b")
    same_names = sorted(first) == sorted(second)
    diff = [name for name in first if first[name] != second.get(name)]
    ok = same_names and not diff
    report(
        capsys,
        9,
        ok,
        f"{len(first)} output files from sim/decode/fluid(det,sde,fp)/compare "
        "re-run byte-identical"
        if ok
        else f"differing files: {diff}",
    )
