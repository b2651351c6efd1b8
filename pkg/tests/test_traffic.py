"""Flow-script parsing and departure-schedule tests."""

import numpy as np
import pytest

from redbench.errors import ConfigError, ParseError
from redbench.traffic import (
    Distribution,
    FlowSpec,
    generate_departures,
    parse_flow_script,
    sample_interval,
    sample_size,
)


def test_parse_single_line():
    flows = parse_flow_script("-a 10.2.0.10 -C 1000 -c 512 -T UDP\n")
    assert len(flows) == 1
    f = flows[0]
    assert f.dest == "10.2.0.10"
    assert f.rate == 1000.0
    assert f.payload == 512
    assert f.transport == "UDP"
    assert f.duration_ms == 20000.0  # default


def test_parse_empty_file():
    assert parse_flow_script("") == []
    assert parse_flow_script("\n\n# comment only\n") == []


def test_parse_high_rate_udp_flow():
    flows = parse_flow_script("-a h -C 10000 -c 500 -T UDP -t 20000\n")
    assert len(flows) == 1
    f = flows[0]
    assert (f.rate, f.payload, f.duration_ms) == (10000.0, 500, 20000.0)


def test_parse_multi_flow_order():
    text = "\n".join(
        f"-a 10.2.0.10 -C {r} -c 512 -T UDP" for r in (1000, 2000, 3000)
    )
    flows = parse_flow_script(text)
    assert [f.rate for f in flows] == [1000.0, 2000.0, 3000.0]


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError, match="line 2"):
        parse_flow_script("-a h -C 10\n-a h -X 5\n")
    with pytest.raises(ParseError, match="line 1"):
        parse_flow_script("-a h -C notanumber\n")
    with pytest.raises(ParseError, match="missing -a"):
        parse_flow_script("-C 1000 -c 512\n")
    with pytest.raises(ParseError, match="line 3"):
        parse_flow_script("-a h\n\n-C 5 -a h -c -12\n")


def test_flowspec_validation():
    with pytest.raises(ConfigError):
        FlowSpec(dest="h", rate=0.0)
    with pytest.raises(ConfigError):
        FlowSpec(dest="h", payload=0)
    with pytest.raises(ConfigError):
        FlowSpec(dest="h", transport="SCTP")
    with pytest.raises(ConfigError):
        FlowSpec(dest="h", duration_ms=-1.0)


def test_distribution_validation():
    with pytest.raises(ConfigError):
        Distribution("nosuch", 1.0)
    with pytest.raises(ConfigError):
        Distribution.uniform(2.0, 1.0)
    with pytest.raises(ConfigError):
        Distribution.exponential(0.0)
    with pytest.raises(ConfigError):
        Distribution.pareto(0.0, 1.0)
    with pytest.raises(ConfigError):
        Distribution.cauchy(0.0, 0.0)


def test_constant_interval_exact():
    dist = Distribution.constant(0.001)
    rng = np.random.default_rng(0)
    assert all(sample_interval(dist, rng) == 0.001 for _ in range(10))


def test_exponential_interval_mean():
    dist = Distribution.exponential(0.004)
    rng = np.random.default_rng(42)
    n = 100_000
    xs = np.array([sample_interval(dist, rng) for _ in range(n)])
    se = 0.004 / np.sqrt(n)  # exponential std equals the mean
    assert abs(xs.mean() - 0.004) < 3.0 * se


def test_normal_interval_never_negative():
    # mass mostly below zero: exercises the clamp
    dist = Distribution.normal(0.001, 0.01)
    rng = np.random.default_rng(3)
    xs = [sample_interval(dist, rng) for _ in range(20_000)]
    assert min(xs) >= 0.0
    assert any(x == 0.0 for x in xs)


def test_all_kinds_nonnegative():
    rng = np.random.default_rng(11)
    kinds = [
        Distribution.constant(0.01),
        Distribution.uniform(0.0, 0.02),
        Distribution.exponential(0.01),
        Distribution.normal(0.0, 0.05),
        Distribution.gamma(2.0, 0.005),
        Distribution.pareto(1.5, 0.001),
        Distribution.cauchy(0.0, 0.01),
        Distribution.poisson(0.01),
    ]
    for dist in kinds:
        for _ in range(2000):
            assert sample_interval(dist, rng) >= 0.0


def test_sizes_are_positive_integers():
    rng = np.random.default_rng(9)
    dist = Distribution.normal(3.0, 50.0)
    for _ in range(5000):
        s = sample_size(dist, rng)
        assert isinstance(s, int) and s >= 1


def test_poisson_sizes_are_counts():
    rng = np.random.default_rng(1)
    dist = Distribution.poisson(512.0)
    xs = np.array([sample_size(dist, rng) for _ in range(20_000)])
    assert abs(xs.mean() - 512.0) < 3.0 * np.sqrt(512.0 / len(xs))
    assert np.all(xs == xs.astype(int))


def test_departures_constant_rate_counts():
    spec = FlowSpec(dest="h", rate=1000.0, payload=512, duration_ms=20000.0)
    events = generate_departures(spec, seed=0)
    assert len(events) == 20_000
    times = np.array([t for t, _ in events])
    # exact spacing means times are exact multiples of the gap
    np.testing.assert_array_equal(times, np.arange(20_000) * 0.001)
    assert times[-1] < spec.duration_s
    assert all(size == 512 for _, size in events)


def test_departures_high_rate_count():
    spec = FlowSpec(dest="h", rate=10000.0, payload=500, duration_ms=20000.0)
    events = generate_departures(spec, seed=0)
    assert len(events) == 200_000
    assert events[0] == (0.0, 500)


def test_departures_deterministic():
    spec = FlowSpec(
        dest="h",
        rate=500.0,
        payload=200,
        duration_ms=5000.0,
        interval_dist=Distribution.exponential(0.002),
        size_dist=Distribution.normal(200.0, 30.0),
    )
    a = generate_departures(spec, seed=(77, 1))
    b = generate_departures(spec, seed=(77, 1))
    assert a == b
    c = generate_departures(spec, seed=(78, 1))
    assert a != c


def test_departures_nondecreasing_and_bounded():
    rng_specs = [
        Distribution.exponential(0.003),
        Distribution.uniform(0.0, 0.004),
        Distribution.pareto(1.2, 0.001),
        Distribution.cauchy(0.002, 0.001),
        Distribution.poisson(0.002),
    ]
    for k, dist in enumerate(rng_specs):
        spec = FlowSpec(
            dest="h", rate=500.0, duration_ms=3000.0, interval_dist=dist
        )
        events = generate_departures(spec, seed=k)
        times = [t for t, _ in events]
        assert times == sorted(times)
        assert times[0] == 0.0
        assert times[-1] < spec.duration_s


def test_departures_stochastic_rate_matches_mean():
    mean_gap = 0.002
    spec = FlowSpec(
        dest="h",
        rate=500.0,
        duration_ms=600_000.0,  # 600 s, about 3e5 events
        interval_dist=Distribution.exponential(mean_gap),
    )
    events = generate_departures(spec, seed=123)
    n = len(events)
    rate = n / spec.duration_s
    # event count over [0, T) for a Poisson process: mean T/gap, sd sqrt
    expect = spec.duration_s / mean_gap
    assert abs(n - expect) < 3.0 * np.sqrt(expect)
    assert rate == pytest.approx(500.0, rel=0.02)


def test_departures_zero_constant_gap_rejected():
    spec = FlowSpec(
        dest="h", rate=100.0, duration_ms=1000.0,
        interval_dist=Distribution.constant(0.0),
    )
    with pytest.raises(ConfigError):
        generate_departures(spec, seed=0)
