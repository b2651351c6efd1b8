"""Flow specification and departure-schedule generation.

Flow scripts are line-oriented, one flow per line, with flags borrowed from
the ITGSend command surface: -a dest, -T transport, -C rate (pkt/s),
-c payload (bytes), -t duration (ms). Distributions beyond constant rate and
size are available programmatically through Distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ParseError

__all__ = [
    "Distribution",
    "FlowSpec",
    "parse_flow_script",
    "sample_interval",
    "sample_size",
    "generate_departures",
]

_KINDS = {
    "constant",
    "uniform",
    "exponential",
    "normal",
    "gamma",
    "pareto",
    "cauchy",
    "poisson",
}

# Runaway guard for pathological interval distributions (e.g. a normal whose
# mass is almost entirely below zero and therefore clamps to 0 forever).
_MAX_EVENTS = 20_000_000


@dataclass(frozen=True)
class Distribution:
    """One sampling law for inter-departure times or packet sizes.

    `a` and `b` are the kind's two parameters (see the constructors for their
    meaning per kind). `upper` is an optional hard ceiling applied after
    sampling; it exists for heavy-tailed kinds.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    upper: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown distribution kind {self.kind!r}")
        k, a, b = self.kind, self.a, self.b
        if k == "constant" and a < 0.0:
            raise ConfigError(f"constant value must be >= 0, got {a}")
        if k == "uniform" and not (0.0 <= a <= b):
            raise ConfigError(f"uniform needs 0 <= lo <= hi, got lo={a}, hi={b}")
        if k in ("exponential", "poisson") and a <= 0.0:
            raise ConfigError(f"{k} mean must be > 0, got {a}")
        if k == "normal" and b < 0.0:
            raise ConfigError(f"normal std must be >= 0, got {b}")
        if k == "gamma" and (a <= 0.0 or b <= 0.0):
            raise ConfigError(f"gamma needs shape > 0 and scale > 0, got {a}, {b}")
        if k == "pareto" and (a <= 0.0 or b <= 0.0):
            raise ConfigError(f"pareto needs shape > 0 and scale > 0, got {a}, {b}")
        if k == "cauchy" and b <= 0.0:
            raise ConfigError(f"cauchy scale must be > 0, got {b}")
        if self.upper is not None and self.upper <= 0.0:
            raise ConfigError(f"upper bound must be > 0, got {self.upper}")

    @classmethod
    def constant(cls, value: float) -> "Distribution":
        return cls("constant", value)

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "Distribution":
        return cls("uniform", lo, hi)

    @classmethod
    def exponential(cls, mean: float) -> "Distribution":
        return cls("exponential", mean)

    @classmethod
    def normal(cls, mean: float, std: float) -> "Distribution":
        return cls("normal", mean, std)

    @classmethod
    def gamma(cls, shape: float, scale: float) -> "Distribution":
        return cls("gamma", shape, scale)

    @classmethod
    def pareto(cls, shape: float, scale: float) -> "Distribution":
        return cls("pareto", shape, scale)

    @classmethod
    def cauchy(cls, loc: float, scale: float, upper: float | None = None) -> "Distribution":
        return cls("cauchy", loc, scale, upper)

    @classmethod
    def poisson(cls, mean: float) -> "Distribution":
        return cls("poisson", mean)


@dataclass
class FlowSpec:
    """One traffic flow: endpoint, transport, nominal rate/size, duration.

    When interval_dist or size_dist is None the flow uses constant spacing
    1/rate and constant payload. TCP flows are closed-loop in the simulator,
    which ignores rate and interval_dist for them (the window paces sends) but
    keeps payload and duration.
    """

    dest: str
    transport: str = "UDP"
    rate: float = 1000.0
    payload: int = 512
    duration_ms: float = 20000.0
    interval_dist: Distribution | None = None
    size_dist: Distribution | None = None

    def __post_init__(self) -> None:
        if not self.dest:
            raise ConfigError("flow needs a destination label")
        if self.transport not in ("UDP", "TCP"):
            raise ConfigError(f"transport must be UDP or TCP, got {self.transport!r}")
        if self.rate <= 0.0 or not math.isfinite(self.rate):
            raise ConfigError(f"rate must be a positive finite pkt/s, got {self.rate}")
        if self.payload < 1:
            raise ConfigError(f"payload must be >= 1 byte, got {self.payload}")
        if self.duration_ms <= 0.0 or not math.isfinite(self.duration_ms):
            raise ConfigError(f"duration must be positive ms, got {self.duration_ms}")

    @property
    def duration_s(self) -> float:
        return self.duration_ms / 1000.0


def parse_flow_script(text: str) -> list[FlowSpec]:
    """Parse a flow script into FlowSpecs, one per non-empty line.

    Blank lines and lines starting with '#' are skipped. Flows are numbered by
    file order (1-based) downstream. Raises ParseError with the line number on
    unknown flags, malformed values, or a missing -a.
    """
    flows: list[FlowSpec] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        kwargs: dict = {}
        i = 0
        while i < len(tokens):
            flag = tokens[i]
            if i + 1 >= len(tokens):
                raise ParseError(f"line {ln}: flag {flag} is missing a value")
            value = tokens[i + 1]
            i += 2
            try:
                if flag == "-a":
                    kwargs["dest"] = value
                elif flag == "-T":
                    kwargs["transport"] = value
                elif flag == "-C":
                    kwargs["rate"] = float(value)
                elif flag == "-c":
                    kwargs["payload"] = int(value)
                elif flag == "-t":
                    kwargs["duration_ms"] = float(value)
                else:
                    raise ParseError(f"line {ln}: unknown flag {flag}")
            except ParseError:
                raise
            except ValueError:
                raise ParseError(
                    f"line {ln}: malformed value {value!r} for flag {flag}"
                ) from None
        if "dest" not in kwargs:
            raise ParseError(f"line {ln}: missing -a destination")
        try:
            flows.append(FlowSpec(**kwargs))
        except ConfigError as exc:
            raise ParseError(f"line {ln}: {exc}") from None
    return flows


def _sample(dist: Distribution, rng: np.random.Generator, *, interval: bool) -> float:
    k = dist.kind
    if k == "constant":
        x = dist.a
    elif k == "uniform":
        x = rng.uniform(dist.a, dist.b)
    elif k == "exponential":
        x = rng.exponential(dist.a)
    elif k == "normal":
        x = rng.normal(dist.a, dist.b)
    elif k == "gamma":
        x = rng.gamma(dist.a, dist.b)
    elif k == "pareto":
        x = (rng.pareto(dist.a) + 1.0) * dist.b
    elif k == "cauchy":
        x = dist.a + dist.b * rng.standard_cauchy()
    elif k == "poisson":
        # Poisson-process convention for times (exponential gaps with the
        # given mean); literal counts when sampling sizes.
        x = rng.exponential(dist.a) if interval else float(rng.poisson(dist.a))
    else:  # pragma: no cover - kinds validated at construction
        raise ConfigError(f"unknown distribution kind {k!r}")
    if x < 0.0:
        x = 0.0
    if dist.upper is not None and x > dist.upper:
        x = dist.upper
    return x


def sample_interval(dist: Distribution, rng: np.random.Generator) -> float:
    """Draw one inter-departure time in seconds. Never negative.

    Each call consumes a fixed number of draws for its kind (out-of-range
    values are clamped, not resampled), so schedules stay reproducible.
    """
    return _sample(dist, rng, interval=True)


def sample_size(dist: Distribution, rng: np.random.Generator) -> int:
    """Draw one packet size in whole bytes, at least 1."""
    x = _sample(dist, rng, interval=False)
    return max(1, int(round(x)))


def generate_departures(spec: FlowSpec, seed) -> list[tuple[float, int]]:
    """Produce the (time s, size bytes) departure schedule for one flow.

    Times are non-decreasing, start at 0, and stay strictly below the
    duration. Constant-rate flows get exact k/rate spacing and exactly
    floor(rate * duration_s) events. `seed` may be an int or a sequence
    accepted by numpy's default_rng; the simulator passes (master_seed,
    flow_index) so flows draw from independent streams.
    """
    interval_dist = spec.interval_dist or Distribution.constant(1.0 / spec.rate)
    size_dist = spec.size_dist or Distribution.constant(float(spec.payload))
    if interval_dist.kind == "cauchy" and interval_dist.upper is None:
        interval_dist = replace(interval_dist, upper=1000.0 / spec.rate)
    if interval_dist.kind == "constant" and interval_dist.a <= 0.0:
        raise ConfigError("constant inter-departure time must be > 0")

    dur = spec.duration_s
    rng = np.random.default_rng(seed)

    if interval_dist.kind == "constant":
        gap = interval_dist.a
        if spec.interval_dist is None:
            n = int(math.floor(spec.rate * dur))
        else:
            n = int(math.floor(dur / gap))
        while n > 0 and (n - 1) * gap >= dur:
            n -= 1
        times = [k * gap for k in range(n)]
        if size_dist.kind == "constant":
            size = max(1, int(round(size_dist.a)))
            return [(t, size) for t in times]
        return [(t, sample_size(size_dist, rng)) for t in times]

    out: list[tuple[float, int]] = []
    t = 0.0
    constant_size = size_dist.kind == "constant"
    fixed = max(1, int(round(size_dist.a))) if constant_size else 0
    while t < dur:
        size = fixed if constant_size else sample_size(size_dist, rng)
        out.append((t, size))
        if len(out) > _MAX_EVENTS:
            raise ConfigError(
                "interval distribution produced more than "
                f"{_MAX_EVENTS} events before reaching the duration"
            )
        t += sample_interval(interval_dist, rng)
    return out
