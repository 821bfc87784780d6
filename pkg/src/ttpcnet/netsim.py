"""Monte Carlo simulation of the four-station network.

Each sample draws the eight seed quadratures of the two NOPAs and the two
classical signal values, builds the TTPC modes from the NOPA and
beamsplitter relations, runs the protocol's optical network, and lets every
station homodyne its quadratures.  Controllers ship their outcomes to the
receiver as :class:`ClassicalMessage` records through an in-process ordered
channel; the receiver forms ``i+`` and ``i-`` from its own outcomes plus
the gain-weighted messages for the same sample.

Draw order is fixed: one ``numpy.random.PCG64`` stream seeded with ``seed``,
consumed row by row as ``(X01, Y01, X02, Y02, X03, Y03, X04, Y04, X_s, Y_s)``
per sample.  The result does not depend on the chunk size.
"""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .capacity import snr_from_spectrum
from .protocols import (
    STATION_MODE,
    STATIONS,
    GainPair,
    ProtocolSpec,
    closed_form_spectra,
    optimal_gains,
    protocol_spec,
)

RNG_FAMILY = "numpy.random.PCG64"
DEFAULT_CHUNK = 1 << 17
Z_THRESHOLD = 5.0
LOW_POWER_SAMPLES = 1000


class Role(str, enum.Enum):
    SENDER = "sender"
    RECEIVER = "receiver"
    CONTROLLER = "controller"
    IDLE = "idle"


class MessageKind(str, enum.Enum):
    MEASURED = "measured-quadrature"
    GAIN = "gain-instruction"


@dataclass(frozen=True)
class Station:
    name: str
    held_mode: int
    role: Role


@dataclass(frozen=True)
class ClassicalMessage:
    sender: str
    recipient: str
    kind: MessageKind
    value: float
    sample_index: int

    def to_record(self) -> dict:
        return {
            "sample": self.sample_index,
            "from": self.sender,
            "to": self.recipient,
            "kind": self.kind.value,
            "value": self.value,
        }


@dataclass(frozen=True)
class MessageBatch:
    """Outcomes of one controller term for a contiguous block of samples."""

    sender: str
    recipient: str
    kind: MessageKind
    term: tuple[str, int]  # (photocurrent, index of the term in that photocurrent)
    values: np.ndarray
    sample_index: np.ndarray

    def messages(self):
        for k, v in zip(self.sample_index.tolist(), self.values.tolist()):
            yield ClassicalMessage(self.sender, self.recipient, self.kind, v, k)


class Channel:
    """Ordered in-process message transport with a delivery ledger."""

    def __init__(self):
        self._queue: deque[MessageBatch] = deque()
        self.sent = 0
        self.consumed = 0

    def send(self, batch: MessageBatch) -> None:
        self._queue.append(batch)
        self.sent += batch.values.size

    def receive(self, recipient: str, sample_index: np.ndarray) -> list[MessageBatch]:
        """Pop every queued batch for ``recipient``; they must cover exactly ``sample_index``."""
        mine, rest = [], deque()
        while self._queue:
            b = self._queue.popleft()
            (mine if b.recipient == recipient else rest).append(b)
        self._queue = rest
        for b in mine:
            if not np.array_equal(b.sample_index, sample_index):
                raise RuntimeError(
                    f"message from {b.sender} does not match the receiver's samples"
                )
            self.consumed += b.values.size
        return mine

    def pending(self) -> int:
        return sum(b.values.size for b in self._queue)


def stations(spec: ProtocolSpec) -> tuple[Station, ...]:
    def role(name):
        if name == spec.sender:
            return Role.SENDER
        if name == spec.receiver:
            return Role.RECEIVER
        if name in spec.controllers:
            return Role.CONTROLLER
        return Role.IDLE

    return tuple(Station(n, STATION_MODE[n], role(n)) for n in STATIONS)


def ttpc_samples(seeds: np.ndarray, r: float) -> np.ndarray:
    """Quadratures of b1..b4 (interleaved X, Y) from rows of seed quadratures."""
    ch, sh = math.cosh(r), math.sinh(r)
    x01, y01, x02, y02, x03, y03, x04, y04 = seeds.T
    xa1, ya1 = x01 * ch - x02 * sh, y01 * ch + y02 * sh
    xa2, ya2 = x02 * ch - x01 * sh, y02 * ch + y01 * sh
    xa3, ya3 = x03 * ch - x04 * sh, y03 * ch + y04 * sh
    xa4, ya4 = x04 * ch - x03 * sh, y04 * ch + y03 * sh
    k = 1.0 / math.sqrt(2.0)
    return np.column_stack(
        [
            xa1,
            ya1,
            k * (xa2 - ya3),
            k * (ya2 + xa3),
            xa4,
            ya4,
            k * (xa2 + ya3),
            k * (ya2 - xa3),
        ]
    )


@dataclass
class _Moments:
    """Count, mean and co-moment matrix; merged with the pairwise update."""

    n: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, data: np.ndarray) -> _Moments:
        mean = data.mean(axis=0)
        d = data - mean
        return cls(data.shape[0], mean, d.T @ d)

    def merge(self, other: _Moments) -> _Moments:
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + np.outer(delta, delta) * (self.n * other.n / n)
        return _Moments(n, mean, m2)


def _pairwise(parts: list[_Moments]) -> _Moments:
    while len(parts) > 1:
        parts = [
            parts[k].merge(parts[k + 1]) if k + 1 < len(parts) else parts[k]
            for k in range(0, len(parts), 2)
        ]
    return parts[0]


@dataclass(frozen=True)
class McEstimate:
    protocol: str
    r: float
    sigma2: float
    seed: int
    n_samples: int
    noise_plus_hat: float
    noise_minus_hat: float
    total_plus_hat: float
    total_minus_hat: float
    snr_x_hat: float
    snr_y_hat: float
    noise_plus_se: float
    noise_minus_se: float
    snr_x_se: float
    snr_y_se: float
    gains: tuple[float, float] | None = None
    messages_sent: int = 0
    messages_consumed: int = 0
    rng: str = RNG_FAMILY

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _photocurrent(out, terms, gains, batches, name):
    total = np.zeros(out.shape[0])
    by_term = {b.term: b for b in batches}
    for k, t in enumerate(terms):
        if t.gain is None:
            total += t.weight * out[:, 2 * t.mode + (t.quadrature == "y")]
        else:
            total += t.weight * gains.slot(t.gain) * by_term[(name, k)].values
    return total


def _resolve(spec) -> ProtocolSpec:
    return spec if isinstance(spec, ProtocolSpec) else protocol_spec(spec)


def sample_run(
    spec,
    r: float,
    sigma2: float,
    n_samples: int,
    seed: int,
    gains: GainPair | None = None,
    chunk_size: int = DEFAULT_CHUNK,
    trace=None,
) -> McEstimate:
    """Simulate ``n_samples`` protocol uses and estimate noise and SNR.

    ``gains`` defaults to the optimal feedforward gains.  ``trace`` may be a
    writable text stream; every classical message is then written to it as
    one JSON object per line.

    Noise is the residual variance of each photocurrent after regressing it
    on the transmitted signal values; with ``sigma2 == 0`` it is simply the
    photocurrent variance.
    """
    spec = _resolve(spec)
    if int(n_samples) != n_samples or n_samples < 2:
        raise ValueError(f"n_samples must be an integer >= 2, got {n_samples}")
    if r < 0 or sigma2 < 0:
        raise ValueError("r and sigma2 must be >= 0")
    if chunk_size < 1:
        raise ValueError("chunk_size must be positive")
    if spec.gain_slots:
        gains = optimal_gains(spec.id, r) if gains is None else gains
    else:
        gains = None

    net = spec.network().matrix
    amp = math.sqrt(2.0 * sigma2)
    m = spec.signal_mode
    controller_terms = [
        (name, k, t)
        for name, terms in (("plus", spec.plus_terms), ("minus", spec.minus_terms))
        for k, t in enumerate(terms)
        if t.gain is not None
    ]

    rng = np.random.Generator(np.random.PCG64(seed))
    channel = Channel()
    parts = []
    start = 0
    while start < n_samples:
        size = min(chunk_size, n_samples - start)
        idx = np.arange(start, start + size)
        z = rng.standard_normal((size, 10))
        xs, ys = amp * z[:, 8], amp * z[:, 9]
        modes = ttpc_samples(z[:, :8], r)
        modes[:, 2 * m] += xs
        modes[:, 2 * m + 1] += ys
        out = modes @ net.T

        for name, k, t in controller_terms:
            batch = MessageBatch(
                t.station,
                spec.receiver,
                MessageKind.MEASURED,
                (name, k),
                out[:, 2 * t.mode + (t.quadrature == "y")].copy(),
                idx,
            )
            channel.send(batch)

        inbox = channel.receive(spec.receiver, idx)
        if trace is not None:
            _write_trace(trace, inbox, size)
        i_plus = _photocurrent(out, spec.plus_terms, gains, inbox, "plus")
        i_minus = _photocurrent(out, spec.minus_terms, gains, inbox, "minus")
        parts.append(_Moments.of(np.column_stack([i_plus, i_minus, xs, ys])))
        start += size

    if channel.pending() or channel.consumed != channel.sent:
        raise RuntimeError("undelivered or duplicated classical messages")

    mom = _pairwise(parts)
    n = mom.n
    cov = mom.m2 / (n - 1)
    regress = sigma2 > 0 and n >= 3

    def estimate(i, j):
        total = cov[i, i]
        if not regress:
            return total, 0.0, total
        slope = cov[i, j] / cov[j, j]
        noise = (cov[i, i] - slope * cov[i, j]) * (n - 1) / (n - 2)
        return noise, slope * slope * cov[j, j] / noise, total

    noise_p, snr_x, total_p = estimate(0, 2)
    noise_m, snr_y, total_m = estimate(1, 3)
    rel = math.sqrt(2.0 / (n - 1))

    def snr_se(snr):
        # delta method on log(slope^2 * Var(X_s) / noise)
        if snr <= 0 or not math.isfinite(snr):
            return 0.0
        return snr * math.sqrt((4.0 / snr + 4.0) / n)

    return McEstimate(
        protocol=spec.id.value,
        r=float(r),
        sigma2=float(sigma2),
        seed=int(seed),
        n_samples=int(n),
        noise_plus_hat=float(noise_p),
        noise_minus_hat=float(noise_m),
        total_plus_hat=float(total_p),
        total_minus_hat=float(total_m),
        snr_x_hat=float(snr_x),
        snr_y_hat=float(snr_y),
        noise_plus_se=float(noise_p * rel),
        noise_minus_se=float(noise_m * rel),
        snr_x_se=float(snr_se(snr_x)),
        snr_y_se=float(snr_se(snr_y)),
        gains=None if gains is None else (gains.g_x, gains.g_y),
        messages_sent=channel.sent,
        messages_consumed=channel.consumed,
    )


def _write_trace(stream, batches, size) -> None:
    iters = [b.messages() for b in batches]
    for _ in range(size):
        for it in iters:
            stream.write(json.dumps(next(it).to_record()) + "\n")


@dataclass(frozen=True)
class Check:
    name: str
    estimate: float
    expected: float
    stderr: float
    passed: bool

    @property
    def z(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.estimate == self.expected else math.inf
        return (self.estimate - self.expected) / self.stderr


@dataclass(frozen=True)
class Comparison:
    estimate: McEstimate
    checks: tuple[Check, ...]
    low_power: bool
    threshold: float = Z_THRESHOLD
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", all(c.passed for c in self.checks))

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "low_power": self.low_power,
            "threshold_sigma": self.threshold,
            "estimate": self.estimate.to_dict(),
            "checks": [dict(asdict(c), z=c.z) for c in self.checks],
        }


def compare_mc_analytic(
    spec,
    r: float,
    sigma2: float,
    n_samples: int,
    seed: int,
    gains: GainPair | None = None,
    threshold: float = Z_THRESHOLD,
    chunk_size: int = DEFAULT_CHUNK,
) -> Comparison:
    """Check a Monte Carlo run against the closed-form spectrum.

    The reference is always the closed form at the protocol's optimal gains;
    passing ``gains`` only changes what the simulated receiver applies, so a
    wrong gain shows up as a failed check.
    """
    spec = _resolve(spec)
    est = sample_run(spec, r, sigma2, n_samples, seed, gains=gains, chunk_size=chunk_size)
    ref = closed_form_spectra(spec.id, r)
    v = 2.0 * sigma2
    n = est.n_samples
    rel = math.sqrt(2.0 / (n - 1))

    def check(name, estimate, expected, se):
        return Check(name, estimate, expected, se, abs(estimate - expected) <= threshold * se)

    checks = [
        check("noise_plus", est.noise_plus_hat, ref.noise_plus, ref.noise_plus * rel),
        check("noise_minus", est.noise_minus_hat, ref.noise_minus, ref.noise_minus * rel),
    ]
    if sigma2 > 0:
        tp, tm = ref.total_plus(v), ref.total_minus(v)
        snr_x, snr_y = snr_from_spectrum(ref, sigma2)
        checks += [
            check("total_plus", est.total_plus_hat, tp, tp * rel),
            check("total_minus", est.total_minus_hat, tm, tm * rel),
            check("snr_x", est.snr_x_hat, snr_x, snr_x * math.sqrt((4 / snr_x + 4) / n)),
            check("snr_y", est.snr_y_hat, snr_y, snr_y * math.sqrt((4 / snr_y + 4) / n)),
        ]
    return Comparison(est, tuple(checks), n < LOW_POWER_SAMPLES, threshold)
