"""Signal-to-noise ratios and Gaussian channel capacities under a photon budget.

The average photon number per mode ``nbar`` is split between the modulated
signal ``sigma2`` and squeezing ``sinh(r)^2``.  With the allocation
``sigma2 = sinh r cosh r`` this gives ``r = ln(2 nbar + 1) / 2``.  Capacities
are in nats.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .protocols import ProtocolId, SpectrumReport, closed_form_spectra

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SignalBudget:
    nbar: float
    r: float
    sigma2: float

    @property
    def s(self) -> float:
        return math.exp(-2.0 * self.r)

    @property
    def squeezing_photons(self) -> float:
        return math.sinh(self.r) ** 2


@dataclass(frozen=True)
class CapacityReport:
    protocol: ProtocolId
    nbar: float
    snr_x: float
    snr_y: float
    capacity: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["protocol"] = self.protocol.value
        return d


def _check_nbar(nbar: float) -> None:
    if not nbar >= 0:
        raise ValueError(f"average photon number must be >= 0, got {nbar}")


def budget(nbar: float) -> SignalBudget:
    """Split ``nbar`` as ``sigma2 = sinh r cosh r``, i.e. ``nbar = e^r sinh r``."""
    _check_nbar(nbar)
    r = 0.5 * math.log1p(2.0 * nbar)
    return SignalBudget(nbar, r, math.sinh(r) * math.cosh(r))


def budget_split(nbar: float, signal_fraction: float) -> SignalBudget:
    """Arbitrary split: ``sigma2 = signal_fraction * nbar``, the rest goes to squeezing."""
    _check_nbar(nbar)
    if not 0.0 <= signal_fraction <= 1.0:
        raise ValueError("signal_fraction must lie in [0, 1]")
    sigma2 = signal_fraction * nbar
    r = math.asinh(math.sqrt(nbar - sigma2))
    return SignalBudget(nbar, r, sigma2)


def snr_from_spectrum(report: SpectrumReport, sigma2: float) -> tuple[float, float]:
    """SNRs of both quadratures with signal variances ``V_Xs = V_Ys = 2 sigma2``."""
    if sigma2 < 0:
        raise ValueError("signal variance must be >= 0")
    if report.noise_plus <= 0 or report.noise_minus <= 0:
        raise ValueError("noise must be positive")
    v = 2.0 * sigma2
    return (
        report.signal_gain_plus * v / report.noise_plus,
        report.signal_gain_minus * v / report.noise_minus,
    )


def mutual_information(snr_x: float, snr_y: float) -> float:
    if snr_x < 0 or snr_y < 0:
        raise ValueError("SNR must be non-negative")
    return 0.5 * math.log1p(snr_x) + 0.5 * math.log1p(snr_y)


def capacity(protocol, nbar: float, allocation: SignalBudget | None = None) -> CapacityReport:
    """Capacity of a protocol at photon budget ``nbar``.

    Goes through the whole chain: budget -> squeezing and signal power ->
    spectrum at optimal gains -> SNR -> mutual information.  Pass
    ``allocation`` to override the default split of ``nbar``.
    """
    pid = ProtocolId.parse(protocol)
    b = budget(nbar) if allocation is None else allocation
    snr_x, snr_y = snr_from_spectrum(closed_form_spectra(pid, b.r), b.sigma2)
    return CapacityReport(pid, b.nbar, snr_x, snr_y, mutual_information(snr_x, snr_y))


def capacity_closed_form(protocol, nbar: float) -> float:
    """Capacities written directly in ``nbar`` (nats)."""
    pid = ProtocolId.parse(protocol)
    _check_nbar(nbar)
    n = nbar + nbar * nbar
    q = 2.0 * nbar + 1.0
    if pid is ProtocolId.AB:
        return math.log1p(8 * n / ((4 - 2 * SQRT2) * q * q + (4 + 2 * SQRT2)))
    if pid is ProtocolId.AB_D:
        return math.log1p(n)
    if pid is ProtocolId.AC:
        return math.log1p(2 * n / (q * q + 1))
    if pid is ProtocolId.AC_BD:
        return math.log1p(n / 2 * (1 + 1 / (q * q)))
    if pid is ProtocolId.AC_D:
        return math.log1p(n / 2)
    snr_y = n * (q * q + 1) / (2 * q * q + 1)
    return 0.5 * math.log1p(2 * snr_y) + 0.5 * math.log1p(snr_y)


def fig5_sweep(nbar_grid, protocols=tuple(ProtocolId)) -> list[CapacityReport]:
    """Capacity reports ordered by grid point, then by protocol."""
    pids = [ProtocolId.parse(p) for p in protocols]
    grid = [float(v) for v in nbar_grid]
    for v in grid:
        _check_nbar(v)
    return [capacity(p, v) for v in grid for p in pids]


def nats_to_bits(value: float) -> float:
    return value / math.log(2.0)
