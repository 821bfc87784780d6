"""Dense-coding protocols on the four-station TTPC network.

Stations Alice, Bob, Claire and Daisy hold modes b1, b2, b3 and b4.  Alice
always sends; she displaces b1 by ``X_s + i Y_s`` and ships it to the
receiver.  Each protocol is described twice:

* a closed-form noise spectrum for the sum (``i+``) and difference (``i-``)
  photocurrents, and
* a :class:`ProtocolSpec` -- an explicit beamsplitter network plus the
  homodyne measurements and feedforward gains -- which :func:`engine_spectra`
  evaluates on the covariance matrix.  The two must agree.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .engine import (
    LinearForm,
    SymplecticOp,
    beamsplitter,
    identity,
    linear_form_variance,
    apply,
    quadrature_form,
)
from .source import N_MODES, build_ttpc

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)

STATIONS = ("Alice", "Bob", "Claire", "Daisy")
STATION_MODE = {name: k for k, name in enumerate(STATIONS)}


class ProtocolId(str, enum.Enum):
    AB = "AB"
    AC = "AC"
    AB_CD = "AB_CD"
    AC_BD = "AC_BD"
    AB_D = "AB_D"
    AC_D = "AC_D"

    @classmethod
    def parse(cls, value) -> ProtocolId:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(
                f"unknown protocol {value!r}; expected one of {[p.value for p in cls]}"
            ) from None


ASSISTED = (ProtocolId.AB_CD, ProtocolId.AC_BD, ProtocolId.AB_D, ProtocolId.AC_D)
GAIN_PROTOCOLS = (ProtocolId.AB_CD, ProtocolId.AC_BD)


@dataclass(frozen=True)
class GainPair:
    g_x: float
    g_y: float

    def __post_init__(self):
        if not (math.isfinite(self.g_x) and math.isfinite(self.g_y)):
            raise ValueError("gains must be finite")

    def slot(self, name: str) -> float:
        return {"gx": self.g_x, "gy": self.g_y}[name]


@dataclass(frozen=True)
class SpectrumReport:
    noise_plus: float
    noise_minus: float
    signal_gain_plus: float
    signal_gain_minus: float
    r: float
    gains: GainPair | None = None

    def total_plus(self, v_xs: float) -> float:
        return self.noise_plus + self.signal_gain_plus * v_xs

    def total_minus(self, v_ys: float) -> float:
        return self.noise_minus + self.signal_gain_minus * v_ys

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gains"] = None if self.gains is None else [self.gains.g_x, self.gains.g_y]
        return d


# ---------------------------------------------------------------- closed forms


def _check_r(r: float) -> None:
    if not r >= 0:
        raise ValueError(f"squeezing parameter must be >= 0, got {r}")


def spectra_ab_unassisted(r: float) -> SpectrumReport:
    _check_r(r)
    s = math.exp(-2 * r)
    noise = ((4 - 2 * SQRT2) + (4 + 2 * SQRT2) * s * s) / (8 * s)
    return SpectrumReport(noise, noise, 0.5, 0.5, r)


def spectra_ac_unassisted(r: float) -> SpectrumReport:
    _check_r(r)
    noise = math.cosh(2 * r)
    return SpectrumReport(noise, noise, 0.5, 0.5, r)


def noise_ab_two_controllers(r: float, gains: GainPair) -> tuple[float, float]:
    """Sum and difference noise for Alice -> Bob with feedforward from Daisy and Claire."""
    up, down = math.exp(2 * r), math.exp(-2 * r)
    ux, uy = SQRT3 * gains.g_x, SQRT3 * gains.g_y
    plus = (2 * (1 - ux) ** 2 * up + ((3 + ux) ** 2 + (ux - 1) ** 2) * down) / 12
    minus = ((uy - 1) ** 2 * up + (4 + (uy + 1) ** 2) * down) / 6
    return plus, minus


def noise_ac_two_controllers(r: float, gains: GainPair) -> tuple[float, float]:
    """Sum and difference noise for Alice -> Claire with feedforward from Daisy and Bob.

    ``[(1-g)^2 e^{2r} + (1+g)^2 e^{-2r}] / 2`` for each quadrature; the
    minimum over ``g`` is ``2e^{-2r} / (e^{-4r} + 1)`` at ``g = tanh 2r``.
    """
    up, down = math.exp(2 * r), math.exp(-2 * r)

    def f(g):
        return ((1 - g) ** 2 * up + (1 + g) ** 2 * down) / 2

    return f(gains.g_x), f(gains.g_y)


def optimal_gains_ab(r: float) -> GainPair:
    _check_r(r)
    g = math.tanh(2 * r) / SQRT3
    return GainPair(g, g)


def optimal_gains_ac(r: float) -> GainPair:
    _check_r(r)
    g = math.tanh(2 * r)
    return GainPair(g, g)


def spectra_ab_two_controllers(r: float, gains: GainPair | None = None) -> SpectrumReport:
    _check_r(r)
    gains = optimal_gains_ab(r) if gains is None else gains
    plus, minus = noise_ab_two_controllers(r, gains)
    return SpectrumReport(plus, minus, 2 / 3, 1 / 3, r, gains)


def spectra_ab_two_controllers_optimal(r: float) -> SpectrumReport:
    """Noise at the optimal gains, written directly in the squeezing degree."""
    _check_r(r)
    s = math.exp(-2 * r)
    noise = 2 * s / 3 * (s * s + 2) / (s * s + 1)
    return SpectrumReport(noise, noise, 2 / 3, 1 / 3, r, optimal_gains_ab(r))


def spectra_ac_two_controllers(r: float, gains: GainPair | None = None) -> SpectrumReport:
    _check_r(r)
    gains = optimal_gains_ac(r) if gains is None else gains
    plus, minus = noise_ac_two_controllers(r, gains)
    return SpectrumReport(plus, minus, 0.5, 0.5, r, gains)


def spectra_ac_two_controllers_optimal(r: float) -> SpectrumReport:
    _check_r(r)
    s = math.exp(-2 * r)
    noise = 2 * s / (s * s + 1)
    return SpectrumReport(noise, noise, 0.5, 0.5, r, optimal_gains_ac(r))


def spectra_ab_one_controller(r: float) -> SpectrumReport:
    _check_r(r)
    noise = math.exp(-2 * r)
    return SpectrumReport(noise, noise, 0.5, 0.5, r)


def spectra_ac_one_controller(r: float) -> SpectrumReport:
    _check_r(r)
    noise = math.exp(-2 * r)
    return SpectrumReport(noise, noise, 0.25, 0.25, r)


def optimal_gains(protocol, r: float) -> GainPair | None:
    pid = ProtocolId.parse(protocol)
    if pid is ProtocolId.AB_CD:
        return optimal_gains_ab(r)
    if pid is ProtocolId.AC_BD:
        return optimal_gains_ac(r)
    return None


def closed_form_spectra(protocol, r: float, gains: GainPair | None = None) -> SpectrumReport:
    """Closed-form spectrum of any protocol; gain protocols default to optimal gains."""
    pid = ProtocolId.parse(protocol)
    if pid is ProtocolId.AB:
        return spectra_ab_unassisted(r)
    if pid is ProtocolId.AC:
        return spectra_ac_unassisted(r)
    if pid is ProtocolId.AB_CD:
        if gains is None:
            return spectra_ab_two_controllers_optimal(r)
        return spectra_ab_two_controllers(r, gains)
    if pid is ProtocolId.AC_BD:
        if gains is None:
            return spectra_ac_two_controllers_optimal(r)
        return spectra_ac_two_controllers(r, gains)
    if pid is ProtocolId.AB_D:
        return spectra_ab_one_controller(r)
    return spectra_ac_one_controller(r)


def ab_snl_crossing() -> float:
    """Squeezing degree ``s`` at which unassisted Alice -> Bob noise equals 1."""

    def excess(s):
        return ((4 - 2 * SQRT2) + (4 + 2 * SQRT2) * s * s) / (8 * s) - 1.0

    return brentq(excess, 1e-3, 0.5, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def minimize_gain(noise, lo: float = -3.0, hi: float = 3.0, h: float = 1e-3) -> float:
    """Numerically locate the gain minimizing a smooth convex ``noise(g)``.

    Finds the zero of a central-difference derivative by bracketing, which
    resolves the minimizer far more tightly than comparing function values.
    """

    def slope(g):
        return (noise(g + h) - noise(g - h)) / (2 * h)

    return brentq(slope, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


# ------------------------------------------------------------ network specs


@dataclass(frozen=True)
class OpticalStep:
    """Beamsplitter ``BS(t, phase)`` acting on modes ``(i, j)``; see :func:`engine.beamsplitter`."""

    t: float
    phase: float
    i: int
    j: int


@dataclass(frozen=True)
class Term:
    """One homodyne outcome feeding a photocurrent.

    ``station`` measures quadrature ``quadrature`` of output mode ``mode``
    and the photocurrent receives ``weight * outcome``, further scaled by
    the named electronic gain when ``gain`` is set.
    """

    station: str
    mode: int
    quadrature: str
    weight: float = 1.0
    gain: str | None = None


@dataclass(frozen=True)
class ProtocolSpec:
    id: ProtocolId
    sender: str
    receiver: str
    controllers: tuple[str, ...]
    optical_steps: tuple[OpticalStep, ...]
    plus_terms: tuple[Term, ...]
    minus_terms: tuple[Term, ...]
    signal_mode: int = 0
    description: str = ""
    n_modes: int = field(default=N_MODES)

    def __post_init__(self):
        object.__setattr__(self, "id", ProtocolId.parse(self.id))
        object.__setattr__(self, "controllers", tuple(self.controllers))
        object.__setattr__(self, "optical_steps", tuple(self.optical_steps))
        object.__setattr__(self, "plus_terms", tuple(self.plus_terms))
        object.__setattr__(self, "minus_terms", tuple(self.minus_terms))
        for name in (self.sender, self.receiver, *self.controllers):
            if name not in STATIONS:
                raise ValueError(f"unknown station {name!r}")
        if self.sender == self.receiver:
            raise ValueError("sender and receiver must differ")
        if {self.sender, self.receiver} & set(self.controllers):
            raise ValueError("controllers must be disjoint from sender and receiver")
        if len(set(self.controllers)) != len(self.controllers):
            raise ValueError("duplicate controller")
        if not 0 <= self.signal_mode < self.n_modes:
            raise ValueError(f"signal mode {self.signal_mode} out of range")
        for step in self.optical_steps:
            if not (0 <= step.i < self.n_modes and 0 <= step.j < self.n_modes) or step.i == step.j:
                raise ValueError(f"bad modes in optical step {step}")
        allowed = {self.receiver, *self.controllers}
        for term in self.plus_terms + self.minus_terms:
            if term.station not in allowed:
                raise ValueError(f"station {term.station!r} takes no part in {self.id.value}")
            if not 0 <= term.mode < self.n_modes:
                raise ValueError(f"measured mode {term.mode} out of range")
            if term.quadrature not in ("x", "y"):
                raise ValueError(f"quadrature must be 'x' or 'y', got {term.quadrature!r}")
            if term.gain not in (None, "gx", "gy"):
                raise ValueError(f"unknown gain slot {term.gain!r}")
            if (term.gain is None) != (term.station == self.receiver):
                raise ValueError("controller outcomes, and only those, must carry a gain slot")

    @property
    def gain_slots(self) -> tuple[str, ...]:
        return tuple(sorted({t.gain for t in self.plus_terms + self.minus_terms if t.gain}))

    def network(self) -> SymplecticOp:
        net = identity(self.n_modes)
        for step in self.optical_steps:
            net = beamsplitter(step.t, step.phase, step.i, step.j, self.n_modes) @ net
        return net

    def measured_forms(self, gains: GainPair | None = None) -> tuple[LinearForm, LinearForm]:
        """``i+`` and ``i-`` as forms on the output quadratures, signal weights attached."""
        if self.gain_slots and gains is None:
            raise ValueError(f"protocol {self.id.value} needs feedforward gains")
        s = self.network().matrix
        m = self.signal_mode

        def build(terms):
            triples = [
                (t.mode, t.quadrature, t.weight * (gains.slot(t.gain) if t.gain else 1.0))
                for t in terms
            ]
            c = quadrature_form(self.n_modes, triples).coeffs
            # a displacement d on the input appears as S d at the output
            pulled = c @ s
            return LinearForm(c, (pulled[2 * m], pulled[2 * m + 1]))

        return build(self.plus_terms), build(self.minus_terms)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["id"] = self.id.value
        d["controllers"] = list(self.controllers)
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> ProtocolSpec:
        d = dict(d)
        d["optical_steps"] = tuple(OpticalStep(**s) for s in d.get("optical_steps", ()))
        d["plus_terms"] = tuple(Term(**t) for t in d.get("plus_terms", ()))
        d["minus_terms"] = tuple(Term(**t) for t in d.get("minus_terms", ()))
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> ProtocolSpec:
        return cls.from_dict(json.loads(text))


def _t(station, mode, quad, weight=1.0, gain=None):
    return Term(station, mode, quad, weight, gain)


_HALF_PI = math.pi / 2

_SPECS = {
    ProtocolId.AB: ProtocolSpec(
        ProtocolId.AB,
        "Alice",
        "Bob",
        (),
        (OpticalStep(0.5, 0.0, 0, 1),),
        (_t("Bob", 0, "x"),),
        (_t("Bob", 1, "y"),),
        description="Bell detection of b1' and b2 on a 50:50 splitter; "
        "i+ = (X_b1 + X_b2)/sqrt2, i- = (Y_b2 - Y_b1)/sqrt2.",
    ),
    ProtocolId.AC: ProtocolSpec(
        ProtocolId.AC,
        "Alice",
        "Claire",
        (),
        (OpticalStep(0.5, 0.0, 0, 2),),
        (_t("Claire", 0, "x"),),
        (_t("Claire", 2, "y"),),
        description="Bell detection of b1' and b3 on a 50:50 splitter.",
    ),
    ProtocolId.AB_CD: ProtocolSpec(
        ProtocolId.AB_CD,
        "Alice",
        "Bob",
        ("Claire", "Daisy"),
        (OpticalStep(2 / 3, 0.0, 0, 1),),
        (_t("Bob", 0, "x"), _t("Daisy", 3, "x", gain="gx")),
        (_t("Bob", 1, "y"), _t("Claire", 2, "x", gain="gy")),
        description="1:2 splitter on b1', b2: i+ = (sqrt2 X_b1 + X_b2)/sqrt3 + gx X_b4, "
        "i- = (sqrt2 Y_b2 - Y_b1)/sqrt3 + gy X_b3.",
    ),
    ProtocolId.AC_BD: ProtocolSpec(
        ProtocolId.AC_BD,
        "Alice",
        "Claire",
        ("Bob", "Daisy"),
        (OpticalStep(0.5, _HALF_PI, 0, 2),),
        (_t("Claire", 0, "x"), _t("Daisy", 3, "x", gain="gx")),
        (_t("Claire", 2, "x", -1.0), _t("Bob", 1, "y", -1.0, gain="gy")),
        description="50:50 splitter with pi/2 phase on b1', b3, amplitude homodyne on both ports: "
        "i+ = (X_b1 - Y_b3)/sqrt2 + gx X_b4 (relation VII), "
        "i- = (Y_b1 - X_b3)/sqrt2 - gy Y_b2 (relation VI).",
    ),
    ProtocolId.AB_D: ProtocolSpec(
        ProtocolId.AB_D,
        "Alice",
        "Bob",
        ("Daisy",),
        (OpticalStep(0.5, 0.0, 1, 3), OpticalStep(0.5, 0.0, 0, 1)),
        (_t("Bob", 0, "x"),),
        (_t("Bob", 1, "y"),),
        description="b_out = (b2 + b4)/sqrt2, then Bell detection of b1' and b_out.",
    ),
    ProtocolId.AC_D: ProtocolSpec(
        ProtocolId.AC_D,
        "Alice",
        "Claire",
        ("Daisy",),
        (
            OpticalStep(2 / 3, _HALF_PI, 3, 2),
            OpticalStep(0.25, 0.0, 0, 3),
            OpticalStep(1 / 3, 3 * _HALF_PI, 3, 2),
        ),
        (_t("Claire", 0, "x"),),
        (_t("Claire", 3, "y", -1.0),),
        description="c = (sqrt2 b4 + i b3)/sqrt3 and d = (sqrt2 b3 + i b4)/sqrt3 from a 2:1 "
        "splitter; p = (b1' + sqrt3 c)/2 from a 1:3 splitter; the spare port "
        "q = (c - sqrt3 b1')/2 is mixed with d on a 1:2 splitter at phase 3pi/2.  "
        "i+ = X_p = (X_b1 - Y_b3 + sqrt2 X_b4)/2 (relation VII), "
        "i- = -Y_out = (Y_b1 + X_b3 - sqrt2 Y_b4)/2 (relation V).",
    ),
}


def protocol_spec(protocol) -> ProtocolSpec:
    return _SPECS[ProtocolId.parse(protocol)]


def all_specs() -> tuple[ProtocolSpec, ...]:
    return tuple(_SPECS[p] for p in ProtocolId)


def engine_spectra(spec, r: float, gains: GainPair | None = None) -> SpectrumReport:
    """Evaluate a protocol network on the TTPC covariance matrix."""
    if not isinstance(spec, ProtocolSpec):
        spec = protocol_spec(spec)
    _check_r(r)
    if spec.gain_slots and gains is None:
        gains = optimal_gains(spec.id, r)
    if not spec.gain_slots:
        gains = None
    out = apply(spec.network(), build_ttpc(r).state)
    plus, minus = spec.measured_forms(gains)
    return SpectrumReport(
        linear_form_variance(out, plus).quantum,
        linear_form_variance(out, minus).quantum,
        plus.signal_coeffs[0] ** 2,
        minus.signal_coeffs[1] ** 2,
        r,
        gains,
    )
