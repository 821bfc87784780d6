"""Four-mode TTPC entangled state built from two EPR pairs.

Two NOPAs produce EPR pairs ``(a1, a2)`` and ``(a3, a4)``.  Modes ``a2`` and
``a3`` are combined on a 50:50 beamsplitter with a pi/2 relative phase,
giving::

    b1 = a1
    b2 = (a2 + i a3) / sqrt(2)
    b3 = a4
    b4 = (a2 - i a3) / sqrt(2)

Every one of the eight correlation relations below combines quadratures of
exactly three of the four modes and has variance ``4 e^{-2r}``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .engine import (
    GaussianState,
    LinearForm,
    SymplecticOp,
    apply,
    beamsplitter,
    linear_form_variance,
    mode_permutation,
    phase_shift,
    quadrature_form,
    two_mode_squeezer,
    vacuum_state,
)

N_MODES = 4
SQRT2 = math.sqrt(2.0)


class Relation(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"
    VI = "VI"
    VII = "VII"
    VIII = "VIII"


# (mode, quadrature, weight); modes 0..3 are b1..b4
_RELATION_TERMS = {
    Relation.I: [(0, "x", SQRT2), (1, "x", 1.0), (3, "x", 1.0)],
    Relation.II: [(1, "y", 1.0), (2, "x", SQRT2), (3, "y", -1.0)],
    Relation.III: [(0, "y", -SQRT2), (1, "y", 1.0), (3, "y", 1.0)],
    Relation.IV: [(1, "x", 1.0), (2, "y", SQRT2), (3, "x", -1.0)],
    Relation.V: [(0, "y", 1.0), (2, "x", 1.0), (3, "y", -SQRT2)],
    Relation.VI: [(0, "y", -1.0), (1, "y", SQRT2), (2, "x", 1.0)],
    Relation.VII: [(0, "x", 1.0), (2, "y", -1.0), (3, "x", SQRT2)],
    Relation.VIII: [(0, "x", 1.0), (1, "x", SQRT2), (2, "y", 1.0)],
}


@dataclass(frozen=True)
class CorrelationRelation:
    id: Relation
    coeffs: LinearForm


@dataclass(frozen=True)
class TtpcState:
    state: GaussianState
    r: float
    network: SymplecticOp
    r2: float | None = None

    @property
    def s(self) -> float:
        """Squeezing degree ``e^{-2r}``."""
        return math.exp(-2.0 * self.r)


def ttpc_network(r: float, r2: float | None = None) -> SymplecticOp:
    """Map from the eight seed quadratures ``(X01, Y01, ..., X04, Y04)`` to ``b1..b4``."""
    if r < 0 or (r2 is not None and r2 < 0):
        raise ValueError("squeezing parameters must be >= 0")
    r2 = r if r2 is None else r2
    ops = [
        two_mode_squeezer(r, 0, 1, N_MODES),
        two_mode_squeezer(r2, 2, 3, N_MODES),
        # port 2 leaves as i*b4 under the beamsplitter convention, undo the i
        beamsplitter(0.5, math.pi / 2, 1, 2, N_MODES),
        phase_shift(-math.pi / 2, 2, N_MODES),
        mode_permutation((0, 1, 3, 2), N_MODES),
    ]
    net = ops[0]
    for op in ops[1:]:
        net = op @ net
    return SymplecticOp(net.matrix, "TTPC")


def build_ttpc(r: float, r2: float | None = None) -> TtpcState:
    """TTPC state with squeezing ``r`` on both NOPAs.

    ``r2`` optionally sets a different squeezing for the second NOPA; the
    eight-relation variance identity only holds when ``r2 == r``.
    """
    if r < 0:
        raise ValueError(f"squeezing parameter must be >= 0, got {r}")
    net = ttpc_network(r, r2)
    return TtpcState(apply(net, vacuum_state(N_MODES)), float(r), net, r2)


def relation(rel_id) -> CorrelationRelation:
    rel = Relation(rel_id) if not isinstance(rel_id, Relation) else rel_id
    return CorrelationRelation(rel, quadrature_form(N_MODES, _RELATION_TERMS[rel]))


def correlation_variance(ttpc: TtpcState, rel_id) -> float:
    """Variance of a relation, evaluated on the vacuum seeds.

    Pulling the form back through the network keeps the ``e^{-r}``
    cancellation at amplitude level; ``c^T V c`` on the squeezed covariance
    loses it to rounding once ``cosh(2r)`` is large.
    """
    pulled = LinearForm(relation_in_seed_coords(ttpc, rel_id))
    return linear_form_variance(vacuum_state(N_MODES), pulled).quantum


def relation_in_seed_coords(ttpc: TtpcState, rel_id) -> np.ndarray:
    """Coefficients of a relation expressed on the eight seed quadratures."""
    return ttpc.network.matrix.T @ relation(rel_id).coeffs.coeffs
