"""Sign and integer characteristic classes of a witness cochain.

The entrywise determinant of the witness gives a sign class; stripping
reflections and taking principal logs gives a real lift whose twisted
coboundary rounds to an integer class.  On surface bases the integer
class pairs with a twisted fundamental cycle, computed from Smith forms
of the twisted boundary matrices, to give the twisted Euler number.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .circle import principal_turn
from .cochains import Cochain, check_sign_cocycle, cocycle_defect, twisted_coboundary
from .errors import BracketAmbiguous, NotASurface, ShapeMismatch
from .intlinalg import obj_matmul, smith_normal_form, twisted_boundary_matrix
from .nerve import Nerve

log = logging.getLogger(__name__)

# pre-bracket values this close to a half-integer make rounding unreliable
BRACKET_GUARD = 1e-6


@dataclass
class CharClassResult:
    """Characteristic classes extracted from one witness cochain.

    Attributes
    ----------
    sw : Cochain
        Sign-valued 1-cochain, the entrywise determinant.
    euler : Cochain
        Integer 2-cochain twisted by ``sw``.
    lift : Cochain
        The real-valued principal lift the euler cochain was rounded from.
    bracket_margin : float
        Smallest distance of any pre-bracket value to a half-integer;
        infinity when the nerve has no triangles.
    """

    sw: Cochain
    euler: Cochain
    lift: Cochain
    bracket_margin: float


def sw_class(witness: Cochain) -> Cochain:
    """Entrywise determinant of an isometry 1-cochain, as a sign cochain."""
    if witness.tag != "O2" or witness.degree != 1:
        raise ShapeMismatch("need an isometry-valued 1-cochain")
    vals = {e: om.sign for e, om in witness.values.items()}
    return Cochain(witness.nerve, 1, "Z2", vals)


def euler_cochain(witness: Cochain) -> CharClassResult:
    """Integer 2-cochain of a witness, with its sign class and real lift.

    The rotation part of each edge keeps the witness turn; its principal
    log is the lift, and the twisted coboundary of the lift rounds to the
    nearest integer per triangle.  The margin of that rounding is part of
    the result; values too close to a half-integer refuse to round.
    """
    defect = cocycle_defect(witness)
    if defect >= 0.5:
        log.warning(
            "witness defect %.3f is not below 1/2; the rounded class "
            "may fail to be a cocycle",
            defect,
        )
    sw = sw_class(witness)
    lift_vals = {e: principal_turn(om.turn) for e, om in witness.values.items()}
    lift = Cochain(witness.nerve, 1, "R", lift_vals, twist=sw)
    pre = twisted_coboundary(lift, sw)
    margin = math.inf
    euler_vals = {}
    for s, x in pre.values.items():
        r = x - round(x)
        gap = 0.5 - abs(r)
        if gap < BRACKET_GUARD:
            raise BracketAmbiguous(
                f"pre-bracket value {x} on {s} is within {BRACKET_GUARD} "
                "of a half-integer"
            )
        margin = min(margin, gap)
        euler_vals[s] = int(round(x))
    euler = Cochain(witness.nerve, 2, "Z", euler_vals, twist=sw)
    return CharClassResult(sw=sw, euler=euler, lift=lift, bracket_margin=margin)


def fundamental_class_twisted(nerve: Nerve, omega: Cochain) -> dict:
    """Twisted fundamental 2-cycle of a closed-surface nerve.

    The kernel of the twisted boundary in degree 2 is read off the Smith
    form's zero columns; the degree-3 boundary restricts it, and the
    free part of the quotient must have rank exactly one.  The returned
    chain maps each triangle to its integer coefficient, first nonzero
    coefficient positive.
    """
    check_sign_cocycle(omega)
    d2 = twisted_boundary_matrix(nerve, omega, 2)
    d3 = twisted_boundary_matrix(nerve, omega, 3)
    if not d2.cols:
        raise NotASurface("nerve has no 2-simplices")
    snf = smith_normal_form(d2.matrix)
    rank = snf.rank
    k = len(d2.cols) - rank
    if k == 0:
        raise NotASurface("twisted boundary has no kernel in degree 2")
    K = snf.R[:, rank:]
    if d3.cols:
        # image of the 3-boundary in kernel coordinates
        B = obj_matmul(snf.Rinv[rank:, :], d3.matrix)
        bsnf = smith_normal_form(B)
        free = k - bsnf.rank
        if free != 1:
            raise NotASurface(f"twisted second homology has free rank {free}")
        # the lone zero invariant factor sits last; pull its generator back
        Lprime_inv = bsnf.Linv
        v = Lprime_inv[:, k - 1].reshape(-1, 1)
    else:
        if k != 1:
            raise NotASurface(f"twisted second homology has free rank {k}")
        v = np.ones((1, 1), dtype=object)
    mu = obj_matmul(K, v).reshape(-1)
    lead = next((x for x in mu if x != 0), None)
    if lead is None:
        raise NotASurface("fundamental chain vanished")
    if lead < 0:
        mu = -mu
    return {s: int(c) for s, c in zip(d2.cols, mu)}


def euler_number(e: Cochain, mu: dict) -> int:
    """Integer pairing of a degree-2 cochain with a 2-chain.

    The sign follows the chain's first-nonzero-positive convention; both
    signs of the chain are valid fundamental classes, so callers report
    the magnitude with the convention attached.
    """
    if e.degree != 2 or e.tag != "Z":
        raise ShapeMismatch("need an integer 2-cochain")
    if set(e.values) != set(mu):
        raise ShapeMismatch("cochain and chain live on different triangle sets")
    return sum(int(e.values[s]) * int(mu[s]) for s in mu)
