"""Algebra of the circle and its isometry group.

Angles are measured in turns (full revolutions), so a quarter rotation is
0.25 and the exponential map is ``t -> (cos 2*pi*t, sin 2*pi*t)``.  An
isometry is a rotation optionally followed by conjugation (reflection in
the x axis), stored as a (turn, sign) pair; its matrix form is
``R(2*pi*turn) @ diag(1, sign)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DiameterTooLarge, NonUniqueArc, ReflectionHasNoLog

TWO_PI = 2.0 * math.pi

# Ties between circular gaps closer than this are treated as exact.
_GAP_TIE_TOL = 1e-12


@dataclass(frozen=True)
class O2:
    """Isometry of the circle: rotate by ``turn``, reflect first if ``sign`` is -1.

    Attributes
    ----------
    turn : float
        Rotation amount in turns, normalized to [0, 1).
    sign : int
        +1 for a rotation, -1 for a reflection (the determinant).
    """

    turn: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        object.__setattr__(self, "turn", self.turn % 1.0)

    @property
    def matrix(self) -> np.ndarray:
        c = math.cos(TWO_PI * self.turn)
        s = math.sin(TWO_PI * self.turn)
        return np.array([[c, -s * self.sign], [s, c * self.sign]])

    def inverse(self) -> "O2":
        if self.sign == 1:
            return O2(-self.turn, 1)
        # reflections are involutions
        return O2(self.turn, -1)


IDENTITY = O2(0.0, 1)


def o2_compose(a: O2, b: O2) -> O2:
    """Composition a then-apply-after b, i.e. the product of matrix forms.

    The turn of the product is ``a.turn + a.sign * b.turn`` modulo 1 and
    the signs multiply.
    """
    return O2(a.turn + a.sign * b.turn, a.sign * b.sign)


def o2_inverse(a: O2) -> O2:
    return a.inverse()


def o2_apply(a: O2, p: np.ndarray) -> np.ndarray:
    """Apply an isometry to points of shape (..., 2)."""
    p = np.asarray(p, dtype=float)
    return p @ a.matrix.T


def exp_so2(t: float) -> O2:
    """Rotation by ``t`` turns."""
    return O2(t % 1.0, 1)


def log_so2(a: O2) -> float:
    """Principal logarithm of a rotation, in turns.

    Returns
    -------
    float
        The unique t in (-1/2, 1/2] with ``exp_so2(t) == a``.

    Raises
    ------
    ReflectionHasNoLog
        If ``a`` is orientation reversing.
    """
    if a.sign != 1:
        raise ReflectionHasNoLog("log requested for a reflection")
    return principal_turn(a.turn)


def principal_turn(t: float) -> float:
    """Representative of ``t`` modulo 1 in the branch (-1/2, 1/2]."""
    r = t % 1.0
    return r if r <= 0.5 else r - 1.0


def s1_point(turn: float) -> np.ndarray:
    """Unit vector at the given angle; also accepts arrays of turns."""
    t = np.asarray(turn, dtype=float) * TWO_PI
    return np.stack([np.cos(t), np.sin(t)], axis=-1)


def s1_angle(p: np.ndarray) -> np.ndarray:
    """Angle of unit vectors in turns, in [0, 1); inverse of ``s1_point``."""
    p = np.asarray(p, dtype=float)
    return np.arctan2(p[..., 1], p[..., 0]) / TWO_PI % 1.0


def s1_distance(p: np.ndarray, q: np.ndarray) -> tuple[float, float]:
    """Chord and geodesic distance between two unit vectors.

    Returns
    -------
    (chord, geodesic) : tuple of floats
        Euclidean norm of the difference, and arc length in radians.
        They satisfy ``chord = 2 sin(geodesic / 2)``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    chord = float(np.linalg.norm(p - q))
    geodesic = 2.0 * math.asin(min(1.0, chord / 2.0))
    return chord, geodesic


def chord_distances(pa: np.ndarray, pb: np.ndarray) -> np.ndarray:
    """Elementwise chord distance between arrays of unit vectors."""
    return np.linalg.norm(np.asarray(pa, float) - np.asarray(pb, float), axis=-1)


def turn_chord(dt) -> np.ndarray:
    """Chord distance between angles separated by ``dt`` turns."""
    return 2.0 * np.abs(np.sin(np.pi * np.asarray(dt, dtype=float)))


def o2_frobenius_distance(a: O2, b: O2) -> float:
    """Frobenius norm of the difference of matrix forms.

    Equals ``2*sqrt(2)*|sin(pi*(a.turn - b.turn))|`` when the signs match
    and is at least 2 when they differ.
    """
    if a.sign == b.sign:
        return math.sqrt(8.0) * abs(math.sin(math.pi * (a.turn - b.turn)))
    return float(np.linalg.norm(a.matrix - b.matrix))


@dataclass(frozen=True)
class ArcSummary:
    """Shortest arc containing a set of angles.

    ``width = 1 - max_gap`` and the midpoint lies halfway along the arc.
    All three fields are in turns.
    """

    midpoint: float
    width: float
    max_gap: float


def shortest_enclosing_arc(angles: Sequence[float]) -> ArcSummary:
    """Shortest arc of the circle containing every given angle.

    The arc is the complement of the largest circular gap between
    consecutive sorted angles.

    Raises
    ------
    NonUniqueArc
        If two gaps tie for the maximum; the error lists every tied
        candidate midpoint so the caller can decide.
    ValueError
        If the list is empty.
    """
    a = np.sort(np.asarray(angles, dtype=float) % 1.0)
    if a.size == 0:
        raise ValueError("no angles given")
    if a.size == 1:
        return ArcSummary(midpoint=float(a[0]), width=0.0, max_gap=1.0)
    gaps = np.diff(a, append=a[0] + 1.0)
    g = float(np.max(gaps))
    tied = np.flatnonzero(gaps >= g - _GAP_TIE_TOL)
    if tied.size > 1:
        mids = [float((a[(i + 1) % a.size] + (1.0 - gaps[i]) / 2.0) % 1.0) for i in tied]
        raise NonUniqueArc(
            f"{tied.size} circular gaps tie for the maximum ({g:.17g} turns)", mids
        )
    i = int(tied[0])
    width = 1.0 - g
    start = a[(i + 1) % a.size] % 1.0  # arc runs from the gap's far end
    return ArcSummary(midpoint=float((start + width / 2.0) % 1.0), width=width, max_gap=g)


def karcher_mean(points: np.ndarray, weights: Sequence[float]) -> np.ndarray:
    """Weighted Karcher (Frechet) mean of points on the circle.

    The minimizer of the weighted sum of squared geodesic distances,
    computed in closed form: re-center at the first point of positive
    weight, average the principal-branch logs, exponentiate.

    Parameters
    ----------
    points : ndarray of shape (n, 2)
        Unit vectors.
    weights : sequence of n nonnegative floats
        Must sum to 1 within 1e-9.

    Raises
    ------
    DiameterTooLarge
        If the points do not fit in an open half circle.  Outside that
        range the mean need not be unique and the closed form is invalid.
    """
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] != w.size:
        raise ValueError("points must be (n, 2) with matching weights")
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    pos = np.flatnonzero(w > 0)
    if pos.size == 0:
        raise ValueError("all weights are zero")
    ang = s1_angle(pts)
    support = ang[pos]
    if pos.size > 1:
        width = enclosing_width(support)
        if width >= 0.5:
            raise DiameterTooLarge(
                f"points span {width:.6f} turns, not contained in a half circle"
            )
    center = float(ang[pos[0]])
    rel = np.array([principal_turn(t - center) for t in support])
    mean = center + float(np.dot(w[pos], rel))
    return s1_point(mean % 1.0)


def enclosing_width(angles: Sequence[float]) -> float:
    """Width in turns of the shortest arc containing the angles.

    Unlike ``shortest_enclosing_arc`` this never raises on gap ties,
    since tied gaps share a width.
    """
    a = np.sort(np.asarray(angles, dtype=float) % 1.0)
    if a.size <= 1:
        return 0.0
    gaps = np.diff(a, append=a[0] + 1.0)
    return 1.0 - float(np.max(gaps))
