"""Two-cluster fiber labels: the connectivity sign class and base unwrapping.

A bundle whose fiber is two disjoint circles carries a sign 1-cocycle nu
recording whether the component labels flip across each overlap.  When
nu is a coboundary the total space splits into two circle bundles over
the same base; when it is not, the base unwraps to its double cover and
the labels select a lift of every base point.  For antipodal-quotient
bases the lift is concrete: each cluster picks a hemisphere around its
set's (signed) center, and a breadth-first search over the cluster graph
propagates the hemisphere choices.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from .cochains import Cochain, check_sign_cocycle
from .errors import InconsistentClusters, LiftUndefined, PropagationConflict
from .intlinalg import solve_gf2
from .nerve import BundleDataset, CoverSet, Nerve, build_nerve

log = logging.getLogger(__name__)

# base-point dot products against a set center smaller than this cannot
# select a hemisphere
PERP_TOL = 1e-12


def _validated_clusters(clusters: dict) -> dict[int, tuple[frozenset, frozenset]]:
    out = {}
    for j, parts in clusters.items():
        if len(parts) != 2:
            raise InconsistentClusters(f"set {j} needs exactly two clusters")
        a, b = frozenset(parts[0]), frozenset(parts[1])
        if not a or not b:
            raise InconsistentClusters(f"set {j} has an empty cluster")
        if a & b:
            raise InconsistentClusters(f"clusters of set {j} overlap")
        out[j] = (a, b)
    return out


def connectivity_cocycle(clusters: dict, nerve: Nerve) -> Cochain:
    """Sign 1-cochain of two-cluster labels: -1 where the labels flip.

    On every edge the shared samples must realize exactly the two
    matching label combinations (plus/plus with minus/minus, or
    plus/minus with minus/plus); anything else is inconsistent data.
    The result is validated to be a cocycle on the nerve's triangles.
    """
    cl = _validated_clusters(clusters)
    vals = {}
    for (j, k) in nerve.edges:
        if j not in cl or k not in cl:
            raise InconsistentClusters(f"edge ({j}, {k}) has an unlabeled set")
        pj, mj = cl[j]
        pk, mk = cl[k]
        pp = bool(pj & pk)
        pm = bool(pj & mk)
        mp = bool(mj & pk)
        mm = bool(mj & mk)
        if (pp, pm, mp, mm) == (True, False, False, True):
            vals[(j, k)] = 1
        elif (pp, pm, mp, mm) == (False, True, True, False):
            vals[(j, k)] = -1
        else:
            raise InconsistentClusters(
                f"edge ({j}, {k}) meets label combinations "
                f"(++, +-, -+, --) = {(pp, pm, mp, mm)}"
            )
    nu = Cochain(nerve, 1, "Z2", vals)
    check_sign_cocycle(nu)
    return nu


@dataclass
class UnwrapResult:
    """A dataset lifted to the double cover selected by the labels.

    Attributes
    ----------
    dataset : BundleDataset
        Same sample ids; base points replaced by their chosen lifts when
        the cover unwrapped geometrically.
    cover : list of CoverSet
        Two sets per original set; old id j becomes 2j and 2j + 1 for
        the first and second cluster.
    set_map : dict
        New set id -> (old set id, cluster index).
    components : int
        Connected components of the lifted cover's overlap graph.
    orientations : dict
        New set id -> +-1 hemisphere orientation, for sets that were
        lifted geometrically; absent ids belong to split components.
    """

    dataset: BundleDataset
    cover: list[CoverSet]
    set_map: dict
    components: int
    orientations: dict


def _is_coboundary_on(comp: list[int], edges: list[tuple], nu_vals: dict) -> bool:
    """Does nu restricted to the component bound a vertex sign pattern?"""
    col = {j: i for i, j in enumerate(comp)}
    A = np.zeros((len(edges), len(comp)), dtype=np.uint8)
    b = np.zeros(len(edges), dtype=np.uint8)
    for i, (j, k) in enumerate(edges):
        A[i, col[j]] = 1
        A[i, col[k]] = 1
        b[i] = 0 if nu_vals[(j, k)] == 1 else 1
    return solve_gf2(A, b) is not None


def unwrap_double_cover(
    dataset: BundleDataset,
    cover: list[CoverSet],
    clusters: dict,
    nu: Cochain | None = None,
) -> UnwrapResult:
    """Split or unwrap a two-cluster dataset along its connectivity class.

    Per connected piece of the cover: if the sign class is a coboundary
    the piece splits into two disjoint copies and base points are left
    alone.  Otherwise the base must be an antipodal quotient; every
    cluster gets a hemisphere orientation by breadth-first propagation
    from an arbitrary seed (the seed set's two clusters start opposite),
    and each sample's base point is replaced by the representative on
    its cluster's hemisphere.
    """
    cl = _validated_clusters(clusters)
    by_id = {c.id: c for c in cover}
    if set(cl) != set(by_id):
        raise InconsistentClusters("cluster labels and cover sets disagree")
    for j, (plus, minus) in cl.items():
        if plus | minus != by_id[j].members:
            raise InconsistentClusters(
                f"clusters of set {j} do not partition its members"
            )
    nerve = build_nerve(cover)
    derived = connectivity_cocycle(clusters, nerve)
    if nu is not None and dict(nu.values) != dict(derived.values):
        raise InconsistentClusters("supplied sign class disagrees with the labels")
    nu = derived

    adjacency: dict[int, set[int]] = {v[0]: set() for v in nerve.vertices}
    for (j, k) in nerve.edges:
        adjacency[j].add(k)
        adjacency[k].add(j)
    seen: set[int] = set()
    pieces: list[list[int]] = []
    for start in sorted(adjacency):
        if start in seen:
            continue
        queue = deque([start])
        seen.add(start)
        piece = []
        while queue:
            j = queue.popleft()
            piece.append(j)
            for k in sorted(adjacency[j]):
                if k not in seen:
                    seen.add(k)
                    queue.append(k)
        pieces.append(sorted(piece))

    base = np.array(dataset.base, dtype=float, copy=True)
    orientations: dict[int, int] = {}
    components = 0
    geometric = False

    labeled = {s for parts in cl.values() for part in parts for s in part}
    orphans = [s for s in dataset.ids if s not in labeled]
    if orphans:
        log.warning("%d samples belong to no cover set; their base points "
                    "pass through unlifted", len(orphans))

    for piece in pieces:
        members = set(piece)
        piece_edges = [e for e in nerve.edges if e[0] in members]
        if _is_coboundary_on(piece, piece_edges, nu.values):
            # trivial class: the piece separates into two untouched copies
            components += 2
            continue

        # nontrivial class: unwrap the base geometrically
        if dataset.kind != "projective_plane":
            raise ValueError(
                "nontrivial connectivity class over a "
                f"{dataset.kind!r} base; only antipodal-quotient bases "
                "unwrap geometrically"
            )
        centers = {}
        for j in piece:
            if by_id[j].center is None:
                raise ValueError(f"set {j} has no center; cannot pick hemispheres")
            centers[j] = by_id[j].center

        rel: dict[tuple, list] = {(j, c): [] for j in piece for c in (0, 1)}
        for (j, k) in piece_edges:
            for cj in (0, 1):
                for ck in (0, 1):
                    shared = cl[j][cj] & cl[k][ck]
                    if not shared:
                        continue
                    signs = set()
                    for s in sorted(shared):
                        v = dataset.base_of(s)
                        dj = float(v @ centers[j])
                        dk = float(v @ centers[k])
                        if abs(dj) < PERP_TOL or abs(dk) < PERP_TOL:
                            raise LiftUndefined(
                                f"sample {s} sits on the boundary of a "
                                "hemisphere around its set center"
                            )
                        signs.add(1 if dj * dk > 0 else -1)
                    if len(signs) > 1:
                        raise PropagationConflict(
                            f"overlap of clusters ({j},{cj}) and ({k},{ck}) "
                            "straddles the antipodal seam"
                        )
                    r = signs.pop()
                    rel[(j, cj)].append(((k, ck), r))
                    rel[(k, ck)].append(((j, cj), r))

        seed = min(piece)
        orient = {(seed, 0): 1, (seed, 1): -1}
        queue = deque([(seed, 0), (seed, 1)])
        while queue:
            node = queue.popleft()
            for other, r in rel[node]:
                want = orient[node] * r
                if other in orient:
                    if orient[other] != want:
                        raise PropagationConflict(
                            f"cluster {other} is reached with contradictory "
                            "hemisphere orientations"
                        )
                else:
                    orient[other] = want
                    queue.append(other)
        missing = [n for n in rel if n not in orient]
        if missing:
            raise PropagationConflict(
                f"cluster graph is disconnected; {missing[0]} was never reached"
            )
        for j in piece:
            if orient[(j, 0)] == orient[(j, 1)]:
                raise PropagationConflict(
                    f"both clusters of set {j} landed on the same sheet"
                )

        sample_sign: dict = {}
        for j in piece:
            for c in (0, 1):
                orientations[2 * j + c] = orient[(j, c)]
                axis = orient[(j, c)] * centers[j]
                for s in cl[j][c]:
                    v = dataset.base_of(s)
                    eta = 1 if float(v @ axis) > 0 else -1
                    prior = sample_sign.setdefault(s, eta)
                    if prior != eta:
                        raise PropagationConflict(
                            f"sample {s} needs two different lifts"
                        )
        for s, eta in sample_sign.items():
            base[dataset.position(s)] = eta * dataset.base_of(s)
        components += 1
        geometric = True

    new_cover = []
    set_map = {}
    for j in sorted(by_id):
        old = by_id[j]
        for c in (0, 1):
            nid = 2 * j + c
            o = orientations.get(nid, 1)
            center = None if old.center is None else o * old.center
            new_cover.append(
                CoverSet(id=nid, members=cl[j][c], center=center,
                         radius=old.radius, clipped=old.clipped)
            )
            set_map[nid] = (j, c)

    kind = "sphere" if geometric else dataset.kind
    distances = dataset.distances if kind == dataset.kind else None
    lifted = BundleDataset(ids=dataset.ids, base=base, kind=kind,
                           distances=distances)
    return UnwrapResult(dataset=lifted, cover=new_cover, set_map=set_map,
                        components=components, orientations=orientations)


def carry_charts(trivs, result: UnwrapResult):
    """Restrict chart tables to the split cover produced by an unwrap.

    Each split set keeps the angles of its parent chart on the samples it
    retained; the fiber data is untouched because the unwrap only relabels
    the base.  Parent sets absent from the trivialization are skipped.
    """
    from .witness import Trivialization

    charts = {}
    for cs in result.cover:
        j, _ = result.set_map[cs.id]
        parent = trivs.charts.get(j)
        if parent is None:
            continue
        charts[cs.id] = {s: parent[s] for s in cs.members if s in parent}
    return Trivialization(charts=charts)
