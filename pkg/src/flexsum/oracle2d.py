"""Exact two-dimensional ground truth: vertex enumeration, polygon Minkowski
sums, and areas.

These brute-force routines are intentionally limited to the plane, where
vertex enumeration is cheap; they provide the independent reference values
used to validate the LP-based approximations. Everything works on
counterclockwise vertex cycles stored as (k, 2) arrays.
"""

import numpy as np

from .errors import DomainError
from .polytope import HPolytope, chebyshev_center, contains_point, support_point

#: absolute tolerance tuned for coordinates of order ten
ORACLE_TOL = 1e-9
_DEDUPE_TOL = 1e-7


def _check_bounded(p: HPolytope) -> None:
    for direction in ((1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)):
        try:
            support_point(p, np.asarray(direction))
        except DomainError as exc:
            raise DomainError(f"polytope is not a bounded polygon: {exc}") from exc


def vertices_of_hpolygon(p: HPolytope, tol: float = ORACLE_TOL) -> np.ndarray:
    """Counterclockwise vertex cycle of a bounded, full-dimensional 2D polytope.

    Candidate points come from all pairwise halfplane intersections; those
    violating any constraint are discarded, duplicates merged, and the rest
    ordered by angle around the Chebyshev center. Redundant halfspaces drop
    out naturally.
    """
    if p.dim != 2:
        raise DomainError(f"expected a 2D polytope, got dimension {p.dim}")
    center, radius = chebyshev_center(p)
    if radius <= tol:
        raise DomainError("polytope is empty or lower-dimensional")
    _check_bounded(p)
    A, b = p.A, p.b
    m = A.shape[0]
    scale = max(1.0, float(np.max(np.abs(b))))
    candidates = []
    for i in range(m):
        for j in range(i + 1, m):
            M = np.array([A[i], A[j]])
            det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
            if abs(det) <= 1e-12 * max(1.0, np.abs(M).max() ** 2):
                continue
            point = np.linalg.solve(M, np.array([b[i], b[j]]))
            if np.all(A @ point <= b + tol * (1.0 + np.abs(b))):
                candidates.append(point)
    if len(candidates) < 3:
        raise DomainError("could not recover a full-dimensional polygon")
    points = np.array(candidates)
    keep: list[np.ndarray] = []
    for point in points:
        if all(np.max(np.abs(point - q)) > _DEDUPE_TOL * scale for q in keep):
            keep.append(point)
    vertices = np.array(keep)
    angles = np.arctan2(vertices[:, 1] - center[1], vertices[:, 0] - center[0])
    return vertices[np.argsort(angles)]


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area of a simple counterclockwise polygon."""
    v = np.atleast_2d(np.asarray(vertices, dtype=float))
    if v.shape[0] < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _lowest_start(v: np.ndarray) -> np.ndarray:
    start = np.lexsort((v[:, 0], v[:, 1]))[0]
    return np.roll(v, -start, axis=0)


def _collapse(vertices: list[np.ndarray]) -> np.ndarray:
    """Drop repeated points and merge collinear consecutive edges."""
    out: list[np.ndarray] = []
    for point in vertices:
        if out and np.max(np.abs(point - out[-1])) <= _DEDUPE_TOL:
            continue
        out.append(point)
    if len(out) > 1 and np.max(np.abs(out[0] - out[-1])) <= _DEDUPE_TOL:
        out.pop()
    changed = True
    while changed and len(out) > 2:
        changed = False
        for i in range(len(out)):
            prev = out[i - 1]
            cur = out[i]
            nxt = out[(i + 1) % len(out)]
            cross = (cur[0] - prev[0]) * (nxt[1] - prev[1]) - (cur[1] - prev[1]) * (nxt[0] - prev[0])
            if abs(cross) <= 1e-9 * max(1.0, np.abs(np.array([prev, cur, nxt])).max() ** 2):
                out.pop(i)
                changed = True
                break
    return np.array(out)


def minkowski_sum_polygons(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Minkowski sum of two convex counterclockwise polygons by edge-angle merge.

    The edge sequences of both summands, each sorted by polar angle when
    traversed from the bottom-most vertex, interleave into the edge sequence
    of the sum; collinear edges merge, so the result has at most |P| + |Q|
    vertices.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if P.shape[0] == 1:
        return _collapse(list(Q + P[0]))
    if Q.shape[0] == 1:
        return _collapse(list(P + Q[0]))
    P = _lowest_start(P)
    Q = _lowest_start(Q)

    def edge_angles(v: np.ndarray) -> np.ndarray:
        edges = np.roll(v, -1, axis=0) - v
        ang = np.arctan2(edges[:, 1], edges[:, 0])
        # traversal from the bottom-most vertex keeps angles in [0, 2*pi)
        return np.where(ang < -1e-12, ang + 2 * np.pi, np.maximum(ang, 0.0))

    ap, aq = edge_angles(P), edge_angles(Q)
    ep = np.roll(P, -1, axis=0) - P
    eq = np.roll(Q, -1, axis=0) - Q
    i = j = 0
    point = P[0] + Q[0]
    out = [point.copy()]
    while i < len(P) or j < len(Q):
        if j >= len(Q):
            step = ep[i]; i += 1
        elif i >= len(P):
            step = eq[j]; j += 1
        elif ap[i] < aq[j] - 1e-12:
            step = ep[i]; i += 1
        elif aq[j] < ap[i] - 1e-12:
            step = eq[j]; j += 1
        else:
            step = ep[i] + eq[j]; i += 1; j += 1
        point = point + step
        out.append(point.copy())
    return _collapse(out)


def exact_sum(polytopes: list[HPolytope], tol: float = ORACLE_TOL) -> tuple[np.ndarray, float]:
    """Exact Minkowski sum of 2D H-polytopes: vertex cycle and shoelace area."""
    if not polytopes:
        raise DomainError("need at least one polytope")
    result = vertices_of_hpolygon(polytopes[0], tol=tol)
    for p in polytopes[1:]:
        result = minkowski_sum_polygons(result, vertices_of_hpolygon(p, tol=tol))
    return result, polygon_area(result)
