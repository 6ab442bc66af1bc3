"""Convex rate regions in the nonnegative quadrant.

Regions are closed convex polygons stored as counter-clockwise vertex arrays
starting at the origin.  Degenerate regions (a point, a segment) are allowed.
All predicates use an absolute tolerance of ``EPS`` on cross products.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

EPS = 1e-12


@dataclass(frozen=True)
class RatePentagon:
    """``{0 <= R1 <= a, 0 <= R2 <= b, R1 + R2 <= c}``; negative caps are clamped to 0."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, max(0.0, float(getattr(self, name))))

    def tight(self) -> tuple[float, float, float]:
        """Caps with redundant slack removed: (min(a,c), min(b,c), min(c, a+b))."""
        a, b, c = self.a, self.b, self.c
        a2, b2 = min(a, c), min(b, c)
        return a2, b2, min(c, a2 + b2)

    def vertices(self) -> np.ndarray:
        a, b, c = self.tight()
        pts = [(0.0, 0.0), (a, 0.0), (a, c - a), (c - b, b), (0.0, b)]
        return np.array(pts)

    def to_region(self) -> "RateRegion":
        return pentagon_to_region(self)

    def __add__(self, other: "RatePentagon") -> "RatePentagon":
        return RatePentagon(self.a + other.a, self.b + other.b, self.c + other.c)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _span(o, a, b) -> float:
    return math.hypot(a[0] - o[0], a[1] - o[1]) * math.hypot(b[0] - o[0], b[1] - o[1])


def convex_hull(points: Iterable[Sequence[float]], eps: float = EPS) -> np.ndarray:
    """Andrew's monotone chain; collinear and duplicate points are dropped.

    Collinearity is judged on the sine of the turn angle, so the test does not
    depend on the scale of the region.
    """
    pts = sorted(set((float(p[0]), float(p[1])) for p in points))
    if len(pts) <= 1:
        return np.array(pts, dtype=float).reshape(-1, 2)

    def chain(seq):
        out: list = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= eps * _span(out[-2], out[-1], p):
                out.pop()
            out.append(p)
        return out

    lower = chain(pts)
    upper = chain(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    # Merge near-duplicates left by tolerance.
    dedup: list = []
    for p in hull:
        if not dedup or math.hypot(p[0] - dedup[-1][0], p[1] - dedup[-1][1]) > eps:
            dedup.append(p)
    if len(dedup) > 1 and math.hypot(dedup[0][0] - dedup[-1][0], dedup[0][1] - dedup[-1][1]) <= eps:
        dedup.pop()
    return np.array(dedup, dtype=float)


def _rotate_to_origin(v: np.ndarray) -> np.ndarray:
    if len(v) == 0:
        return np.zeros((1, 2))
    k = int(np.argmin(v[:, 0] ** 2 + v[:, 1] ** 2 + 1e-3 * (v[:, 0] + v[:, 1])))
    return np.roll(v, -k, axis=0)


@dataclass(frozen=True, eq=False)
class RateRegion:
    vertices: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_points(cls, points, meta: dict | None = None, clip_origin: bool = True) -> "RateRegion":
        pts = [tuple(p) for p in np.asarray(points, dtype=float).reshape(-1, 2)]
        if clip_origin:
            pts.append((0.0, 0.0))
        v = _rotate_to_origin(convex_hull(pts))
        v = np.where(np.abs(v) <= EPS, 0.0, v)
        return cls(v, dict(meta or {}))

    @classmethod
    def origin(cls) -> "RateRegion":
        return cls(np.zeros((1, 2)))

    def check(self) -> list[str]:
        v = self.vertices
        bad = []
        if np.any(v < -EPS):
            bad.append("negative coordinates")
        if not self.contains_point((0.0, 0.0)):
            bad.append("does not contain the origin")
        m = len(v)
        if m >= 3:
            for i in range(m):
                if _cross(v[i], v[(i + 1) % m], v[(i + 2) % m]) < -EPS:
                    bad.append(f"non-convex turn at vertex {(i + 1) % m}")
        return bad

    def halfplanes(self) -> list[tuple[np.ndarray, float]]:
        """``(normal, offset)`` pairs with ``normal . x <= offset`` describing the region."""
        v = self.vertices
        m = len(v)
        if m == 1:
            p = v[0]
            return [(np.array([1.0, 0.0]), p[0]), (np.array([-1.0, 0.0]), -p[0]),
                    (np.array([0.0, 1.0]), p[1]), (np.array([0.0, -1.0]), -p[1])]
        if m == 2:
            p, q = v
            d = q - p
            nrm = np.array([-d[1], d[0]])
            return [(nrm, nrm @ p), (-nrm, -(nrm @ p)), (d, d @ q), (-d, -(d @ p))]
        out = []
        for i in range(m):
            p, q = v[i], v[(i + 1) % m]
            d = q - p
            nrm = np.array([d[1], -d[0]])  # outward for CCW order
            out.append((nrm, float(nrm @ p)))
        return out

    def distance_to(self, point) -> float:
        """Euclidean distance from ``point`` to the region (0 inside)."""
        x = np.asarray(point, dtype=float)
        v = self.vertices
        m = len(v)
        if m >= 3 and self.contains_point(x, tol=0.0):
            return 0.0
        if m == 1:
            return float(np.linalg.norm(x - v[0]))
        best = math.inf
        for i in range(m if m >= 3 else 1):
            p, q = v[i], v[(i + 1) % m]
            d = q - p
            dd = float(d @ d)
            t = 0.0 if dd == 0 else min(1.0, max(0.0, float((x - p) @ d) / dd))
            best = min(best, float(np.linalg.norm(x - (p + t * d))))
        return best

    def contains_point(self, point, tol: float = EPS) -> bool:
        x = np.asarray(point, dtype=float)
        if len(self.vertices) < 3:
            return self.distance_to(x) <= max(tol, EPS)
        for nrm, off in self.halfplanes():
            if nrm @ x - off > tol * max(1.0, float(np.linalg.norm(nrm))):
                return False
        return True

    def area(self) -> float:
        v = self.vertices
        if len(v) < 3:
            return 0.0
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist(), "meta": self.meta}

    @classmethod
    def from_json(cls, d: dict) -> "RateRegion":
        return cls.from_points(d["vertices"], meta=d.get("meta", {}))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r1", "r2"])
        for r1, r2 in self.vertices:
            w.writerow([repr(float(r1)), repr(float(r2))])
        return buf.getvalue()

    def same_as(self, other: "RateRegion", tol: float = 1e-12) -> bool:
        return hausdorff(self, other) <= tol


def pentagon_to_region(p: RatePentagon) -> RateRegion:
    return RateRegion.from_points(p.vertices())


def region_to_pentagon(region: RateRegion) -> RatePentagon:
    """Read back (a, b, c) as the region's support in the R1, R2 and sum directions."""
    v = region.vertices
    return RatePentagon(float(v[:, 0].max()), float(v[:, 1].max()), float((v[:, 0] + v[:, 1]).max()))


def _edge_sequence(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start vertex (lowest, then leftmost) and CCW edges from it."""
    k = int(np.lexsort((v[:, 0], v[:, 1]))[0])
    v = np.roll(v, -k, axis=0)
    if len(v) == 1:
        return v[0], np.zeros((0, 2))
    edges = np.roll(v, -1, axis=0) - v
    return v[0], edges


def _angle(e: np.ndarray) -> float:
    a = math.atan2(e[1], e[0])
    return a + 2 * math.pi if a < 0 else a


def minkowski_sum(a: RateRegion, b: RateRegion) -> RateRegion:
    """Minkowski sum by merging the two boundaries' edges in angle order."""
    pa, ea = _edge_sequence(a.vertices)
    pb, eb = _edge_sequence(b.vertices)
    cur = pa + pb
    pts = [cur.copy()]
    ang_a = [_angle(e) for e in ea]
    ang_b = [_angle(e) for e in eb]
    i = j = 0
    while i < len(ea) or j < len(eb):
        if j >= len(eb) or (i < len(ea) and ang_a[i] <= ang_b[j]):
            cur = cur + ea[i]
            i += 1
        else:
            cur = cur + eb[j]
            j += 1
        pts.append(cur.copy())
    meta = {"op": "minkowski_sum"}
    return RateRegion.from_points(pts, meta=meta, clip_origin=False)


def minkowski_sum_oracle(a: RateRegion, b: RateRegion) -> RateRegion:
    pts = [p + q for p in a.vertices for q in b.vertices]
    return RateRegion.from_points(pts, clip_origin=False)


def scale(c: float, a: RateRegion) -> RateRegion:
    if c < 0:
        raise ValueError("scale factor must be nonnegative")
    if c == 0:
        return RateRegion.origin()
    return RateRegion(a.vertices * c, dict(a.meta))


def hull_of_union(regions: Sequence[RateRegion]) -> RateRegion:
    if not regions:
        raise ValueError("hull_of_union needs at least one region")
    pts = np.vstack([r.vertices for r in regions])
    return RateRegion.from_points(pts)


def _clip(poly: list, nrm: np.ndarray, off: float) -> list:
    """Sutherland-Hodgman step keeping ``nrm . x <= off``."""
    if not poly:
        return poly
    out = []
    scale_ = max(1.0, float(np.linalg.norm(nrm)))
    m = len(poly)
    for k in range(m):
        p, q = poly[k], poly[(k + 1) % m]
        fp, fq = nrm @ p - off, nrm @ q - off
        in_p, in_q = fp <= EPS * scale_, fq <= EPS * scale_
        if in_p:
            out.append(p)
        if in_p != in_q and m > 1:
            t = fp / (fp - fq)
            out.append(p + t * (q - p))
    return out


def intersect(regions: Sequence[RateRegion]) -> RateRegion:
    """Intersection by clipping the first region against every other's half-planes."""
    if not regions:
        raise ValueError("intersect needs at least one region")
    poly = [np.array(p) for p in regions[0].vertices]
    for r in regions[1:]:
        for nrm, off in r.halfplanes():
            poly = _clip(poly, nrm, off)
    if not poly:
        return RateRegion.origin()
    return RateRegion.from_points(poly)


def support(a: RateRegion, direction) -> tuple[float, np.ndarray]:
    """Max of ``direction . x`` over the region; ties go to the lexicographically largest vertex."""
    d = np.asarray(direction, dtype=float)
    if not np.any(d):
        raise ValueError("direction must be non-zero")
    vals = a.vertices @ d
    best = float(vals.max())
    cand = a.vertices[vals >= best - EPS]
    order = np.lexsort((cand[:, 1], cand[:, 0]))
    return best, cand[order[-1]].copy()


def pentagon_support(abc: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Vectorized support of pentagons ``abc[..., 3]`` in each of ``directions[D, 2]``."""
    abc = np.maximum(np.asarray(abc, dtype=float), 0.0)
    a = np.minimum(abc[..., 0], abc[..., 2])
    b = np.minimum(abc[..., 1], abc[..., 2])
    c = np.minimum(abc[..., 2], a + b)
    l1 = directions[:, 0]
    l2 = directions[:, 1]
    a, b, c = a[..., None], b[..., None], c[..., None]
    cands = np.stack([l1 * a, l1 * a + l2 * (c - a), l1 * (c - b) + l2 * b, l2 * b], axis=-1)
    return np.maximum(cands.max(axis=-1), 0.0)


def quadrant_directions(count: int) -> np.ndarray:
    """``count + 1`` unit vectors at angles ``(pi/2) k / count``; nested under doubling."""
    if count < 1:
        raise ValueError("need at least one direction interval")
    th = 0.5 * np.pi * np.arange(count + 1) / count
    d = np.stack([np.cos(th), np.sin(th)], axis=1)
    d[np.abs(d) < 1e-15] = 0.0
    return d


def hausdorff(a: RateRegion, b: RateRegion) -> float:
    """Symmetric Hausdorff distance; vertex-to-polygon distances suffice for convex sets."""
    d1 = max(b.distance_to(p) for p in a.vertices)
    d2 = max(a.distance_to(p) for p in b.vertices)
    return max(d1, d2)


def containment_violation(outer: RateRegion, inner: RateRegion) -> float:
    """Largest distance from a vertex of ``inner`` to ``outer`` (0 when contained)."""
    return max(outer.distance_to(p) for p in inner.vertices)


# ---------------------------------------------------------------------------
# Sup/sub-additivity diagnostics
# ---------------------------------------------------------------------------

@dataclass
class TripleCheck:
    n: int
    m: int
    total: int
    violation: float
    ok: bool


@dataclass
class AdditivityReport:
    kind: str  # "superadditive" | "subadditive"
    tolerance: float
    triples: list[TripleCheck]
    convexified: bool = True

    @property
    def ok(self) -> bool:
        return all(t.ok for t in self.triples)

    @property
    def worst(self) -> float:
        return max((t.violation for t in self.triples), default=0.0)

    def to_json(self) -> dict:
        return {"kind": self.kind, "tolerance": self.tolerance, "ok": self.ok, "worst": self.worst,
                "convexified": self.convexified,
                "triples": [{"n": t.n, "m": t.m, "N": t.total, "violation": t.violation, "ok": t.ok}
                            for t in self.triples]}


def _triples(indices: Sequence[int], triples=None) -> list[tuple[int, int, int]]:
    have = set(indices)
    if triples is not None:
        out = []
        for n, m in triples:
            for k in (n, m, n + m):
                if k not in have:
                    raise ValueError(f"index {k} needed by triple ({n}, {m}, {n + m}) is missing")
            out.append((n, m, n + m))
        return out
    out = [(n, big - n, big) for big in sorted(have) for n in sorted(have)
           if n <= big - n and (big - n) in have]
    if not out:
        raise ValueError(f"indices {sorted(have)} admit no (n, N-n, N) triple; need at least two indices")
    return out


def _additivity(seq, tol: float, kind: str, triples=None) -> AdditivityReport:
    regions = dict(seq)
    if len(regions) < 2:
        raise ValueError("need regions for at least two block lengths")
    out = []
    for n, m, big in _triples(list(regions), triples):
        lhs = scale(big, regions[big])
        rhs = minkowski_sum(scale(n, regions[n]), scale(m, regions[m]))
        viol = containment_violation(lhs, rhs) if kind == "superadditive" else containment_violation(rhs, lhs)
        out.append(TripleCheck(n, m, big, viol, viol <= tol))
    return AdditivityReport(kind, tol, out)


def check_superadditive(seq: Sequence[tuple[int, RateRegion]], tol: float = 1e-9,
                        triples=None) -> AdditivityReport:
    """Check ``N A_N  ⊇  n A_n + (N-n) A_{N-n}`` on every available triple."""
    return _additivity(seq, tol, "superadditive", triples)


def check_subadditive(seq: Sequence[tuple[int, RateRegion]], tol: float = 1e-9,
                      triples=None) -> AdditivityReport:
    """Check ``N A_N  ⊆  n A_n + (N-n) A_{N-n}`` on every available triple."""
    return _additivity(seq, tol, "subadditive", triples)


def convergence_trace(seq: Sequence[tuple[int, RateRegion]], mode: str) -> list[tuple[int, float]]:
    """Hausdorff steps between successive hull-of-union (``"union"``) or intersection accumulations."""
    items = sorted(seq, key=lambda t: t[0])
    acc = items[0][1]
    out = []
    for n, r in items[1:]:
        nxt = hull_of_union([acc, r]) if mode == "union" else intersect([acc, r])
        out.append((n, hausdorff(acc, nxt)))
        acc = nxt
    return out


def load_region(path) -> RateRegion:
    with open(path) as fh:
        return RateRegion.from_json(json.load(fh))
