"""Electric chains on graphs and the star-triangle transformation.

The graph Laplacian convention is +c off the diagonal and -sum(c) on it,
so constant voltages carry no current and a free vertex is exactly a zero
row residual.  When every edge of the graph belongs to exactly one listed
black triangle, the Laplacian factorizes through the triangle space and
the star-triangle transformation becomes a Laplace-type transform between
vertex and triangle functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complexes import Complex2D
from .errors import (
    InvalidKStructure,
    IsolatedVertex,
    NoKernelVector,
    NonPositiveConductivity,
    ZeroW,
)


@dataclass(frozen=True)
class ElectricNetwork:
    """Graph with positive edge conductivities and optional black triangles."""

    n_vertices: int
    conductances: dict[tuple[int, int], float]
    black_triangles: tuple[tuple[int, int, int], ...] | None = None

    def __post_init__(self):
        vals = {}
        for (p, q), c in self.conductances.items():
            if p == q:
                raise NonPositiveConductivity("no self loops")
            if not (0 <= p < self.n_vertices and 0 <= q < self.n_vertices):
                raise NonPositiveConductivity(f"vertex out of range in edge {(p, q)}")
            if c <= 0:
                raise NonPositiveConductivity(f"edge {(p, q)} needs positive conductivity")
            vals[(min(p, q), max(p, q))] = float(c)
        object.__setattr__(self, "conductances", vals)
        if self.black_triangles is not None:
            tris = tuple(tuple(int(v) for v in t) for t in self.black_triangles)
            object.__setattr__(self, "black_triangles", tris)

    def neighbors(self, p: int):
        for (a, b), c in self.conductances.items():
            if a == p:
                yield b, c
            elif b == p:
                yield a, c

    def c(self, p: int, q: int) -> float:
        return self.conductances[(min(p, q), max(p, q))]


def laplacian(net: ElectricNetwork) -> np.ndarray:
    n = net.n_vertices
    mat = np.zeros((n, n))
    for (p, q), c in net.conductances.items():
        mat[p, q] += c
        mat[q, p] += c
        mat[p, p] -= c
        mat[q, q] -= c
    return mat


def total_current(net: ElectricNetwork, voltage: np.ndarray) -> np.ndarray:
    """(L U)(P) = sum over neighbors c * (U(P') - U(P))."""
    u = np.asarray(voltage, dtype=float)
    out = np.zeros(net.n_vertices)
    for (p, q), c in net.conductances.items():
        out[p] += c * (u[q] - u[p])
        out[q] += c * (u[p] - u[q])
    return out


def edge_currents(net: ElectricNetwork, voltage: np.ndarray) -> dict[tuple[int, int], float]:
    """Oriented currents J([p, q]) = c * (U(q) - U(p)) on canonical pairs."""
    u = np.asarray(voltage, dtype=float)
    return {(p, q): c * (u[q] - u[p]) for (p, q), c in net.conductances.items()}


def free_vertex_value(net: ElectricNetwork, voltage: np.ndarray, p: int) -> float:
    """Voltage making the total current at p vanish: the c-weighted mean."""
    num = 0.0
    den = 0.0
    for q, c in net.neighbors(p):
        num += voltage[q] * c
        den += c
    if den == 0.0:
        raise IsolatedVertex(f"vertex {p} has no neighbors")
    return num / den


@dataclass(frozen=True)
class KStructureInfo:
    """Validation outcome for the black-triangle 2-complex conditions."""

    triangle_of_edge: dict[tuple[int, int], int]
    vertex_triangle_counts: np.ndarray

    @property
    def vertex_condition_ok(self) -> bool:
        return bool(np.all(self.vertex_triangle_counts >= 3))


def require_k_structure(net: ElectricNetwork) -> KStructureInfo:
    """Check that the black triangles partition the edge set.

    Every edge must lie in exactly one listed triangle and every triangle
    edge must exist.  The companion condition (each vertex in at least 3
    triangles) is reported, not enforced: the classic octahedron example
    has only two black triangles per vertex.
    """
    if not net.black_triangles:
        raise InvalidKStructure("network carries no black triangles")
    owner: dict[tuple[int, int], int] = {}
    counts = np.zeros(net.n_vertices, dtype=int)
    for t, tri in enumerate(net.black_triangles):
        if len(set(tri)) != 3:
            raise InvalidKStructure(f"triangle {tri} is degenerate")
        for v in tri:
            counts[v] += 1
        for k in range(3):
            pair = (min(tri[k], tri[(k + 1) % 3]), max(tri[k], tri[(k + 1) % 3]))
            if pair not in net.conductances:
                raise InvalidKStructure(f"triangle edge {pair} missing from the graph")
            if pair in owner:
                raise InvalidKStructure(f"edge {pair} lies in two triangles")
            owner[pair] = t
    uncovered = set(net.conductances) - set(owner)
    if uncovered:
        raise InvalidKStructure(f"edges not covered by any triangle: {sorted(uncovered)}")
    return KStructureInfo(owner, counts)


# -- the star-triangle transformation ------------------------------------


def star_triangle_single(c1: float, c2: float, c3: float) -> tuple[float, float, float]:
    """Star conductivities replacing one triangle: S / c_i with
    S = c1 c2 + c1 c3 + c2 c3.

    c_i is the conductivity of the edge opposite vertex i; the effective
    two-terminal behavior is preserved.
    """
    if min(c1, c2, c3) <= 0:
        raise NonPositiveConductivity("triangle conductivities must be positive")
    s = c1 * c2 + c1 * c3 + c2 * c3
    return s / c1, s / c2, s / c3


def star_triangle_network(net: ElectricNetwork, voltage: np.ndarray):
    """Replace every black triangle by a star with a fresh center vertex.

    The old voltages persist; each center takes the weighted average that
    makes it a free vertex, which preserves the total current at every
    original vertex.
    """
    require_k_structure(net)
    u = np.asarray(voltage, dtype=float)
    n_old = net.n_vertices
    tris = net.black_triangles
    conduct = {}
    removed = set()
    for t, tri in enumerate(tris):
        p1, p2, p3 = tri
        c1 = net.c(p2, p3)
        c2 = net.c(p1, p3)
        c3 = net.c(p1, p2)
        s1, s2, s3 = star_triangle_single(c1, c2, c3)
        center = n_old + t
        conduct[(p1, center)] = s1
        conduct[(p2, center)] = s2
        conduct[(p3, center)] = s3
        removed.update({(min(a, b), max(a, b))
                        for a, b in ((p1, p2), (p2, p3), (p3, p1))})
    for pair, c in net.conductances.items():
        if pair not in removed:
            conduct[pair] = c
    new_net = ElectricNetwork(n_old + len(tris), conduct)
    new_u = np.zeros(n_old + len(tris))
    new_u[:n_old] = u
    for t, tri in enumerate(tris):
        new_u[n_old + t] = free_vertex_value(new_net, new_u, n_old + t)
    return new_net, new_u


# -- black-triangle factorization ----------------------------------------


@dataclass(frozen=True)
class BlackTriangleFactorization:
    """L = Q^+ (C')^{-1} Q - W over the black triangles.

    Q maps vertex functions to triangle functions with the star
    conductivities as coefficients; sigma is the triangle total C', and
    the vertex diagonal W makes the identity exact (its pure diagonality
    is certified by the residual).
    """

    triangles: tuple[tuple[int, int, int], ...]
    cprime: np.ndarray  # (T, 3) star conductivities
    sigma: np.ndarray   # (T,)
    w: np.ndarray       # (n_vertices,)
    residual: float


def black_factorization(net: ElectricNetwork) -> BlackTriangleFactorization:
    require_k_structure(net)
    tris = net.black_triangles
    n_t = len(tris)
    cprime = np.zeros((n_t, 3))
    for t, (p1, p2, p3) in enumerate(tris):
        cprime[t] = star_triangle_single(net.c(p2, p3), net.c(p1, p3), net.c(p1, p2))
    sigma = cprime.sum(axis=1)
    lap = laplacian(net)
    diag_term = np.zeros(net.n_vertices)
    for t, tri in enumerate(tris):
        for k, v in enumerate(tri):
            diag_term[v] += cprime[t, k] ** 2 / sigma[t]
    w = diag_term - np.diag(lap)
    q = triangle_map_dense(net, cprime)
    rebuilt = q.T @ np.diag(1.0 / sigma) @ q - np.diag(w)
    residual = float(np.max(np.abs(rebuilt - lap)))
    return BlackTriangleFactorization(tris, cprime, sigma, w, residual)


def triangle_map_dense(net: ElectricNetwork, cprime: np.ndarray) -> np.ndarray:
    """(Q psi)(T) = sum c'_i(T) psi(P_i) as a dense (T, n) matrix."""
    q = np.zeros((len(net.black_triangles), net.n_vertices))
    for t, tri in enumerate(net.black_triangles):
        for k, v in enumerate(tri):
            q[t, v] += cprime[t, k]
    return q


# -- Laplace image on the triangle space ----------------------------------


@dataclass(frozen=True)
class LaplaceImageResult:
    """Triangle-space image L' = Q W^{-1} Q^+ - C' with its kernel check.

    Both candidate normalizations of the transported voltage are tried
    (the inverse-scaled one is the transform that provably sends kernel
    to kernel); `normalization` names the verified choice.
    """

    lprime: np.ndarray
    u_prime: np.ndarray
    normalization: str
    residuals: dict[str, float]
    asserted_triangles: tuple[int, ...]


def laplace_image(net: ElectricNetwork, voltage: np.ndarray,
                  factorization: BlackTriangleFactorization | None = None,
                  free_vertices=None, tol: float = 1e-10) -> LaplaceImageResult:
    """Transport a Dirichlet-harmonic voltage to the triangle space.

    The kernel identity is asserted only on triangles whose three corners
    are free (total current zero); `free_vertices` may be given explicitly
    or is detected from the residual of `voltage`.
    """
    fact = black_factorization(net) if factorization is None else factorization
    if np.any(fact.w == 0):
        raise ZeroW("vertex diagonal has a zero entry")
    u = np.asarray(voltage, dtype=float)
    q = triangle_map_dense(net, fact.cprime)
    lprime = q @ np.diag(1.0 / fact.w) @ q.T - np.diag(fact.sigma)

    if free_vertices is None:
        res = total_current(net, u)
        scale = max(np.max(np.abs(res)), 1e-30)
        cscale = max(c for c in net.conductances.values())
        uscale = max(np.max(np.abs(u)), 1.0)
        free_vertices = {p for p in range(net.n_vertices)
                         if abs(res[p]) <= 1e-9 * cscale * uscale}
    free_vertices = set(free_vertices)
    asserted = tuple(t for t, tri in enumerate(fact.triangles)
                     if all(v in free_vertices for v in tri))
    if not asserted:
        raise NoKernelVector("no triangle has all corners free")

    qu = q @ u
    candidates = {
        "inverse_scaled": qu / fact.sigma,   # (C')^{-1} Q U
        "sigma_scaled": fact.sigma * qu,     # C' Q U
    }
    scale = max(np.max(np.abs(lprime)), 1.0) * max(np.max(np.abs(qu)), 1.0)
    residuals = {}
    for name, cand in candidates.items():
        image = lprime @ cand
        residuals[name] = float(np.max(np.abs(image[list(asserted)])) / scale)
    best = min(residuals, key=residuals.get)
    if residuals[best] > tol:
        raise NoKernelVector(
            f"neither normalization transports the kernel (best {residuals[best]:.3e})")
    return LaplaceImageResult(lprime, candidates[best], best, residuals, asserted)


def dirichlet_solve(net: ElectricNetwork, clamped: dict[int, float]) -> np.ndarray:
    """Voltage with zero total current at every unclamped vertex."""
    if not clamped:
        raise ValueError("need at least one clamped vertex")
    lap = laplacian(net)
    n = net.n_vertices
    free = [p for p in range(n) if p not in clamped]
    u = np.zeros(n)
    for p, val in clamped.items():
        u[p] = val
    if free:
        a = lap[np.ix_(free, free)]
        rhs = -lap[np.ix_(free, list(clamped))] @ np.array(list(clamped.values()))
        sol = np.linalg.solve(a, rhs)
        # one refinement step tightens the residual toward 1e-13
        sol += np.linalg.solve(a, rhs - a @ sol)
        u[free] = sol
    return u


# -- builders --------------------------------------------------------------


def network_from_complex(c: Complex2D, rng=None,
                         conductances=None) -> ElectricNetwork:
    """Electric network on a colorable surface: its black triangles give
    the K-structure (each edge lies in exactly one black triangle)."""
    coloring = c.bipartite_coloring()
    if coloring is None:
        raise InvalidKStructure("complex is not black/white colorable")
    if c.has_multi_edges:
        raise InvalidKStructure("network edges need unique vertex pairs")
    if conductances is None:
        conductances = {e.vertices: rng.uniform(0.5, 2.0) for e in c.edges}
    blacks = tuple(tri for t, tri in enumerate(c.triangles) if coloring[t] == "b")
    return ElectricNetwork(c.n_vertices, conductances, blacks)
