"""Self-adjoint second-order difference operators and their factorizations.

Two settings share one idea: an operator with positive symmetric edge
coefficients splits, per triangle of one color, into the product of a
triangle operator with its adjoint plus a leftover diagonal.

* On a general black/white colorable surface the operator is a table of
  edge coefficients and a vertex potential.
* On the periodic equilateral lattice it is four coefficient fields
  (diagonal plus the three shift directions), and the factorization can
  be taken in any of the six rotated bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complexes import Complex2D, torus_lattice
from .connections import Connection, triangle_coeffs_from_weights
from .errors import (
    ColorMismatch,
    GaugeNotFound,
    NoColoring,
    NonPositiveCoefficient,
    NonPositiveOffdiag,
)

# -- surface operators --------------------------------------------------


@dataclass(frozen=True)
class SelfAdjointOperator:
    """Symmetric positive edge coefficients plus a vertex potential."""

    complex: Complex2D
    offdiag: dict[tuple[int, int], float]
    potential: np.ndarray

    def __post_init__(self):
        c = self.complex
        if c.has_multi_edges:
            raise NonPositiveOffdiag("operator needs unique vertex pairs per edge")
        vals = {(min(a, b), max(a, b)): float(v) for (a, b), v in self.offdiag.items()}
        edge_pairs = {e.vertices for e in c.edges}
        if set(vals) != edge_pairs:
            raise NonPositiveOffdiag("offdiagonal coefficients must cover the edges")
        if any(v <= 0 for v in vals.values()):
            raise NonPositiveOffdiag("offdiagonal coefficients must be positive")
        pot = np.asarray(self.potential, dtype=float)
        if pot.shape != (c.n_vertices,):
            raise ValueError("potential must have one entry per vertex")
        object.__setattr__(self, "offdiag", vals)
        object.__setattr__(self, "potential", pot)

    def b(self, p: int, q: int) -> float:
        return self.offdiag[(min(p, q), max(p, q))]


def apply_operator(op: SelfAdjointOperator, psi: np.ndarray) -> np.ndarray:
    """(L psi)_P = sum over neighbors b_{P:P'} psi_{P'} + W(P) psi_P."""
    psi = np.asarray(psi, dtype=float)
    out = op.potential * psi
    for (p, q), b in op.offdiag.items():
        out[p] += b * psi[q]
        out[q] += b * psi[p]
    return out


def operator_dense(op: SelfAdjointOperator) -> np.ndarray:
    n = op.complex.n_vertices
    mat = np.diag(op.potential.copy())
    for (p, q), b in op.offdiag.items():
        mat[p, q] += b
        mat[q, p] += b
    return mat


def random_selfadjoint(c: Complex2D, rng, low: float = 0.5, high: float = 2.0) -> SelfAdjointOperator:
    off = {e.vertices: rng.uniform(low, high) for e in c.edges}
    pot = rng.uniform(-1.0, 1.0, c.n_vertices)
    return SelfAdjointOperator(c, off, pot)


@dataclass(frozen=True)
class TriangleOperator:
    """First-order operator supported on the triangles of one color."""

    complex: Complex2D
    color: str
    coeffs: dict[int, np.ndarray]  # triangle -> 3 coefficients (local order)


@dataclass(frozen=True)
class BWFactorization:
    black: TriangleOperator
    white: TriangleOperator
    potential_black: np.ndarray
    potential_white: np.ndarray
    residual_black: float
    residual_white: float


def _one_color_factorization(op: SelfAdjointOperator, coloring, color: str):
    c = op.complex
    coeffs = {}
    for t, tri in enumerate(c.triangles):
        if coloring[t] != color:
            continue
        a1 = op.b(tri[0], tri[1])
        a2 = op.b(tri[1], tri[2])
        a3 = op.b(tri[2], tri[0])
        coeffs[t] = np.array(triangle_coeffs_from_weights(a1, a2, a3))
    leftover = op.potential.copy()
    for t, u in coeffs.items():
        tri = c.triangles[t]
        for k in range(3):
            leftover[tri[k]] -= u[k] ** 2
    return TriangleOperator(c, color, coeffs), leftover


def _assemble_product(c: Complex2D, tri_op: TriangleOperator) -> np.ndarray:
    """Dense Q^+ Q for a one-color triangle operator."""
    n = c.n_vertices
    mat = np.zeros((n, n))
    for t, u in tri_op.coeffs.items():
        tri = c.triangles[t]
        for i in range(3):
            for j in range(3):
                mat[tri[i], tri[j]] += u[i] * u[j]
    return mat


def factorize_bw(op: SelfAdjointOperator) -> BWFactorization:
    """Split L into Q^+ Q + W separately over black and white triangles.

    Each edge lies in exactly one triangle of each color, so matching the
    off-diagonal coefficients is the per-triangle edge-weight solve; the
    leftover potential absorbs the squares on the diagonal.
    """
    c = op.complex
    if not c.is_closed:
        raise NoColoring("black/white factorization needs a closed colored complex")
    coloring = c.bipartite_coloring()
    if coloring is None:
        raise NoColoring("complex is not black/white colorable")
    black, w_black = _one_color_factorization(op, coloring, "b")
    white, w_white = _one_color_factorization(op, coloring, "w")
    dense = operator_dense(op)
    res_b = np.max(np.abs(_assemble_product(c, black) + np.diag(w_black) - dense))
    res_w = np.max(np.abs(_assemble_product(c, white) + np.diag(w_white) - dense))
    return BWFactorization(black, white, w_black, w_white, float(res_b), float(res_w))


def combined_connection(black: TriangleOperator, white: TriangleOperator) -> Connection:
    """Union of the black and white coefficients as one connection.

    The coefficients of a common factorized operator satisfy the edge
    product relations, so the result is an SL2 connection.
    """
    if black.complex is not white.complex:
        raise ColorMismatch("triangle operators live on different complexes")
    if black.color == white.color:
        raise ColorMismatch("need one operator per color")
    c = black.complex
    coeffs = np.empty((c.n_triangles, 3))
    seen = set()
    for part in (black, white):
        for t, u in part.coeffs.items():
            if t in seen:
                raise ColorMismatch(f"triangle {t} appears in both colors")
            seen.add(t)
            coeffs[t] = u
    if len(seen) != c.n_triangles:
        raise ColorMismatch("colors must cover every triangle exactly once")
    return Connection(c, coeffs)


# -- equilateral lattice --------------------------------------------------

# the six unit directions, counterclockwise; basis j is (DIRS[j], DIRS[j+1])
DIRS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def basis(j: int) -> tuple[tuple[int, int], tuple[int, int]]:
    j %= 6
    return DIRS[j], DIRS[(j + 1) % 6]


def shift(f: np.ndarray, step: tuple[int, int]) -> np.ndarray:
    """Periodic shift: shift(f, (dm, dn))[m, n] = f[m + dm, n + dn]."""
    return np.roll(np.roll(f, -step[0], axis=0), -step[1], axis=1)


@dataclass(frozen=True)
class EquilateralOperator:
    """Second-order operator on the periodic triangular lattice.

    Row (m, n) reads
      a(m,n) psi(m,n) + b(m+1,n) psi(m+1,n) + c(m,n+1) psi(m,n+1)
      + d(m-1,n+1) psi(m-1,n+1) + (adjoint terms),
    i.e. the b/c/d fields live on the edges in the three positive
    directions, sampled at the far endpoint.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        arrs = {}
        shape = None
        for name in "abcd":
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2 or min(arr.shape) < 2:
                raise NonPositiveCoefficient("fields must be 2-d with sides >= 2")
            if shape is None:
                shape = arr.shape
            elif arr.shape != shape:
                raise NonPositiveCoefficient("fields must share one window")
            arrs[name] = arr
        for name in "bcd":
            if not np.all(arrs[name] > 0):
                raise NonPositiveCoefficient(f"field {name} must be positive")
        for name, arr in arrs.items():
            object.__setattr__(self, name, arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.a.shape


def _edge_field(op: EquilateralOperator, direction: tuple[int, int]) -> np.ndarray:
    """Field s -> edge coefficient between s and s + direction."""
    if direction == (1, 0):
        return shift(op.b, (1, 0))
    if direction == (-1, 0):
        return op.b
    if direction == (0, 1):
        return shift(op.c, (0, 1))
    if direction == (0, -1):
        return op.c
    if direction == (-1, 1):
        return shift(op.d, (-1, 1))
    if direction == (1, -1):
        return op.d
    raise ValueError(f"not a lattice direction: {direction}")


def _store_edge_field(fields: dict, direction: tuple[int, int], values: np.ndarray):
    """Inverse of _edge_field: write values into the canonical b/c/d slots."""
    if direction == (1, 0):
        fields["b"] = shift(values, (-1, 0))
    elif direction == (-1, 0):
        fields["b"] = values
    elif direction == (0, 1):
        fields["c"] = shift(values, (0, -1))
    elif direction == (0, -1):
        fields["c"] = values
    elif direction == (-1, 1):
        fields["d"] = shift(values, (1, -1))
    elif direction == (1, -1):
        fields["d"] = values
    else:
        raise ValueError(f"not a lattice direction: {direction}")


def apply_equilateral(op: EquilateralOperator, psi: np.ndarray) -> np.ndarray:
    out = op.a * psi
    for direction in DIRS:
        out += _edge_field(op, direction) * shift(psi, direction)
    return out


def equilateral_dense(op: EquilateralOperator) -> np.ndarray:
    m, n = op.shape
    size = m * n
    mat = np.zeros((size, size))
    idx = np.arange(size).reshape(m, n)
    mat[idx.ravel(), idx.ravel()] += op.a.ravel()
    for direction in DIRS:
        w = _edge_field(op, direction)
        cols = shift(idx, direction)
        np.add.at(mat, (idx.ravel(), cols.ravel()), w.ravel())
    return mat


def random_equilateral(shape, rng, low: float = 0.5, high: float = 2.0,
                       diag_lift: float = 0.0) -> EquilateralOperator:
    m, n = shape
    b = rng.uniform(low, high, (m, n))
    c = rng.uniform(low, high, (m, n))
    d = rng.uniform(low, high, (m, n))
    a = rng.uniform(-1.0, 1.0, (m, n)) + diag_lift
    return EquilateralOperator(a, b, c, d)


@dataclass(frozen=True)
class EquilateralFactorization:
    """L = Q^+ Q + W in the rotated basis j.

    Q acts as u(s) psi(s) + v(s) psi(s + e1) + w(s) psi(s + e2) where
    (e1, e2) is basis(j); W is the leftover diagonal field.
    """

    j: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    leftover: np.ndarray


def equilateral_factorize(op: EquilateralOperator, j: int) -> EquilateralFactorization:
    """Factor out the triangle operator along basis j (0..5).

    Per lattice site the triangle {s, s+e1, s+e2} carries three known edge
    coefficients; the usual multiplicative solve yields (u, v, w).  Bases
    j and j+3 are mutually inverse and give the right/left pair.
    """
    e1, e2 = basis(j)
    a1 = _edge_field(op, e1)                               # edge s .. s+e1
    a2 = _edge_field(op, e2)                               # edge s .. s+e2
    e12 = (e2[0] - e1[0], e2[1] - e1[1])
    a3 = shift(_edge_field(op, e12), e1)                   # edge s+e1 .. s+e2
    u = np.sqrt(a1 * a2 / a3)
    v = np.sqrt(a1 * a3 / a2)
    w = np.sqrt(a2 * a3 / a1)
    diag = u ** 2 + shift(v, (-e1[0], -e1[1])) ** 2 + shift(w, (-e2[0], -e2[1])) ** 2
    return EquilateralFactorization(j % 6, u, v, w, op.a - diag)


def apply_triangle_factor(fact: EquilateralFactorization, psi: np.ndarray) -> np.ndarray:
    e1, e2 = basis(fact.j)
    return fact.u * psi + fact.v * shift(psi, e1) + fact.w * shift(psi, e2)


def apply_triangle_factor_adjoint(fact: EquilateralFactorization, phi: np.ndarray) -> np.ndarray:
    e1, e2 = basis(fact.j)
    back1 = (-e1[0], -e1[1])
    back2 = (-e2[0], -e2[1])
    return (fact.u * phi + shift(fact.v, back1) * shift(phi, back1)
            + shift(fact.w, back2) * shift(phi, back2))


def reassemble_factorization(fact: EquilateralFactorization) -> EquilateralOperator:
    """Expand Q^+ Q + W back into coefficient fields."""
    e1, e2 = basis(fact.j)
    e12 = (e2[0] - e1[0], e2[1] - e1[1])
    diag = (fact.u ** 2 + shift(fact.v, (-e1[0], -e1[1])) ** 2
            + shift(fact.w, (-e2[0], -e2[1])) ** 2)
    fields = {}
    _store_edge_field(fields, e1, fact.u * fact.v)
    _store_edge_field(fields, e2, fact.u * fact.w)
    back1 = (-e1[0], -e1[1])
    _store_edge_field(fields, e12, shift(fact.v * fact.w, back1))
    return EquilateralOperator(diag + fact.leftover, fields["b"], fields["c"], fields["d"])


def factorization_residual(op: EquilateralOperator, fact: EquilateralFactorization) -> float:
    re = reassemble_factorization(fact)
    return float(max(np.max(np.abs(getattr(re, f) - getattr(op, f))) for f in "abcd"))


def triangle_site_map(shape, j: int):
    """Geometric triangle covered by the basis-j factor at each site.

    Returns a function site -> (kind, cell, vertex tuple) where kind is
    "up" for the black family and "down" for the white family and the
    vertex tuple lists the three lattice points (site, site+e1, site+e2)
    reduced mod the window.
    """
    m, n = shape
    e1, e2 = basis(j)

    def lookup(s):
        pts = (s, ((s[0] + e1[0]) % m, (s[1] + e1[1]) % n),
               ((s[0] + e2[0]) % m, (s[1] + e2[1]) % n))
        key = frozenset(pts)
        # up cell p has vertices {p, p+T1, p+T2}; down cell p has
        # {p+T1, p+T1+T2, p+T2}, so p+T1+T2 is the probe for down
        for q in pts:
            up = frozenset({q, ((q[0] + 1) % m, q[1]), (q[0], (q[1] + 1) % n)})
            if up == key:
                return ("up", q, pts)
            p = ((q[0] - 1) % m, (q[1] - 1) % n)
            down = frozenset({((p[0] + 1) % m, p[1]), ((p[0] + 1) % m, (p[1] + 1) % n),
                              (p[0], (p[1] + 1) % n)})
            if down == key:
                return ("down", p, pts)
        raise ValueError(f"sites {pts} are not a lattice triangle")

    return lookup


def factorization_vertex_coeffs(fact: EquilateralFactorization, shape):
    """Map geometric triangle -> {lattice vertex: coefficient}.

    Lets factorizations along different bases be compared triangle by
    triangle: they must all solve the same edge system.
    """
    lookup = triangle_site_map(shape, fact.j)
    m, n = shape
    out = {}
    for i in range(m):
        for k in range(n):
            s = (i, k)
            kind, cell, pts = lookup(s)
            vals = (fact.u[i, k], fact.v[i, k], fact.w[i, k])
            out[(kind, cell)] = dict(zip(pts, vals))
    return out


def equilateral_to_selfadjoint(op: EquilateralOperator) -> SelfAdjointOperator:
    """Same operator on the explicit torus complex (for cross-checks)."""
    m, n = op.shape
    c = torus_lattice(m, n)

    def v(i, j):
        return (i % m) * n + (j % n)

    off = {}
    for i in range(m):
        for k in range(n):
            off[(v(i, k), v(i + 1, k))] = shift(op.b, (1, 0))[i, k]
            off[(v(i, k), v(i, k + 1))] = shift(op.c, (0, 1))[i, k]
            off[(v(i, k), v(i - 1, k + 1))] = shift(op.d, (-1, 1))[i, k]
    off = {(min(p, q), max(p, q)): float(x) for (p, q), x in off.items()}
    return SelfAdjointOperator(c, off, op.a.ravel().copy())


def equilateral_connection(op: EquilateralOperator, j: int | None = None) -> Connection:
    """Connection from the basis-j factorization pair (j and j+3).

    The basis-j factor covers one triangle family, its inverse basis the
    other; together they assign coefficients to every triangle of the
    torus complex from `torus_lattice`.
    """
    m, n = op.shape
    c = torus_lattice(m, n)
    j = 0 if j is None else j % 6
    coeffs = np.empty((c.n_triangles, 3))
    for jj in (j, (j + 3) % 6):
        fact = equilateral_factorize(op, jj)
        per_tri = factorization_vertex_coeffs(fact, op.shape)
        for (kind, cell), vals in per_tri.items():
            i, k = cell
            t = 2 * (i * n + k) + (0 if kind == "up" else 1)
            tri = c.triangles[t]
            for pos, vx in enumerate(tri):
                site = (vx // n, vx % n)
                coeffs[t, pos] = vals[site]
    return Connection(c, coeffs)


def equilateral_laplace(op: EquilateralOperator, j: int, level: float,
                        damping: float = 0.5, max_steps: int = 10_000,
                        tol: float = 1e-12) -> tuple[EquilateralOperator, np.ndarray]:
    """Swap the basis-j factors after gauging the leftover to `level`.

    The symmetric gauge L -> f L f rescales the factor coefficients by f
    at their vertex, so the leftover transforms as f^2 W; a damped
    fixed-point iteration on log f flattens it to the requested constant.
    Sign obstructions (W level mismatch) surface as GaugeNotFound.

    Returns the transformed operator Q Q^+ + level and the gauge f.
    """
    fact = equilateral_factorize(op, j)
    leftover = fact.leftover
    if level == 0.0:
        if np.max(np.abs(leftover)) > tol * max(1.0, np.max(np.abs(op.a))):
            raise GaugeNotFound("leftover potential is not already zero")
        f = np.ones_like(op.a)
        gauged = op
    else:
        if np.any(leftover * level <= 0):
            raise GaugeNotFound("leftover potential changes sign against the target")
        log_f = np.zeros_like(op.a)
        gauged = op
        for _ in range(max_steps):
            current = equilateral_factorize(gauged, j).leftover
            if np.max(np.abs(current - level)) <= tol:
                break
            log_f -= 0.5 * damping * (np.log(np.abs(current)) - math.log(abs(level)))
            f = np.exp(log_f)
            gauged = EquilateralOperator(
                f * f * op.a,
                shift(f, (-1, 0)) * f * op.b,
                shift(f, (0, -1)) * f * op.c,
                shift(f, (1, -1)) * f * op.d,
            )
        else:
            raise GaugeNotFound(f"no flattening gauge within {max_steps} steps")
        f = np.exp(log_f)

    gfact = equilateral_factorize(gauged, j)
    e1, e2 = basis(j)
    e12 = (e1[0] - e2[0], e1[1] - e2[1])  # direction of the remaining edge
    diag = gfact.u ** 2 + gfact.v ** 2 + gfact.w ** 2 + level
    fields = {}
    _store_edge_field(fields, e1, gfact.v * shift(gfact.u, e1))
    _store_edge_field(fields, e2, gfact.w * shift(gfact.u, e2))
    _store_edge_field(fields, e12, gfact.v * shift(gfact.w, e12))
    out = EquilateralOperator(diag, fields["b"], fields["c"], fields["d"])
    return out, (f if level != 0.0 else np.ones_like(op.a))
