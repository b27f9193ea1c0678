"""Laplace transformation chains: square-lattice hyperbolic operators and
trivalent-tree fourth-order operators.

Lattice fields are plain 2-d numpy arrays on a periodic (M, N) window.
Shift conventions (recorded here because the printed identities depend on
them): all coefficient fields are sampled at the row point, i.e. the
hyperbolic operator acts as

    (L psi)(m,n) = psi(m,n) + u(m,n) psi(m+1,n) + v(m,n) psi(m,n+1)
                   + u(m,n) v(m+1,n) psi(m+1,n+1) + w(m,n) psi(m,n)

and a subscript 1 or 2 on a field means the shift to (m+1,n) or (m,n+1).
With this convention the transform identities

    u' = f' u / w,   v' = f' v / w_2,   u' v'_1 = f' v u_2 / w_2,
    f' = (1 + w') w / (1 + w),
    1 + w' = (1 + w) H_{m-1,n} w_{m-1,n} w_{m,n+1} / (w w_{m-1,n+1})

hold simultaneously, and the chain of transforms satisfies the discrete
Toda equation in its cross-multiplied form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CoefficientSumNonzero,
    DegenerateCoefficient,
    InconsistentA,
    MissingLayer,
    SingularDenominator,
    SingularGauge,
    TreeNotConnected,
    ZeroPotential,
)


def shift1(f: np.ndarray, steps: int = 1) -> np.ndarray:
    """f(m + steps, n) on the periodic window."""
    return np.roll(f, -steps, axis=0)


def shift2(f: np.ndarray, steps: int = 1) -> np.ndarray:
    """f(m, n + steps) on the periodic window."""
    return np.roll(f, -steps, axis=1)


def _as_field(f) -> np.ndarray:
    arr = np.asarray(f, dtype=float)
    if arr.ndim != 2 or min(arr.shape) < 2:
        raise ValueError("lattice fields are 2-d arrays with sides >= 2")
    if not np.all(np.isfinite(arr)):
        raise ValueError("lattice fields must be finite")
    return arr


# -- hyperbolic operators ------------------------------------------------


@dataclass(frozen=True)
class HyperbolicOperator:
    """Zero-level gauge representative (1 + u T1)(1 + v T2) + w."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        u, v, w = (_as_field(x) for x in (self.u, self.v, self.w))
        if u.shape != v.shape or u.shape != w.shape:
            raise ValueError("fields must share one window")
        if np.any(u == 0) or np.any(v == 0):
            raise DegenerateCoefficient("u and v must be nowhere zero")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @property
    def shape(self):
        return self.u.shape


def apply_hyperbolic(h: HyperbolicOperator, psi: np.ndarray) -> np.ndarray:
    inner = psi + h.v * shift2(psi)
    return inner + h.u * shift1(inner) + h.w * psi


def expand(h: HyperbolicOperator):
    """Coefficient fields (a, b, c, d) of 1, T1, T2, T1 T2."""
    return 1.0 + h.w, h.u.copy(), h.v.copy(), h.u * shift1(h.v)


def apply_expanded(a, b, c, d, psi: np.ndarray) -> np.ndarray:
    return a * psi + b * shift1(psi) + c * shift2(psi) + d * shift1(shift2(psi))


@dataclass(frozen=True)
class LeftFactorization:
    """Left-ordered factors: g [(1 + v T2)(1 + u T1) + w]."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    gauge: np.ndarray


@dataclass(frozen=True)
class HyperbolicFactorization:
    right: HyperbolicOperator
    right_gauge: np.ndarray
    left: LeftFactorization


def hyperbolic_factorize(a, b, c, d) -> HyperbolicFactorization:
    """Both monic factorizations of a generic 4-coefficient operator.

    The gauge f making L/f monic is pinned pointwise by the product
    coefficient: f(m,n) = b(m-1,n) c(m,n) / d(m-1,n) for the right order,
    g(m,n) = b(m,n) c(m,n-1) / d(m,n-1) for the left.
    """
    a, b, c, d = (_as_field(x) for x in (a, b, c, d))
    if np.any(a == 0) or np.any(d == 0):
        raise DegenerateCoefficient("a and d must be nowhere zero")
    if np.any(b == 0) or np.any(c == 0):
        raise DegenerateCoefficient("b and c must be nowhere zero")
    f = shift1(b, -1) * c / shift1(d, -1)
    right = HyperbolicOperator(b / f, c / f, a / f - 1.0)
    g = b * shift2(c, -1) / shift2(d, -1)
    left = LeftFactorization(b / g, c / g, a / g - 1.0, g)
    return HyperbolicFactorization(right, f, left)


def apply_left(left: LeftFactorization, psi: np.ndarray) -> np.ndarray:
    inner = psi + left.u * shift1(psi)
    return left.gauge * (inner + left.v * shift2(inner) + left.w * psi)


def invariants_Hw(h: HyperbolicOperator):
    """Gauge-class invariants: the multiplicative curvature H and w.

    Both are unchanged under L -> f^{-1} L f.
    """
    H = h.v * shift2(h.u) / (h.u * shift1(h.v))
    return H, h.w.copy()


def _check_transformable(w: np.ndarray):
    if np.any(w == 0):
        raise ZeroPotential("transform needs w nonzero everywhere")
    if np.any(1.0 + w == 0):
        raise SingularGauge("transform needs 1 + w nonzero everywhere")


def laplace_transform_square(h: HyperbolicOperator) -> HyperbolicOperator:
    """One Laplace transformation step in the zero-level gauge.

    Computes the curvature H, the new potential from the invariant-level
    product formula, then the gauge f' and the new factor coefficients.
    """
    _check_transformable(h.w)
    H, w = invariants_Hw(h)
    w_new = _potential_update(H, w)
    f_new = (1.0 + w_new) * w / (1.0 + w)
    u_new = f_new * h.u / w
    v_new = f_new * h.v / shift2(w)
    return HyperbolicOperator(u_new, v_new, w_new)


def _potential_update(H: np.ndarray, w: np.ndarray) -> np.ndarray:
    one = 1.0 + w
    prod = (shift1(H, -1) * shift1(w, -1) * shift2(w)
            / (w * shift2(shift1(w, -1))))
    return one * prod - 1.0


def laplace_invariant_update(H: np.ndarray, w: np.ndarray):
    """Invariant-level transform: (H, w) -> (H', w').

    Must commute with the operator-level transform through invariants_Hw.
    """
    H, w = _as_field(H), _as_field(w)
    if np.any(w == 0):
        raise SingularDenominator("update needs w nonzero")
    if np.any(1.0 + shift2(w) == 0):
        raise SingularDenominator("update needs 1 + w_2 nonzero")
    w_new = _potential_update(H, w)
    H_new = (1.0 + shift2(w_new)) / (1.0 + shift2(w))
    return H_new, w_new


# -- the discrete 2-d Toda chain -----------------------------------------


@dataclass(frozen=True)
class TodaStack:
    """Potential layers w^k produced by iterating the transform."""

    layers: np.ndarray  # (K, M, N)
    k_start: int = 0

    def __post_init__(self):
        arr = np.asarray(self.layers, dtype=float)
        if arr.ndim != 3:
            raise ValueError("stack layers must be a (K, M, N) array")
        object.__setattr__(self, "layers", arr)

    @property
    def k_range(self):
        return range(self.k_start, self.k_start + len(self.layers))

    def layer(self, k: int) -> np.ndarray:
        if k not in self.k_range:
            raise MissingLayer(f"layer {k} not in {self.k_range}")
        return self.layers[k - self.k_start]


def evolve_chain(h0: HyperbolicOperator, steps: int) -> TodaStack:
    """Iterate the Laplace transform, recording the potential layers."""
    layers = [h0.w.copy()]
    h = h0
    for k in range(steps):
        try:
            h = laplace_transform_square(h)
        except (ZeroPotential, SingularGauge) as exc:
            raise type(exc)(f"step {k}: {exc}")
        layers.append(h.w.copy())
    return TodaStack(np.array(layers))


def toda_residual(stack: TodaStack, k: int) -> np.ndarray:
    """Cross-multiplied chain equation residual at layer k.

    (w''_1 + 1)(w_2 + 1) w'_1 w'_2 - (w'_1 + 1)(w'_2 + 1) w' w'_12
    with w, w', w'' the layers k-1, k, k+1; zero iff the discrete Toda
    equation holds at each site.
    """
    lo = stack.layer(k - 1)
    mid = stack.layer(k)
    hi = stack.layer(k + 1)
    lhs = (shift1(hi) + 1.0) * (shift2(lo) + 1.0) * shift1(mid) * shift2(mid)
    rhs = (shift1(mid) + 1.0) * (shift2(mid) + 1.0) * mid * shift1(shift2(mid))
    return lhs - rhs


def stack_max_residual(stack: TodaStack) -> float:
    ks = list(stack.k_range)[1:-1]
    if not ks:
        return 0.0
    return float(max(np.max(np.abs(toda_residual(stack, k))) for k in ks))


def cyclic2_residual(a: np.ndarray, b: np.ndarray):
    """Period-2 reduction residuals for alternating layers a, b.

    Returns (G residual, reduced system residual) where G = a b must be a
    discrete harmonic product (G G_12 = G_1 G_2) and, for constant G = C,
    the layer b must satisfy (C + b_1)(C + b_2) = b b_12 (1 + b_1)(1 + b_2).
    The constant is taken as the mean of G; both residuals are division
    free.
    """
    a, b = _as_field(a), _as_field(b)
    if a.shape != b.shape:
        raise ValueError("layers must share one window")
    G = a * b
    g_res = G * shift1(shift2(G)) - shift1(G) * shift2(G)
    C = float(np.mean(G))
    b1, b2 = shift1(b), shift2(b)
    sys_res = (C + b1) * (C + b2) - b * shift1(shift2(b)) * (1.0 + b1) * (1.0 + b2)
    return g_res, sys_res


def cyclic2_unit_family(shape, rng) -> tuple[np.ndarray, np.ndarray]:
    """Nonconstant period-2 layers with constant product G = 1.

    b = exp(s) with s(m,n) = (-1)^m * t[(m+n) mod 2] solves b b_12 = 1 on
    any even-by-anything window; a = 1/b completes the pair.
    """
    m, n = shape
    if m % 2 or n % 2:
        raise ValueError("window sides must be even for the alternating family")
    t = rng.uniform(-0.5, 0.5, 2)
    mm, nn = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    s = ((-1.0) ** mm) * t[(mm + nn) % 2]
    b = np.exp(s)
    return 1.0 / b, b


def hirota_residual(F: np.ndarray, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Three-term bilinear residual on a (K, M, N) array.

    gamma F(k+1,m+1,n) F(k-1,m,n+1) + alpha F(k,m,n) F(k,m+1,n+1)
    + beta F(k,m+1,n) F(k,m,n+1), evaluated for k = 1..K-2 with periodic
    m, n.  The coefficients must sum to zero.
    """
    scale = max(abs(alpha), abs(beta), abs(gamma), 1.0)
    if abs(alpha + beta + gamma) > 1e-12 * scale:
        raise CoefficientSumNonzero("alpha + beta + gamma must vanish")
    F = np.asarray(F, dtype=float)
    if F.ndim != 3 or F.shape[0] < 3:
        raise MissingLayer("need a (K >= 3, M, N) array")
    up = F[2:]
    lo = F[:-2]
    mid = F[1:-1]
    sh1 = lambda f: np.roll(f, -1, axis=1)
    sh2 = lambda f: np.roll(f, -1, axis=2)
    return (gamma * sh1(up) * sh2(lo)
            + alpha * mid * sh1(sh2(mid))
            + beta * sh1(mid) * sh2(mid))


def toda_to_hirota_form(stack: TodaStack, kappa: float) -> np.ndarray:
    """Scaled multiplicative residual of the chain in the v = w + 1 variable.

    v''_1 v_2 (v'_1 - k)(v'_2 - k) - v'_1 v'_2 (v' - k)(v'_12 - k) per
    interior layer; at kappa = 1 this is exactly the cross-multiplied
    Toda residual, which is asserted.
    """
    v = stack.layers + 1.0
    if v.shape[0] < 3:
        raise MissingLayer("need at least 3 layers")
    out = []
    for k in range(1, v.shape[0] - 1):
        lo, mid, hi = v[k - 1], v[k], v[k + 1]
        lhs = shift1(hi) * shift2(lo) * (shift1(mid) - kappa) * (shift2(mid) - kappa)
        rhs = shift1(mid) * shift2(mid) * (mid - kappa) * (shift1(shift2(mid)) - kappa)
        out.append(lhs - rhs)
    res = np.array(out)
    if kappa == 1.0:
        ks = list(stack.k_range)[1:-1]
        direct = np.array([toda_residual(stack, k) for k in ks])
        if not np.allclose(res, direct, rtol=0.0, atol=1e-12 * max(1.0, np.max(np.abs(direct)))):
            raise AssertionError("kappa = 1 residual must match the chain residual")
    return res


# -- trivalent trees ------------------------------------------------------


@dataclass(frozen=True)
class TrivalentTree:
    """Finite tree whose interior vertices all have degree 3."""

    adjacency: tuple[tuple[int, ...], ...]
    root: int = 0

    def __post_init__(self):
        adj = tuple(tuple(sorted(nbrs)) for nbrs in self.adjacency)
        object.__setattr__(self, "adjacency", adj)
        n = len(adj)
        edges = sum(len(a) for a in adj)
        if edges != 2 * (n - 1):
            raise TreeNotConnected("edge count does not match a tree")
        seen = {self.root}
        queue = [self.root]
        while queue:
            p = queue.pop(0)
            for q in adj[p]:
                if q not in seen:
                    seen.add(q)
                    queue.append(q)
        if len(seen) != n:
            raise TreeNotConnected("adjacency is not connected")
        for p, nbrs in enumerate(adj):
            if len(nbrs) not in (1, 3):
                raise TreeNotConnected(f"vertex {p} has degree {len(nbrs)}")

    @property
    def n_vertices(self) -> int:
        return len(self.adjacency)

    @property
    def leaves(self) -> tuple[int, ...]:
        return tuple(p for p, a in enumerate(self.adjacency) if len(a) == 1)

    @property
    def interior(self) -> tuple[int, ...]:
        return tuple(p for p, a in enumerate(self.adjacency) if len(a) == 3)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((p, q) for p, a in enumerate(self.adjacency) for q in a if p < q)

    def bfs_edges(self):
        """(parent, child) pairs in breadth-first order from the root."""
        seen = {self.root}
        queue = [self.root]
        order = []
        while queue:
            p = queue.pop(0)
            for q in self.adjacency[p]:
                if q not in seen:
                    seen.add(q)
                    order.append((p, q))
                    queue.append(q)
        return order

    def distance2_pairs(self):
        """(x, middle, y) triples of two-step paths, each pair once."""
        out = []
        for mid in range(self.n_vertices):
            nbrs = self.adjacency[mid]
            for i in range(len(nbrs)):
                for j in range(i + 1, len(nbrs)):
                    out.append((nbrs[i], mid, nbrs[j]))
        return out


def trivalent_tree(depth: int) -> TrivalentTree:
    """Rooted symmetric tree: the root has 3 branches, inner nodes 2."""
    if depth < 1:
        raise TreeNotConnected("depth must be >= 1")
    adj: list[list[int]] = [[]]
    frontier = [0]
    for level in range(depth):
        new_frontier = []
        for p in frontier:
            kids = 3 if p == 0 else 2
            for _ in range(kids):
                q = len(adj)
                adj.append([p])
                adj[p].append(q)
                new_frontier.append(q)
        frontier = new_frontier
    return TrivalentTree(tuple(tuple(a) for a in adj))


@dataclass(frozen=True)
class FirstOrderTreeOperator:
    """Q psi_P = sum d_{P P'} psi_{P'} + v_P psi_P on a trivalent tree.

    Leaf rows use the normalization d[leaf -> neighbor] = 1; the leftover
    diagonal absorbs the difference, so this loses no generality.
    """

    tree: TrivalentTree
    edge_coeffs: dict[tuple[int, int], float]  # directed (row, column)
    diag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        if diag.shape != (self.tree.n_vertices,):
            raise ValueError("diagonal needs one entry per vertex")
        want = {(p, q) for p, q in self.tree.edges} | {(q, p) for p, q in self.tree.edges}
        if set(self.edge_coeffs) != want:
            raise InconsistentA("edge coefficients must cover both directions")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "edge_coeffs",
                           {k: float(v) for k, v in self.edge_coeffs.items()})


def first_order_dense(q: FirstOrderTreeOperator) -> np.ndarray:
    n = q.tree.n_vertices
    mat = np.diag(q.diag.copy())
    for (p, r), d in q.edge_coeffs.items():
        mat[p, r] = d
    return mat


@dataclass(frozen=True)
class TrivalentOperator:
    """Fourth-order self-adjoint operator on a trivalent tree.

    pair_coeffs holds the distance-2 coefficients (keyed by the sorted
    endpoint pair; the middle vertex is unique on a tree), edge_coeffs
    the nearest-neighbor ones, diag the vertex potential.
    """

    tree: TrivalentTree
    pair_coeffs: dict[tuple[int, int], float]
    edge_coeffs: dict[tuple[int, int], float]
    diag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        if diag.shape != (self.tree.n_vertices,):
            raise ValueError("diagonal needs one entry per vertex")
        pair = {(min(x, y), max(x, y)): float(v) for (x, y), v in self.pair_coeffs.items()}
        edge = {(min(x, y), max(x, y)): float(v) for (x, y), v in self.edge_coeffs.items()}
        want_pairs = {(min(x, y), max(x, y)) for x, _, y in self.tree.distance2_pairs()}
        if set(pair) != want_pairs:
            raise InconsistentA("pair coefficients must cover the distance-2 paths")
        if set(edge) != set(self.tree.edges):
            raise InconsistentA("edge coefficients must cover the edges")
        object.__setattr__(self, "pair_coeffs", pair)
        object.__setattr__(self, "edge_coeffs", edge)
        object.__setattr__(self, "diag", diag)


def trivalent_dense(op: TrivalentOperator) -> np.ndarray:
    n = op.tree.n_vertices
    mat = np.diag(op.diag.copy())
    for (p, q), v in op.edge_coeffs.items():
        mat[p, q] = mat[q, p] = v
    for (p, q), v in op.pair_coeffs.items():
        mat[p, q] = mat[q, p] = v
    return mat


def assemble_trivalent(q: FirstOrderTreeOperator, leftover: np.ndarray) -> TrivalentOperator:
    """Q^+ Q + leftover written out in tree coefficients."""
    tree = q.tree
    d = q.edge_coeffs
    v = q.diag
    pair = {}
    for x, mid, y in tree.distance2_pairs():
        pair[(x, y)] = d[(mid, x)] * d[(mid, y)]
    edge = {}
    for p, r in tree.edges:
        edge[(p, r)] = d[(r, p)] * v[r] + d[(p, r)] * v[p]
    diag = np.asarray(leftover, dtype=float) + v ** 2
    for p in range(tree.n_vertices):
        diag[p] += sum(d[(r, p)] ** 2 for r in tree.adjacency[p])
    return TrivalentOperator(tree, pair, edge, diag)


def random_first_order(tree: TrivalentTree, rng) -> FirstOrderTreeOperator:
    d = {}
    for p, r in tree.edges:
        d[(p, r)] = 1.0 if len(tree.adjacency[p]) == 1 else rng.uniform(0.5, 2.0)
        d[(r, p)] = 1.0 if len(tree.adjacency[r]) == 1 else rng.uniform(0.5, 2.0)
    v = rng.uniform(0.5, 2.0, tree.n_vertices)
    return FirstOrderTreeOperator(tree, d, v)


def trivalent_factorize(op: TrivalentOperator, v0: float):
    """Recover Q and the leftover diagonal from a fourth-order operator.

    The distance-2 coefficients pin the interior out-coefficients (three
    pairwise products around each interior vertex); leaves use the
    d = 1 normalization.  The vertex coefficients propagate from v0 at
    the tree root through one linear relation per edge, so the result is
    a one-parameter family.  Reconstruction is exact by construction.
    """
    tree = op.tree
    d: dict[tuple[int, int], float] = {}
    for mid in tree.interior:
        x, y, z = tree.adjacency[mid]
        axy = op.pair_coeffs[(min(x, y), max(x, y))]
        axz = op.pair_coeffs[(min(x, z), max(x, z))]
        ayz = op.pair_coeffs[(min(y, z), max(y, z))]
        if min(axy, axz, ayz) <= 0:
            raise InconsistentA("distance-2 coefficients must be positive")
        d[(mid, x)] = math.sqrt(axy * axz / ayz)
        d[(mid, y)] = math.sqrt(axy * ayz / axz)
        d[(mid, z)] = math.sqrt(axz * ayz / axy)
    for leaf in tree.leaves:
        d[(leaf, tree.adjacency[leaf][0])] = 1.0

    v = np.zeros(tree.n_vertices)
    v[tree.root] = v0
    for p, r in tree.bfs_edges():
        b = op.edge_coeffs[(min(p, r), max(p, r))]
        v[r] = (b - d[(p, r)] * v[p]) / d[(r, p)]
    leftover = op.diag - v ** 2
    for p in range(tree.n_vertices):
        leftover[p] -= sum(d[(r, p)] ** 2 for r in tree.adjacency[p])
    q = FirstOrderTreeOperator(tree, d, v)
    residual = float(np.max(np.abs(
        trivalent_dense(assemble_trivalent(q, leftover)) - trivalent_dense(op))))
    return q, leftover, residual


def trivalent_laplace(q: FirstOrderTreeOperator, leftover: np.ndarray) -> TrivalentOperator:
    """Laplace image Q leftover^{-1} Q^+ + 1 as a tree operator.

    Kernel vectors transport: if (Q^+ Q + leftover) psi = 0 then the image
    annihilates Q psi, an exact matrix identity.
    """
    leftover = np.asarray(leftover, dtype=float)
    if np.any(leftover == 0):
        raise ZeroPotential("Laplace image needs a nowhere-zero leftover")
    tree = q.tree
    qm = first_order_dense(q)
    dense = qm @ np.diag(1.0 / leftover) @ qm.T + np.eye(tree.n_vertices)
    pair = {}
    for x, _, y in tree.distance2_pairs():
        pair[(x, y)] = dense[x, y]
    edge = {}
    for p, r in tree.edges:
        edge[(p, r)] = dense[p, r]
    out = TrivalentOperator(tree, pair, edge, np.diag(dense).copy())
    # anything beyond distance 2 must vanish; guards the tree structure
    rebuilt = trivalent_dense(out)
    stray = np.max(np.abs(rebuilt - dense))
    if stray > 1e-10 * max(1.0, np.max(np.abs(dense))):
        raise InconsistentA("Laplace image is not supported within distance 2")
    return out
