"""Oriented triangulated surfaces and simplicial n-complexes.

Conventions
-----------
Vertices and triangles are dense integer indices.  A triangle ``(i, j, k)``
is oriented by its cyclic vertex order; *side* ``q`` of triangle ``t`` is
the directed vertex pair ``(tri[q], tri[(q+1) % 3])``.  An *edge* is a
glued pair of opposite sides (or a single boundary side).  Edges keep
their own identity instead of being reduced to vertex pairs, because
small periodic quotients (e.g. a 2x2 torus) carry two distinct edges on
the same vertex pair.

Orientation compatibility is exactly the requirement that glued sides
traverse the shared edge in opposite directions; it is validated at build
time, never inferred.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .errors import (
    AmbiguousEdge,
    BoundaryVertex,
    IncoherentOrientation,
    InvalidPath,
    NonManifold,
    NotClosed,
    VertexNotInTriangle,
)

Side = tuple[int, int]  # (triangle index, side index 0..2)


@dataclass(frozen=True)
class Edge:
    """One edge of the glued surface."""

    index: int
    vertices: tuple[int, int]  # ascending
    sides: tuple[Side, ...]    # one side (boundary) or two (interior)

    @property
    def is_boundary(self) -> bool:
        return len(self.sides) == 1

    @property
    def triangles(self) -> tuple[int, ...]:
        return tuple(s[0] for s in self.sides)


@dataclass(frozen=True)
class ThickPath:
    """Sequence of triangles glued along shared edges.

    ``faces[i]`` is the edge index between ``triangles[i]`` and
    ``triangles[i+1]``; for a closed path the last face joins the final
    triangle back to the first.  Consecutive faces are always distinct.
    """

    triangles: tuple[int, ...]
    faces: tuple[int, ...]
    closed: bool

    def __len__(self) -> int:
        return len(self.triangles)


@dataclass(frozen=True)
class FramedPath:
    """Vertex path with one supporting triangle per step."""

    vertices: tuple[int, ...]
    triangles: tuple[int, ...]

    def __post_init__(self):
        if len(self.vertices) != len(self.triangles) + 1:
            raise InvalidPath("need one more vertex than triangles")

    def __len__(self) -> int:
        return len(self.triangles)


def _sorted_pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


class Complex2D:
    """Oriented triangulated 2-manifold, possibly with boundary.

    Parameters
    ----------
    triangles:
        iterable of oriented vertex triples.
    n_vertices:
        optional; defaults to ``max vertex + 1``.
    side_pairs:
        optional explicit gluing ``{side: side}`` (an involution).  When
        omitted, sides are glued by matching opposite directed vertex
        pairs, which requires every directed pair to occur at most once.
        Generators of small periodic lattices pass the gluing explicitly.
    """

    def __init__(self, triangles, n_vertices: int | None = None,
                 side_pairs: dict[Side, Side] | None = None):
        tris = []
        for t in triangles:
            tri = tuple(int(v) for v in t)
            if len(tri) != 3 or len(set(tri)) != 3:
                raise NonManifold(f"triangle {tri} must have 3 distinct vertices")
            if min(tri) < 0:
                raise NonManifold(f"negative vertex index in {tri}")
            tris.append(tri)
        if not tris:
            raise NonManifold("empty triangle list")
        self._triangles: tuple[tuple[int, int, int], ...] = tuple(tris)
        top = max(max(t) for t in tris)
        self._n_vertices = int(n_vertices) if n_vertices is not None else top + 1
        if top >= self._n_vertices:
            raise NonManifold("vertex index out of range")

        self._partner = self._glue(side_pairs)
        self._build_edges()
        self._build_stars()
        self._coloring_cache: tuple[str, ...] | None | bool = False  # False = not computed
        self._loops_cache: tuple[ThickPath, ...] | None = None

    # -- construction ------------------------------------------------

    def side_vertices(self, side: Side) -> tuple[int, int]:
        t, q = side
        tri = self._triangles[t]
        return (tri[q], tri[(q + 1) % 3])

    def _glue(self, side_pairs):
        sides = [(t, q) for t in range(len(self._triangles)) for q in range(3)]
        if side_pairs is not None:
            partner: dict[Side, Side] = {}
            for s, s2 in side_pairs.items():
                partner[s] = s2
                partner[s2] = s
            for s, s2 in partner.items():
                if partner.get(s2) != s:
                    raise NonManifold(f"side gluing is not an involution at {s}")
                a, b = self.side_vertices(s)
                if self.side_vertices(s2) != (b, a):
                    raise IncoherentOrientation(
                        f"glued sides {s}, {s2} do not reverse the edge")
            return partner

        pair_count = Counter(_sorted_pair(*self.side_vertices(s)) for s in sides)
        directed: dict[tuple[int, int], Side] = {}
        for s in sides:
            a, b = self.side_vertices(s)
            if pair_count[_sorted_pair(a, b)] > 2:
                raise NonManifold(f"edge {_sorted_pair(a, b)} lies in more than 2 triangles")
            if (a, b) in directed:
                raise IncoherentOrientation(
                    f"directed edge {(a, b)} appears twice; orientations incompatible")
            directed[(a, b)] = s
        partner = {}
        for (a, b), s in directed.items():
            s2 = directed.get((b, a))
            if s2 is not None:
                partner[s] = s2
        return partner

    def _build_edges(self):
        edges: list[Edge] = []
        side_to_edge: dict[Side, int] = {}
        for t in range(len(self._triangles)):
            for q in range(3):
                s = (t, q)
                if s in side_to_edge:
                    continue
                s2 = self._partner.get(s)
                group = (s,) if s2 is None else (s, s2)
                idx = len(edges)
                edges.append(Edge(idx, _sorted_pair(*self.side_vertices(s)), group))
                for g in group:
                    side_to_edge[g] = idx
        self._edges = tuple(edges)
        self._side_to_edge = side_to_edge
        pair_map: dict[tuple[int, int], list[int]] = {}
        for e in edges:
            pair_map.setdefault(e.vertices, []).append(e.index)
        self._pair_to_edges = pair_map

    def _build_stars(self):
        incident: list[list[Side]] = [[] for _ in range(self._n_vertices)]
        for t, tri in enumerate(self._triangles):
            for pos, v in enumerate(tri):
                incident[v].append((t, pos))

        def step(corner):
            # cross the side entering P; lands on the corner of P in the
            # next triangle counterclockwise
            t, pos = corner
            nxt = self._partner.get((t, (pos - 1) % 3))
            if nxt is None:
                return None
            t2, q2 = nxt
            return (t2, q2)

        def step_back(corner):
            t, pos = corner
            nxt = self._partner.get((t, pos))
            if nxt is None:
                return None
            t2, q2 = nxt
            return (t2, (q2 + 1) % 3)

        stars: list[tuple[tuple[Side, ...], bool]] = []
        for v, corners in enumerate(incident):
            if not corners:
                stars.append(((), True))
                continue
            start = corners[0]
            chain = [start]
            cur = step(start)
            cycle = False
            while cur is not None:
                if cur == start:
                    cycle = True
                    break
                chain.append(cur)
                if len(chain) > len(corners):
                    raise NonManifold(f"vertex {v} star does not close properly")
                cur = step(cur)
            if not cycle:
                cur = step_back(start)
                while cur is not None:
                    chain.insert(0, cur)
                    if len(chain) > len(corners):
                        raise NonManifold(f"vertex {v} star does not close properly")
                    cur = step_back(cur)
            if len(chain) != len(corners):
                raise NonManifold(f"vertex {v} star is pinched")
            if cycle:
                # deterministic start: rotate so the smallest triangle leads
                kmin = min(range(len(chain)), key=lambda i: chain[i][0])
                chain = chain[kmin:] + chain[:kmin]
            stars.append((tuple(chain), cycle))
        self._stars = stars

    # -- basic queries -----------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self._n_vertices

    @property
    def n_triangles(self) -> int:
        return len(self._triangles)

    @property
    def triangles(self) -> tuple[tuple[int, int, int], ...]:
        return self._triangles

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    def side_edge(self, side: Side) -> int:
        return self._side_to_edge[side]

    def side_partner(self, side: Side) -> Side | None:
        return self._partner.get(side)

    @property
    def boundary_edges(self) -> tuple[int, ...]:
        return tuple(e.index for e in self._edges if e.is_boundary)

    @property
    def is_closed(self) -> bool:
        return not self.boundary_edges

    @property
    def euler_characteristic(self) -> int:
        return self._n_vertices - len(self._edges) + len(self._triangles)

    @property
    def is_connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            t = stack.pop()
            for q in range(3):
                nxt = self._partner.get((t, q))
                if nxt is not None and nxt[0] not in seen:
                    seen.add(nxt[0])
                    stack.append(nxt[0])
        return len(seen) == len(self._triangles)

    def edge_index(self, a: int, b: int) -> int:
        """Edge index for a vertex pair; unique pairs only."""
        hits = self._pair_to_edges.get(_sorted_pair(a, b))
        if not hits:
            raise KeyError(f"no edge {(a, b)}")
        if len(hits) > 1:
            raise AmbiguousEdge(f"vertex pair {(a, b)} names {len(hits)} edges")
        return hits[0]

    @property
    def has_multi_edges(self) -> bool:
        return any(len(v) > 1 for v in self._pair_to_edges.values())

    def vertex_triangles(self, v: int) -> tuple[int, ...]:
        return tuple(c[0] for c in self._stars[v][0])

    def is_interior_vertex(self, v: int) -> bool:
        corners, cycle = self._stars[v]
        return bool(corners) and cycle

    def directed_side(self, a: int, b: int) -> Side:
        """The unique side traversing (a, b); raises for boundary reversals."""
        for e in self._pair_to_edges.get(_sorted_pair(a, b), ()):
            for s in self._edges[e].sides:
                if self.side_vertices(s) == (a, b):
                    return s
        raise KeyError(f"no side traverses {(a, b)}")

    def triangle_third_vertex(self, t: int, a: int, b: int) -> int:
        tri = self._triangles[t]
        rest = [v for v in tri if v != a and v != b]
        if len(rest) != 1:
            raise VertexNotInTriangle(
                f"vertices {(a, b)} do not span a side of triangle {t}")
        return rest[0]

    # -- spec operations ----------------------------------------------

    def vertex_star(self, v: int) -> ThickPath:
        """Closed thick path of the triangles around an interior vertex.

        Ordered consistently with the orientation and starting at the
        incident triangle of smallest index.
        """
        corners, cycle = self._stars[v]
        if not corners:
            raise BoundaryVertex(f"vertex {v} is isolated")
        if not cycle:
            raise BoundaryVertex(f"vertex {v} lies on the boundary")
        tris = tuple(c[0] for c in corners)
        # crossing the side entering v in corners[i] lands in corners[i+1],
        # so that side's edge is exactly the face joining the two
        faces = tuple(self._side_to_edge[(t, (pos - 1) % 3)] for t, pos in corners)
        return ThickPath(tris, faces, closed=True)

    def bipartite_coloring(self) -> tuple[str, ...] | None:
        """Proper 2-coloring of the dual graph, or None.

        Deterministic: the smallest triangle of each dual component is
        black ("b").
        """
        if self._coloring_cache is not False:
            return self._coloring_cache
        color: list[str | None] = [None] * len(self._triangles)
        ok = True
        for t0 in range(len(self._triangles)):
            if color[t0] is not None:
                continue
            color[t0] = "b"
            queue = [t0]
            while queue and ok:
                t = queue.pop(0)
                for q in range(3):
                    nxt = self._partner.get((t, q))
                    if nxt is None:
                        continue
                    t2 = nxt[0]
                    want = "w" if color[t] == "b" else "b"
                    if color[t2] is None:
                        color[t2] = want
                        queue.append(t2)
                    elif color[t2] != want:
                        ok = False
                        break
        result = tuple(color) if ok else None
        self._coloring_cache = result
        return result

    def homology_generator_loops(self) -> tuple[ThickPath, ...]:
        """Closed thick paths generating the first homology group.

        A dual spanning tree yields one fundamental cycle per non-tree
        interior edge; the cycles are then reduced modulo the vertex-star
        boundaries over GF(2) to an independent set of size 2 - chi.
        """
        if self._loops_cache is not None:
            return self._loops_cache
        if not self.is_closed:
            raise NotClosed("homology generators require a closed complex")
        n_tri = len(self._triangles)
        parent: dict[int, tuple[int, int] | None] = {}
        depth = {}
        tree_edges = set()
        for t0 in range(n_tri):
            if t0 in parent:
                continue
            parent[t0] = None
            depth[t0] = 0
            queue = [t0]
            while queue:
                t = queue.pop(0)
                for q in range(3):
                    nxt = self._partner.get((t, q))
                    if nxt is None or nxt[0] in parent:
                        continue
                    e = self._side_to_edge[(t, q)]
                    parent[nxt[0]] = (t, e)
                    depth[nxt[0]] = depth[t] + 1
                    tree_edges.add(e)
                    queue.append(nxt[0])

        def path_mask(t):
            mask = 0
            while parent[t] is not None:
                t, e = parent[t]
                mask ^= 1 << e
            return mask

        def tree_path(t):
            tris, faces = [t], []
            while parent[t] is not None:
                t, e = parent[t]
                tris.append(t)
                faces.append(e)
            return tris, faces

        # GF(2) elimination basis, seeded with the vertex-star boundaries
        basis: dict[int, int] = {}

        def reduce(vec):
            while vec:
                msb = vec.bit_length() - 1
                row = basis.get(msb)
                if row is None:
                    return vec, msb
                vec ^= row
            return 0, -1

        for v in range(self._n_vertices):
            star = self.vertex_star(v)
            vec = 0
            for e in star.faces:
                vec ^= 1 << e
            vec, msb = reduce(vec)
            if vec:
                basis[msb] = vec

        loops = []
        for e in sorted(i for i in range(len(self._edges)) if i not in tree_edges):
            ta, tb = self._edges[e].triangles
            vec = path_mask(ta) ^ path_mask(tb) ^ (1 << e)
            vec, msb = reduce(vec)
            if not vec:
                continue
            basis[msb] = vec
            # thick path: tree path ta -> tb, closed through edge e
            pa, fa = tree_path(ta)
            pb, fb = tree_path(tb)
            # strip the common tail down to the junction
            while len(pa) > 1 and len(pb) > 1 and pa[-2] == pb[-2]:
                pa.pop(); fa.pop()
                pb.pop(); fb.pop()
            tris = list(reversed(pa)) + pb[:-1]
            faces = list(reversed(fa)) + [e] + fb
            loops.append(ThickPath(tuple(tris), tuple(faces), closed=True))
        self._loops_cache = tuple(loops)
        return self._loops_cache

    # -- path validation ----------------------------------------------

    def validate_thick_path(self, path: ThickPath) -> None:
        n = len(path.triangles)
        want = n if path.closed else n - 1
        if len(path.faces) != max(want, 0):
            raise InvalidPath("face count does not match triangle count")
        for i, e in enumerate(path.faces):
            t_here = path.triangles[i]
            t_next = path.triangles[(i + 1) % n]
            edge = self._edges[e]
            tris = edge.triangles
            if t_here not in tris or t_next not in tris:
                raise InvalidPath(f"face {e} does not join triangles {t_here}, {t_next}")
            if edge.is_boundary and t_here != t_next:
                raise InvalidPath(f"face {e} is a boundary edge")
        bound = len(path.faces) if path.closed else len(path.faces) - 1
        for i in range(max(bound, 0)):
            if path.faces[i] == path.faces[(i + 1) % len(path.faces)]:
                raise InvalidPath("consecutive faces coincide (immediate backtrack)")

    def validate_framed_path(self, path: FramedPath) -> None:
        for i, t in enumerate(path.triangles):
            a, b = path.vertices[i], path.vertices[i + 1]
            tri = self._triangles[t]
            if a == b or a not in tri or b not in tri:
                raise InvalidPath(
                    f"step {i}: vertices {(a, b)} are not an edge of triangle {t}")


# -- generators -------------------------------------------------------


def from_triangles(triangles, n_vertices=None, side_pairs=None) -> Complex2D:
    return Complex2D(triangles, n_vertices=n_vertices, side_pairs=side_pairs)


def octahedron() -> Complex2D:
    tris = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 1),
            (5, 2, 1), (5, 3, 2), (5, 4, 3), (5, 1, 4)]
    return Complex2D(tris, n_vertices=6)


def icosahedron() -> Complex2D:
    up = [1, 2, 3, 4, 5]
    lo = [6, 7, 8, 9, 10]
    tris = []
    for i in range(5):
        j = (i + 1) % 5
        tris.append((0, up[i], up[j]))
        tris.append((up[i], lo[i], up[j]))
        tris.append((up[j], lo[i], lo[j]))
        tris.append((11, lo[j], lo[i]))
    return Complex2D(tris, n_vertices=12)


def doubled_triangle() -> Complex2D:
    """Two triangles glued along all three edges: the smallest sphere."""
    return Complex2D([(0, 1, 2), (0, 2, 1)], n_vertices=3)


def torus_lattice(m: int, n: int) -> Complex2D:
    """Equilateral-lattice torus: m*n vertices, each cell split in two.

    Cell (i, j) holds the "up" triangle (black) ``(v, v+T1, v+T2)`` and the
    "down" triangle (white).  Gluing is passed explicitly so small windows
    with repeated vertex pairs still build correctly.
    """
    if m < 1 or n < 1:
        raise NonManifold("torus needs positive dimensions")

    def v(i, j):
        return (i % m) * n + (j % n)

    def up(i, j):
        return 2 * ((i % m) * n + (j % n))

    def down(i, j):
        return up(i, j) + 1

    tris = []
    for i in range(m):
        for j in range(n):
            tris.append((v(i, j), v(i + 1, j), v(i, j + 1)))
            tris.append((v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)))
    pairs = {}
    for i in range(m):
        for j in range(n):
            pairs[(up(i, j), 0)] = (down(i, j - 1), 1)
            pairs[(up(i, j), 1)] = (down(i, j), 2)
            pairs[(up(i, j), 2)] = (down(i - 1, j), 0)
    return Complex2D(tris, n_vertices=m * n, side_pairs=pairs)


def disk_patch(m: int, n: int) -> Complex2D:
    """Equilateral-lattice patch with boundary: (m+1)*(n+1) vertices."""
    if m < 1 or n < 1:
        raise NonManifold("patch needs positive dimensions")

    def v(i, j):
        return i * (n + 1) + j

    tris = []
    for i in range(m):
        for j in range(n):
            tris.append((v(i, j), v(i + 1, j), v(i, j + 1)))
            tris.append((v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)))
    return Complex2D(tris, n_vertices=(m + 1) * (n + 1))


def connected_sum(c1: Complex2D, c2: Complex2D, t1: int = 0, t2: int = 0) -> Complex2D:
    """Glue two closed surfaces along removed triangles t1, t2.

    The boundary cycles are identified with opposite orientations, so the
    result is again closed and coherently oriented.  Vertex pairs of the
    removed triangles must name unique edges in both inputs.
    """
    a, b, c = c1.triangles[t1]
    d, e, f = c2.triangles[t2]
    ident = {d: a, e: c, f: b}
    remap = {}
    nxt = c1.n_vertices
    for v in range(c2.n_vertices):
        if v in ident:
            remap[v] = ident[v]
        else:
            remap[v] = nxt
            nxt += 1
    tris = [tri for i, tri in enumerate(c1.triangles) if i != t1]
    tris += [tuple(remap[v] for v in tri) for i, tri in enumerate(c2.triangles) if i != t2]
    return Complex2D(tris, n_vertices=nxt)


_GENERATORS = {
    "octahedron": lambda **kw: octahedron(),
    "icosahedron": lambda **kw: icosahedron(),
    "doubled-triangle": lambda **kw: doubled_triangle(),
    "torus": lambda m, n, **kw: torus_lattice(m, n),
    "disk": lambda m, n, **kw: disk_patch(m, n),
}


def build_surface(kind: str, **params) -> Complex2D:
    """Named generator dispatch used by the CLI."""
    try:
        gen = _GENERATORS[kind]
    except KeyError:
        raise ValueError(f"unknown surface kind {kind!r}; have {sorted(_GENERATORS)}")
    return gen(**params)


# -- n-dimensional complexes (rank-1 gauge balance needs these) -------


class ComplexN:
    """Pure n-dimensional simplicial complex given by its top simplices."""

    def __init__(self, simplices, n_vertices: int | None = None):
        simps = [tuple(int(v) for v in s) for s in simplices]
        if not simps:
            raise NonManifold("empty simplex list")
        width = len(simps[0])
        if width < 3 or any(len(s) != width for s in simps):
            raise NonManifold("all simplices need the same number (>= 3) of vertices")
        for s in simps:
            if len(set(s)) != width:
                raise NonManifold(f"repeated vertex in simplex {s}")
        self.simplices = tuple(simps)
        self.dim = width - 1
        top = max(max(s) for s in simps)
        self.n_vertices = int(n_vertices) if n_vertices is not None else top + 1

        face_map: dict[tuple[int, ...], list[tuple[int, int]]] = {}
        for idx, s in enumerate(simps):
            for drop in range(width):
                face = tuple(sorted(v for k, v in enumerate(s) if k != drop))
                face_map.setdefault(face, []).append((idx, s[drop]))
        for face, inc in face_map.items():
            if len(inc) > 2:
                raise NonManifold(f"face {face} lies in more than 2 simplices")
        self.face_map = face_map

    @property
    def interior_faces(self):
        return {f: inc for f, inc in self.face_map.items() if len(inc) == 2}


def double_simplex(n: int = 3) -> ComplexN:
    """Two n-simplices glued along their whole boundary (a sphere)."""
    verts = tuple(range(n + 1))
    return ComplexN([verts, verts], n_vertices=n + 1)
