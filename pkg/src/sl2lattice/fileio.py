"""File formats: JSON for structures, CSV for lattice fields.

All writers are deterministic (sorted keys, shortest round-trip float
repr) so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .complexes import Complex2D, ComplexN
from .connections import Connection, EdgeWeights
from .electric import ElectricNetwork
from .laplace_chains import TodaStack
from .operators import EquilateralOperator, SelfAdjointOperator


def _dump(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _load(path):
    return json.loads(Path(path).read_text())


# -- complexes -------------------------------------------------------------


def complex_to_dict(c: Complex2D) -> dict:
    out = {"vertices": c.n_vertices, "triangles": [list(t) for t in c.triangles]}
    coloring = c.bipartite_coloring()
    if coloring is not None:
        out["coloring"] = list(coloring)
    if c.has_multi_edges:
        # vertex-pair gluing would be ambiguous; keep the explicit one
        pairs = []
        seen = set()
        for e in c.edges:
            if len(e.sides) == 2 and e.sides[0] not in seen:
                (t1, q1), (t2, q2) = e.sides
                pairs.append([t1, q1, t2, q2])
                seen.update(e.sides)
        out["gluing"] = pairs
    return out


def complex_from_dict(data: dict) -> Complex2D:
    side_pairs = None
    if "gluing" in data:
        side_pairs = {(t1, q1): (t2, q2) for t1, q1, t2, q2 in data["gluing"]}
    c = Complex2D(data["triangles"], n_vertices=data["vertices"],
                  side_pairs=side_pairs)
    if "coloring" in data:
        computed = c.bipartite_coloring()
        if computed is None or list(computed) != list(data["coloring"]):
            raise ValueError("stored coloring is not the canonical 2-coloring")
    return c


def save_complex(path, c: Complex2D) -> None:
    _dump(path, complex_to_dict(c))


def load_complex(path) -> Complex2D:
    return complex_from_dict(_load(path))


def complex_n_to_dict(c: ComplexN) -> dict:
    return {"vertices": c.n_vertices, "simplices": [list(s) for s in c.simplices]}


def complex_n_from_dict(data: dict) -> ComplexN:
    return ComplexN(data["simplices"], n_vertices=data["vertices"])


# -- connections and weights ------------------------------------------------


def connection_to_dict(conn: Connection) -> dict:
    cx = conn.complex
    cx_data = (complex_n_to_dict(cx) if isinstance(cx, ComplexN)
               else complex_to_dict(cx))
    coeffs = [[t, k, float(v)] for t, row in enumerate(conn.coeffs)
              for k, v in enumerate(row)]
    return {"complex": cx_data, "coeffs": coeffs}


def connection_from_dict(data: dict) -> Connection:
    cx_data = data["complex"]
    cx = (complex_n_from_dict(cx_data) if "simplices" in cx_data
          else complex_from_dict(cx_data))
    width = len(cx.simplices[0]) if isinstance(cx, ComplexN) else 3
    count = len(cx.simplices) if isinstance(cx, ComplexN) else cx.n_triangles
    coeffs = np.empty((count, width))
    for t, k, v in data["coeffs"]:
        coeffs[t, k] = v
    return Connection(cx, coeffs)


def save_connection(path, conn: Connection) -> None:
    _dump(path, connection_to_dict(conn))


def load_connection(path) -> Connection:
    return connection_from_dict(_load(path))


def save_edge_weights(path, weights: EdgeWeights) -> None:
    _dump(path, {"weights": [[a, b, v] for (a, b), v in sorted(weights.values.items())]})


def load_edge_weights(path) -> EdgeWeights:
    data = _load(path)
    return EdgeWeights({(a, b): v for a, b, v in data["weights"]})


# -- operators ---------------------------------------------------------------


def save_operator(path, op: SelfAdjointOperator) -> None:
    _dump(path, {
        "complex": complex_to_dict(op.complex),
        "offdiag": [[p, q, v] for (p, q), v in sorted(op.offdiag.items())],
        "potential": [float(x) for x in op.potential],
    })


def load_operator(path) -> SelfAdjointOperator:
    data = _load(path)
    c = complex_from_dict(data["complex"])
    off = {(p, q): v for p, q, v in data["offdiag"]}
    return SelfAdjointOperator(c, off, np.array(data["potential"]))


def save_field_csv(path, field: np.ndarray) -> None:
    field = np.asarray(field)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "n", "value"])
        for m in range(field.shape[0]):
            for n in range(field.shape[1]):
                writer.writerow([m, n, repr(float(field[m, n]))])


def load_field_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for m, n, v in reader:
            rows.append((int(m), int(n), float(v)))
    mm = 1 + max(r[0] for r in rows)
    nn = 1 + max(r[1] for r in rows)
    out = np.empty((mm, nn))
    for m, n, v in rows:
        out[m, n] = v
    return out


def save_equilateral(prefix, op: EquilateralOperator) -> None:
    """One CSV per coefficient field: <prefix>_a.csv etc."""
    for name in "abcd":
        save_field_csv(f"{prefix}_{name}.csv", getattr(op, name))


def load_equilateral(prefix) -> EquilateralOperator:
    return EquilateralOperator(*(load_field_csv(f"{prefix}_{name}.csv")
                                 for name in "abcd"))


def save_stack_csv(path, stack: TodaStack) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "m", "n", "value"])
        for ki, k in enumerate(stack.k_range):
            layer = stack.layers[ki]
            for m in range(layer.shape[0]):
                for n in range(layer.shape[1]):
                    writer.writerow([k, m, n, repr(float(layer[m, n]))])


def load_stack_csv(path) -> TodaStack:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for k, m, n, v in reader:
            rows.append((int(k), int(m), int(n), float(v)))
    k0 = min(r[0] for r in rows)
    kk = 1 + max(r[0] for r in rows) - k0
    mm = 1 + max(r[1] for r in rows)
    nn = 1 + max(r[2] for r in rows)
    layers = np.empty((kk, mm, nn))
    for k, m, n, v in rows:
        layers[k - k0, m, n] = v
    return TodaStack(layers, k_start=k0)


# -- networks ----------------------------------------------------------------


def network_to_dict(net: ElectricNetwork) -> dict:
    out = {
        "vertices": net.n_vertices,
        "edges": [[p, q, v] for (p, q), v in sorted(net.conductances.items())],
    }
    if net.black_triangles is not None:
        out["black_triangles"] = [list(t) for t in net.black_triangles]
    return out


def network_from_dict(data: dict) -> ElectricNetwork:
    tris = data.get("black_triangles")
    return ElectricNetwork(
        data["vertices"],
        {(p, q): v for p, q, v in data["edges"]},
        tuple(tuple(t) for t in tris) if tris is not None else None,
    )


def save_network(path, net: ElectricNetwork) -> None:
    _dump(path, network_to_dict(net))


def load_network(path) -> ElectricNetwork:
    return network_from_dict(_load(path))


# -- reports -----------------------------------------------------------------


def report_bytes(report: dict) -> bytes:
    return (json.dumps(report, sort_keys=True, indent=1) + "\n").encode()


def save_report(path, report: dict) -> None:
    Path(path).write_bytes(report_bytes(report))
