"""Command-line driver.

Batch subcommands around the library: mesh generators, connection checks,
operator factorizations, Laplace chains, tree and network transforms, and
the full verification suite.  Every subcommand writes a machine-readable
JSON report into --out; stdout carries a short human summary.

Exit codes: 0 success, 1 verification failure (report still written),
2 usage or input errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio, verification
from .complexes import ComplexN, build_surface
from .connections import (
    Connection,
    build_from_edge_weights,
    is_sl2,
    loop_framed_holonomy,
    random_connection,
    random_edge_weights,
    reconstruct_edge_weights,
    sl_n_face_balance,
    thick_holonomy,
    vertex_curvature,
)
from .electric import (
    black_factorization,
    dirichlet_solve,
    laplace_image,
    star_triangle_network,
    total_current,
)
from .errors import NoKernelVector, NotSL2
from .laplace_chains import (
    HyperbolicOperator,
    assemble_trivalent,
    cyclic2_residual,
    cyclic2_unit_family,
    evolve_chain,
    random_first_order,
    stack_max_residual,
    toda_residual,
    toda_to_hirota_form,
    trivalent_dense,
    trivalent_factorize,
    trivalent_laplace,
    trivalent_tree,
    first_order_dense,
)
from .operators import (
    EquilateralOperator,
    combined_connection,
    equilateral_factorize,
    equilateral_laplace,
    factorize_bw,
    random_equilateral,
)


def _parse_size(text: str) -> tuple[int, int]:
    try:
        m, n = text.lower().split("x")
        return int(m), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--size wants MxN, got {text!r}")


def _parse_edge(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(",")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--seed-edge wants I,J, got {text!r}")


def _parse_clamps(text: str) -> dict[int, float]:
    out = {}
    try:
        for item in text.split(","):
            vertex, value = item.split("=")
            out[int(vertex)] = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--clamp wants P=V[,P=V...], got {text!r}")
    return out


def _out_dir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_report(args, name: str, report: dict) -> Path:
    path = _out_dir(args) / name
    fileio.save_report(path, report)
    return path


# -- mesh -------------------------------------------------------------------


def cmd_mesh_gen(args) -> int:
    params = {}
    if args.kind in ("torus", "disk"):
        if args.size is None:
            raise ValueError(f"--size is required for kind {args.kind}")
        params = {"m": args.size[0], "n": args.size[1]}
    c = build_surface(args.kind, **params)
    out = _out_dir(args) / args.name
    fileio.save_complex(out, c)
    report = {
        "kind": args.kind,
        "vertices": c.n_vertices,
        "edges": c.n_edges,
        "triangles": c.n_triangles,
        "euler_characteristic": c.euler_characteristic,
        "closed": c.is_closed,
        "colorable": c.bipartite_coloring() is not None,
        "mesh_file": out.name,
    }
    _write_report(args, "report_mesh_gen.json", report)
    print(f"{args.kind}: V={c.n_vertices} E={c.n_edges} F={c.n_triangles} "
          f"chi={c.euler_characteristic} -> {out}")
    return 0


# -- connections --------------------------------------------------------------


def cmd_conn_build(args) -> int:
    c = fileio.load_complex(args.mesh)
    rng = np.random.default_rng(args.seed)
    if args.weights:
        weights = fileio.load_edge_weights(args.weights)
        conn = build_from_edge_weights(c, weights)
        source = "weights-file"
    elif args.random_gl2:
        conn = random_connection(c, rng)
        source = "random-gl2"
    else:
        weights = random_edge_weights(c, rng)
        conn = build_from_edge_weights(c, weights)
        fileio.save_edge_weights(_out_dir(args) / "weights.json", weights)
        source = "random-weights"
    out = _out_dir(args) / args.name
    fileio.save_connection(out, conn)
    _write_report(args, "report_conn_build.json",
                  {"source": source, "connection_file": out.name,
                   "triangles": conn.coeffs.shape[0]})
    print(f"connection ({source}) -> {out}")
    return 0


def cmd_conn_check(args) -> int:
    conn = fileio.load_connection(args.connection)
    report = is_sl2(conn, tol=args.tol)
    _write_report(args, "report_conn_check.json", report.as_dict())
    print(f"local={report.local_ok} global={report.global_ok} "
          f"SL2pm={report.is_sl2_pm} SL2={report.is_sl2} "
          f"(mu dev {report.max_mu_deviation:.2e}, det dev {report.max_det_deviation:.2e})")
    return 0 if report.is_sl2_pm else 1


def cmd_conn_holonomy(args) -> int:
    conn = fileio.load_connection(args.connection)
    c = conn.complex
    loops = c.homology_generator_loops()
    entries = []
    for i, loop in enumerate(loops):
        hol = thick_holonomy(conn, loop)
        entries.append({
            "loop": i,
            "length": len(loop),
            "log_abs_det": hol.log_abs_det,
            "det_sign": hol.det_sign,
            "framed_holonomy": loop_framed_holonomy(conn, loop),
        })
    _write_report(args, "report_conn_holonomy.json", {"loops": entries})
    print(f"{len(loops)} generator loops; "
          + "; ".join(f"loop {e['loop']}: |det| drift {abs(e['log_abs_det']):.2e}"
                      for e in entries))
    return 0


def cmd_conn_curvature(args) -> int:
    conn = fileio.load_connection(args.connection)
    c = conn.complex
    vertices = [args.vertex] if args.vertex is not None else [
        v for v in range(c.n_vertices) if c.is_interior_vertex(v)]
    entries = []
    for v in vertices:
        res = vertex_curvature(conn, v)
        entries.append({"vertex": v, "mu_matrix": res.mu_from_matrix,
                        "mu_rho_product": res.mu_from_rho, "alpha": res.alpha,
                        "agreement": res.agreement})
    worst = max((e["agreement"] for e in entries), default=0.0)
    _write_report(args, "report_conn_curvature.json", {"vertices": entries})
    print(f"{len(entries)} vertices; worst mu agreement {worst:.2e}")
    return 0


def cmd_conn_reconstruct(args) -> int:
    conn = fileio.load_connection(args.connection)
    try:
        weights = reconstruct_edge_weights(conn, args.seed_edge, args.seed_value,
                                           tol=args.tol)
    except NotSL2 as exc:
        _write_report(args, "report_conn_reconstruct.json",
                      {"recovered": False, "reason": str(exc)})
        print(f"reconstruction failed: {exc}")
        return 1
    out = _out_dir(args) / "weights_recovered.json"
    fileio.save_edge_weights(out, weights)
    _write_report(args, "report_conn_reconstruct.json",
                  {"recovered": True, "weights_file": out.name,
                   "edges": len(weights.values)})
    print(f"recovered {len(weights.values)} edge weights -> {out}")
    return 0


def cmd_conn_slnbalance(args) -> int:
    conn = fileio.load_connection(args.connection)
    f = sl_n_face_balance(conn, tol=args.tol)
    report = {"balanced": f is not None}
    if f is not None:
        report["gauge"] = [float(x) for x in f]
    _write_report(args, "report_conn_slnbalance.json", report)
    print("balance gauge exists" if f is not None else "no balance gauge")
    return 0 if f is not None else 1


# -- operators -----------------------------------------------------------------


def cmd_op_factorize(args) -> int:
    op = fileio.load_operator(args.operator)
    fact = factorize_bw(op)
    report = {
        "residual_black": fact.residual_black,
        "residual_white": fact.residual_white,
        "black": {str(t): [float(x) for x in u] for t, u in sorted(fact.black.coeffs.items())},
        "white": {str(t): [float(x) for x in u] for t, u in sorted(fact.white.coeffs.items())},
        "potential_black": [float(x) for x in fact.potential_black],
        "potential_white": [float(x) for x in fact.potential_white],
    }
    _write_report(args, "report_op_factorize.json", report)
    ok = max(fact.residual_black, fact.residual_white) < args.tol
    print(f"residuals: black {fact.residual_black:.2e}, white {fact.residual_white:.2e}")
    return 0 if ok else 1


def cmd_op_combine(args) -> int:
    op = fileio.load_operator(args.operator)
    fact = factorize_bw(op)
    conn = combined_connection(fact.black, fact.white)
    report = is_sl2(conn, tol=args.tol)
    out = _out_dir(args) / "connection_combined.json"
    fileio.save_connection(out, conn)
    _write_report(args, "report_op_combine.json",
                  {"connection_file": out.name, **report.as_dict()})
    print(f"combined connection SL2={report.is_sl2} "
          f"(mu dev {report.max_mu_deviation:.2e})")
    return 0 if report.is_sl2 else 1


def cmd_op_laplace(args) -> int:
    rng = np.random.default_rng(args.seed)
    m, n = args.size
    base = random_equilateral((m, n), rng, diag_lift=0.0)
    fact = equilateral_factorize(base, args.direction)
    # lift the diagonal so the leftover sits strictly on the target side
    lift = rng.uniform(0.5, 1.5, (m, n)) * (1.0 if args.level else 0.0)
    op = EquilateralOperator(base.a - fact.leftover + args.level * lift,
                             base.b, base.c, base.d)
    out_op, gauge = equilateral_laplace(op, args.direction, float(args.level))
    prefix = str(_out_dir(args) / "laplace_image")
    fileio.save_equilateral(prefix, out_op)
    report = {
        "direction": args.direction,
        "level": args.level,
        "gauge_min": float(np.min(gauge)),
        "gauge_max": float(np.max(gauge)),
        "output_prefix": "laplace_image",
    }
    _write_report(args, "report_op_laplace.json", report)
    print(f"direction {args.direction}, level {args.level}: image fields -> {prefix}_*.csv")
    return 0


# -- toda -----------------------------------------------------------------------


def cmd_toda_evolve(args) -> int:
    rng = np.random.default_rng(args.seed)
    m, n = args.size
    fields = 1.0 + args.amplitude * rng.uniform(-1.0, 1.0, (3, m, n))
    stack = evolve_chain(HyperbolicOperator(*fields), args.steps)
    out = _out_dir(args) / "stack.csv"
    fileio.save_stack_csv(out, stack)
    worst = stack_max_residual(stack)
    _write_report(args, "report_toda_evolve.json",
                  {"size": [m, n], "steps": args.steps, "amplitude": args.amplitude,
                   "max_chain_residual": worst, "stack_file": out.name,
                   "within_tol": worst < args.tol})
    print(f"{args.steps} steps on {m}x{n}: max chain residual {worst:.2e} -> {out}")
    return 0 if worst < args.tol else 1


def cmd_toda_residual(args) -> int:
    stack = fileio.load_stack_csv(args.stack)
    per_layer = {str(k): float(np.max(np.abs(toda_residual(stack, k))))
                 for k in list(stack.k_range)[1:-1]}
    worst = max(per_layer.values(), default=0.0)
    _write_report(args, "report_toda_residual.json",
                  {"per_layer": per_layer, "max_residual": worst,
                   "within_tol": worst < args.tol})
    print(f"max chain residual {worst:.2e} over {len(per_layer)} layers")
    return 0 if worst < args.tol else 1


def cmd_toda_hirota(args) -> int:
    stack = fileio.load_stack_csv(args.stack)
    res = toda_to_hirota_form(stack, args.kappa)
    report = {"kappa": args.kappa, "max_residual": float(np.max(np.abs(res)))}
    if args.kappa == 1.0:
        direct = np.array([toda_residual(stack, k) for k in list(stack.k_range)[1:-1]])
        report["max_gap_vs_chain_residual"] = float(np.max(np.abs(res - direct)))
    _write_report(args, "report_toda_hirota.json", report)
    print(f"kappa={args.kappa}: max residual {report['max_residual']:.2e}")
    return 0


def cmd_toda_cyclic2(args) -> int:
    rng = np.random.default_rng(args.seed)
    m, n = args.size
    a, b = cyclic2_unit_family((m, n), rng)
    g_res, s_res = cyclic2_residual(a, b)
    report = {
        "size": [m, n],
        "product_constant": float(np.mean(a * b)),
        "max_product_residual": float(np.max(np.abs(g_res))),
        "max_system_residual": float(np.max(np.abs(s_res))),
    }
    ok = max(report["max_product_residual"], report["max_system_residual"]) < args.tol
    report["within_tol"] = ok
    _write_report(args, "report_toda_cyclic2.json", report)
    print(f"product residual {report['max_product_residual']:.2e}, "
          f"system residual {report['max_system_residual']:.2e}")
    return 0 if ok else 1


# -- trees ------------------------------------------------------------------------


def cmd_tree_factorize(args) -> int:
    rng = np.random.default_rng(args.seed)
    tree = trivalent_tree(args.depth)
    q = random_first_order(tree, rng)
    leftover = rng.uniform(0.5, 2.0, tree.n_vertices)
    op = assemble_trivalent(q, leftover)
    q2, left2, residual = trivalent_factorize(op, args.v0)
    report = {
        "depth": args.depth,
        "vertices": tree.n_vertices,
        "v0": args.v0,
        "residual": residual,
        "vertex_coeffs": [float(x) for x in q2.diag],
        "leftover": [float(x) for x in left2],
        "within_tol": residual < args.tol,
    }
    _write_report(args, "report_tree_factorize.json", report)
    print(f"depth {args.depth} ({tree.n_vertices} vertices): residual {residual:.2e}")
    return 0 if residual < args.tol else 1


def cmd_tree_laplace(args) -> int:
    rng = np.random.default_rng(args.seed)
    tree = trivalent_tree(args.depth)
    q = random_first_order(tree, rng)
    leftover = rng.uniform(0.5, 2.0, tree.n_vertices)
    image = trivalent_laplace(q, leftover)
    dense = trivalent_dense(image)
    symmetry = float(np.max(np.abs(dense - dense.T)))
    # transport a vector that is harmonic on the interior rows
    op = assemble_trivalent(q, leftover)
    full = trivalent_dense(op)
    interior = list(tree.interior)
    _, _, vt = np.linalg.svd(full[interior])
    psi = vt[len(interior):].T @ rng.normal(size=tree.n_vertices - len(interior))
    transported = dense @ (first_order_dense(q) @ psi)
    deep = [p for p in interior if all(r in interior for r in tree.adjacency[p])]
    kernel_residual = float(np.max(np.abs(transported[deep]))) if deep else 0.0
    report = {
        "depth": args.depth,
        "symmetry_residual": symmetry,
        "kernel_residual_deep_interior": kernel_residual,
        "deep_interior_size": len(deep),
        "within_tol": symmetry < args.tol and kernel_residual < 1e-10,
    }
    _write_report(args, "report_tree_laplace.json", report)
    print(f"image symmetric to {symmetry:.2e}; kernel transport {kernel_residual:.2e} "
          f"on {len(deep)} deep vertices")
    return 0 if report["within_tol"] else 1


# -- networks -----------------------------------------------------------------------


def cmd_net_stardelta(args) -> int:
    net = fileio.load_network(args.network)
    rng = np.random.default_rng(args.seed)
    voltage = rng.normal(size=net.n_vertices)
    new_net, new_voltage = star_triangle_network(net, voltage)
    out = _out_dir(args) / "network_stars.json"
    fileio.save_network(out, new_net)
    before = total_current(net, voltage)
    after = total_current(new_net, new_voltage)[:net.n_vertices]
    gap = float(np.max(np.abs(before - after)))
    _write_report(args, "report_net_stardelta.json", {
        "network_file": out.name,
        "centers": new_net.n_vertices - net.n_vertices,
        "current_preservation_gap": gap,
        "within_tol": gap < args.tol,
    })
    print(f"{new_net.n_vertices - net.n_vertices} stars; current gap {gap:.2e}")
    return 0 if gap < args.tol else 1


def cmd_net_factorize(args) -> int:
    net = fileio.load_network(args.network)
    fact = black_factorization(net)
    _write_report(args, "report_net_factorize.json", {
        "residual": fact.residual,
        "sigma": [float(x) for x in fact.sigma],
        "vertex_diagonal": [float(x) for x in fact.w],
        "star_conductivities": [[float(x) for x in row] for row in fact.cprime],
        "within_tol": fact.residual < args.tol,
    })
    print(f"factorization residual {fact.residual:.2e}")
    return 0 if fact.residual < args.tol else 1


def cmd_net_laplace(args) -> int:
    net = fileio.load_network(args.network)
    if args.clamp:
        voltage = dirichlet_solve(net, args.clamp)
        free = set(range(net.n_vertices)) - set(args.clamp)
    else:
        voltage = np.ones(net.n_vertices)
        free = set(range(net.n_vertices))
    try:
        result = laplace_image(net, voltage, free_vertices=free, tol=args.tol)
    except NoKernelVector as exc:
        _write_report(args, "report_net_laplace.json",
                      {"kernel_transported": False, "reason": str(exc)})
        print(f"kernel transport failed: {exc}")
        return 1
    _write_report(args, "report_net_laplace.json", {
        "kernel_transported": True,
        "normalization": result.normalization,
        "residuals": result.residuals,
        "asserted_triangles": list(result.asserted_triangles),
    })
    print(f"verified normalization: {result.normalization} "
          f"(residual {result.residuals[result.normalization]:.2e})")
    return 0


# -- verify ---------------------------------------------------------------------------


def cmd_verify_all(args) -> int:
    report, elapsed = verification.run_all(args.seed)
    path = _write_report(args, "report_verify_all.json", report)
    for entry in report["criteria"]:
        status = "PASS" if entry["passed"] else "FAIL"
        print(f"criterion {entry['criterion']:2d} {status} - {entry['name']}")
    print(f"suite: {'PASS' if report['passed'] else 'FAIL'} "
          f"in {elapsed:.1f}s -> {path}")
    return 0 if report["passed"] else 1


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sl2lattice",
        description="Discrete connections, factorizations and Laplace chains "
                    "on triangulated surfaces.")
    parser.add_argument("--out", default=".", help="output directory for reports")
    sub = parser.add_subparsers(dest="group", required=True)

    mesh = sub.add_parser("mesh", help="surface generators")
    mesh_sub = mesh.add_subparsers(dest="command", required=True)
    gen = mesh_sub.add_parser("gen", help="generate a named surface")
    gen.add_argument("--kind", required=True,
                     choices=["octahedron", "icosahedron", "torus", "disk",
                              "doubled-triangle"])
    gen.add_argument("--size", type=_parse_size, help="MxN for torus/disk")
    gen.add_argument("--name", default="mesh.json")
    gen.set_defaults(func=cmd_mesh_gen)

    conn = sub.add_parser("conn", help="discrete connections")
    conn_sub = conn.add_subparsers(dest="command", required=True)
    build = conn_sub.add_parser("build", help="build a connection on a mesh")
    build.add_argument("--mesh", required=True)
    group = build.add_mutually_exclusive_group()
    group.add_argument("--weights", help="edge-weight JSON file")
    group.add_argument("--random-gl2", action="store_true",
                       help="independent random coefficients")
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--name", default="connection.json")
    build.set_defaults(func=cmd_conn_build)
    for name, fn, extra in [
        ("check", cmd_conn_check, {}),
        ("holonomy", cmd_conn_holonomy, {}),
        ("curvature", cmd_conn_curvature, {"--vertex": int}),
        ("slnbalance", cmd_conn_slnbalance, {}),
    ]:
        p = conn_sub.add_parser(name)
        p.add_argument("connection")
        p.add_argument("--tol", type=float, default=1e-10)
        for flag, typ in extra.items():
            p.add_argument(flag, type=typ)
        p.set_defaults(func=fn)
    rec = conn_sub.add_parser("reconstruct", help="recover edge weights")
    rec.add_argument("connection")
    rec.add_argument("--seed-edge", type=_parse_edge, required=True, metavar="I,J")
    rec.add_argument("--seed-value", type=float, default=1.0)
    rec.add_argument("--tol", type=float, default=1e-8)
    rec.set_defaults(func=cmd_conn_reconstruct)

    op = sub.add_parser("op", help="self-adjoint operators")
    op_sub = op.add_subparsers(dest="command", required=True)
    for name, fn in [("factorize", cmd_op_factorize), ("combine", cmd_op_combine)]:
        p = op_sub.add_parser(name)
        p.add_argument("operator")
        p.add_argument("--tol", type=float, default=1e-10)
        p.set_defaults(func=fn)
    opl = op_sub.add_parser("laplace", help="lattice Laplace transform experiment")
    opl.add_argument("--size", type=_parse_size, default=(6, 6))
    opl.add_argument("--seed", type=int, default=0)
    opl.add_argument("--direction", type=int, default=0, choices=range(6))
    opl.add_argument("--level", type=int, default=1, choices=[0, 1])
    opl.set_defaults(func=cmd_op_laplace)

    toda = sub.add_parser("toda", help="square-lattice Laplace chains")
    toda_sub = toda.add_subparsers(dest="command", required=True)
    evolve = toda_sub.add_parser("evolve")
    evolve.add_argument("--size", type=_parse_size, default=(8, 8))
    evolve.add_argument("--steps", type=int, default=4)
    evolve.add_argument("--seed", type=int, default=0)
    evolve.add_argument("--amplitude", type=float, default=0.01)
    evolve.add_argument("--tol", type=float, default=1e-10)
    evolve.set_defaults(func=cmd_toda_evolve)
    tres = toda_sub.add_parser("residual")
    tres.add_argument("stack")
    tres.add_argument("--tol", type=float, default=1e-10)
    tres.set_defaults(func=cmd_toda_residual)
    thir = toda_sub.add_parser("hirota")
    thir.add_argument("stack")
    thir.add_argument("--kappa", type=float, default=1.0)
    thir.set_defaults(func=cmd_toda_hirota)
    tcyc = toda_sub.add_parser("cyclic2")
    tcyc.add_argument("--size", type=_parse_size, default=(8, 8))
    tcyc.add_argument("--seed", type=int, default=0)
    tcyc.add_argument("--tol", type=float, default=1e-12)
    tcyc.set_defaults(func=cmd_toda_cyclic2)

    tree = sub.add_parser("tree", help="trivalent-tree operators")
    tree_sub = tree.add_subparsers(dest="command", required=True)
    tfac = tree_sub.add_parser("factorize")
    tfac.add_argument("--depth", type=int, default=3)
    tfac.add_argument("--seed", type=int, default=0)
    tfac.add_argument("--v0", type=float, default=1.0)
    tfac.add_argument("--tol", type=float, default=1e-12)
    tfac.set_defaults(func=cmd_tree_factorize)
    tlap = tree_sub.add_parser("laplace")
    tlap.add_argument("--depth", type=int, default=3)
    tlap.add_argument("--seed", type=int, default=0)
    tlap.add_argument("--tol", type=float, default=1e-12)
    tlap.set_defaults(func=cmd_tree_laplace)

    net = sub.add_parser("net", help="electric networks")
    net_sub = net.add_subparsers(dest="command", required=True)
    std = net_sub.add_parser("stardelta")
    std.add_argument("network")
    std.add_argument("--seed", type=int, default=0)
    std.add_argument("--tol", type=float, default=1e-12)
    std.set_defaults(func=cmd_net_stardelta)
    nfac = net_sub.add_parser("factorize")
    nfac.add_argument("network")
    nfac.add_argument("--tol", type=float, default=1e-12)
    nfac.set_defaults(func=cmd_net_factorize)
    nlap = net_sub.add_parser("laplace")
    nlap.add_argument("network")
    nlap.add_argument("--clamp", type=_parse_clamps, metavar="P=V[,P=V...]")
    nlap.add_argument("--tol", type=float, default=1e-10)
    nlap.set_defaults(func=cmd_net_laplace)

    verify = sub.add_parser("verify", help="run the acceptance suite")
    verify_sub = verify.add_subparsers(dest="command", required=True)
    vall = verify_sub.add_parser("all")
    vall.add_argument("--seed", type=int, default=42)
    vall.set_defaults(func=cmd_verify_all)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
