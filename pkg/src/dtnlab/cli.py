"""Command-line front end: ``dtnlab {spectrum,evolve,verify}``.

Exit codes: 0 success, 1 input error, 2 spectral-gate violation,
3 verification failure.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .assembly import EllipticityError, SpectralGateViolation
from .dtn import build_dtn, build_robin
from .mesh import MeshError
from .scenario import Scenario, build_bundle
from .spectral import eigensolve, kernel_matrix, trace
from .verify import run_suite

EXIT_OK, EXIT_INPUT, EXIT_GATE, EXIT_VERIFY = 0, 1, 2, 3


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ps(text):
    out = []
    for v in text.split(","):
        v = v.strip().lower()
        out.append(np.inf if v in ("inf", "infinity") else int(v))
    return tuple(out)


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit code 2 is reserved for the gate
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", default="square",
                        help="square, disk, annulus, lshape or two_squares")
    common.add_argument("--mesh", help="mesh JSON file (overrides --domain)")
    common.add_argument("--resolution", type=int, default=2)
    common.add_argument("--refine", type=int, default=1)
    common.add_argument("--coeff", help="coefficient JSON file")
    common.add_argument("--a", default="identity",
                        help="diffusion preset: identity or anisotropic")
    common.add_argument("--V", default="0",
                        help="potential: a number or '<c>*lambda1D' "
                        "(write negative values as --V=-0.5*lambda1D)")
    common.add_argument("--beta", type=float, default=0.0)
    common.add_argument("--operator", choices=("dtn", "robin"), default="dtn")
    common.add_argument("--times", type=_floats, default=(0.1, 0.5, 1.0))
    common.add_argument("--p", type=_ps, default=(1, 2, np.inf))
    common.add_argument("--out", default=".")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--gate-tol", type=float, default=None)
    common.add_argument("--inject-asymmetry", type=float, default=0.0,
                        help=argparse.SUPPRESS)

    parser = _Parser(prog="dtnlab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)
    sub.add_parser("spectrum", parents=[common], help="eigenvalues and eigenfunctions")
    sub.add_parser("evolve", parents=[common], help="kernel matrices over a time grid")
    sub.add_parser("verify", parents=[common], help="run the property suite")
    return parser


def scenario_from_args(args) -> Scenario:
    times = tuple(args.times)
    if not times or any(t <= 0 for t in times) or any(
            b <= a for a, b in zip(times, times[1:])):
        raise ValueError("--times must be strictly positive and ascending")
    if args.refine < 0:
        raise ValueError("--refine must be >= 0")
    return Scenario(domain=args.domain, resolution=args.resolution,
                    refine=args.refine, mesh_path=args.mesh, a=args.a, V=args.V,
                    beta=args.beta, coeff_path=args.coeff, operator=args.operator,
                    times=times, ps=tuple(args.p), seed=args.seed,
                    gate_tol=args.gate_tol, inject_asymmetry=args.inject_asymmetry)


def _pencil(scenario: Scenario):
    """Generator matrix, mass, node ids and coordinates for the scenario."""
    bundle = build_bundle(scenario)
    if scenario.operator == "robin":
        robin = build_robin(bundle)
        nodes = np.arange(bundle.n)
        return robin.dense(), robin.mass, nodes, bundle.mesh.vertices
    dtn = build_dtn(bundle, scenario.gate_tol)
    nodes = bundle.boundary
    return dtn.S, dtn.boundary_mass, nodes, bundle.mesh.vertices[nodes]


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            # repr gives the shortest string that round-trips exactly
            w.writerow([v if isinstance(v, (str, int, np.integer)) else repr(float(v))
                        for v in row])


def write_kernel(path, nodes, K):
    write_rows(path, ["node"] + [int(n) for n in nodes],
               ([int(n)] + list(r) for n, r in zip(nodes, K)))


def cmd_spectrum(scenario: Scenario, out: Path, n_functions=10) -> int:
    S, mass, nodes, xy = _pencil(scenario)
    dec = eigensolve(S, mass)
    write_rows(out / "spectrum.csv", ["index", "eigenvalue"],
               ([i + 1, lam] for i, lam in enumerate(dec.eigenvalues)))
    k = min(n_functions, len(dec))
    vecs = dec.vectors[:, :k].copy()
    vecs[:, 0] = dec.ground_state()
    write_rows(out / "eigenfunctions.csv",
               ["node", "x", "y"] + [f"phi_{i + 1}" for i in range(k)],
               ([int(n), x, y] + list(v) for n, (x, y), v in zip(nodes, xy, vecs)))
    return EXIT_OK


def kernel_filename(t) -> str:
    return f"kernel_t{t:g}.csv"


def cmd_evolve(scenario: Scenario, out: Path) -> int:
    S, mass, nodes, _ = _pencil(scenario)
    dec = eigensolve(S, mass)
    rows = []
    for t in scenario.times:
        kt = kernel_matrix(dec, t)
        write_kernel(out / kernel_filename(t), nodes, kt.K)
        rows.append([t, float(np.sum(np.diag(kt.K) * kt.weights)), trace(dec, t)])
    write_rows(out / "trace_decay.csv", ["t", "kernel_trace", "spectral_trace"], rows)
    return EXIT_OK


def cmd_verify(scenario: Scenario, out: Path) -> int:
    report = run_suite(scenario)
    (out / "report.json").write_text(report.dumps())
    return EXIT_OK if report.overall == "pass" else EXIT_VERIFY


COMMANDS = {"spectrum": cmd_spectrum, "evolve": cmd_evolve, "verify": cmd_verify}


def _thread_limit(n):
    if n is None:
        env = os.environ.get("DTNLAB_THREADS")
        n = int(env) if env else None
    if n is None:
        return contextlib.nullcontext()
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = scenario_from_args(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with _thread_limit(args.threads):
            return COMMANDS[args.command](scenario, out)
    except SpectralGateViolation as exc:
        print(f"dtnlab: {exc}", file=sys.stderr)
        return EXIT_GATE
    except (MeshError, EllipticityError, ValueError, OSError,
            json.JSONDecodeError) as exc:
        print(f"dtnlab: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
