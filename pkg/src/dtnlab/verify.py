"""Named structural checks on a constructed semigroup and a suite runner.

Each check returns a :class:`CheckResult`.  Checks whose hypotheses do not
hold for the scenario are reported as ``informational`` (the quantity is
still measured) or ``skipped``; neither affects the overall status.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .assembly import SpectralGateViolation, assemble, dirichlet_eigenvalues
from .dtn import build_dtn, build_robin, conormal_two_routes, lift
from .mesh import MeshError
from .scenario import Scenario, build_bundle
from .spectral import (
    SpectralDecomposition,
    eigensolve,
    kernel_matrix,
    semigroup_apply,
    trace,
    weighted_operator_norm,
)

PASS, FAIL, INFO, SKIP = "pass", "fail", "informational", "skipped"
SCHEMA_VERSION = 1


@dataclass
class CheckResult:
    name: str
    status: str
    measured: dict
    tolerance: object
    anchor: str
    reason: str = ""

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def to_json(self) -> dict:
        out = {"name": self.name, "status": self.status,
               "measured": _jsonable(self.measured),
               "tolerance": _jsonable(self.tolerance), "anchor": self.anchor}
        if self.reason:
            out["reason"] = self.reason
        return out


@dataclass
class VerificationReport:
    scenario: dict
    checks: list = field(default_factory=list)

    @property
    def overall(self) -> str:
        return FAIL if any(c.failed for c in self.checks) else PASS

    def get(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"schema": SCHEMA_VERSION, "scenario": _jsonable(self.scenario),
                "checks": [c.to_json() for c in self.checks],
                "overall": self.overall}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return None if np.isnan(x) else x
    return x


def _status(ok, hypothesis=True):
    if not hypothesis:
        return INFO
    return PASS if ok else FAIL


def _rel(a, b):
    scale = max(np.abs(b).max(), np.finfo(float).tiny)
    return float(np.abs(a - b).max() / scale)


# -- individual checks -------------------------------------------------------


def check_selfadjoint_lowerbounded(S, mass, tol=1e-12) -> CheckResult:
    """Symmetry of the generator matrix and the bottom of its spectrum."""
    S = np.asarray(S, dtype=float)
    asym = float(np.abs(S - S.T).max() / max(np.abs(S).max(), 1e-300))
    lam1 = float(eigensolve(S, mass).eigenvalues[0])
    return CheckResult(
        "selfadjoint_lowerbounded", _status(asym <= tol and np.isfinite(lam1)),
        {"asymmetry": asym, "lambda1": lam1}, tol,
        "generator is self-adjoint and bounded below")


def _kept_times(dec, times):
    """Drop times below the smallest time scale 1/max|lambda|."""
    scale = 1.0 / max(np.abs(dec.eigenvalues).max(), 1e-300)
    kept = [t for t in times if t >= scale]
    dropped = [t for t in times if t < scale]
    return kept, dropped, scale


def check_positivity(dec: SpectralDecomposition, times, hypothesis=True,
                     tol=1e-9) -> CheckResult:
    """Kernel entries nonnegative relative to the largest entry.

    ``hypothesis`` states whether the scenario satisfies the conditions
    that guarantee positivity; if not, the minimum is only reported.
    """
    kept, dropped, scale = _kept_times(dec, times)
    mins = {}
    ok = True
    for t in kept:
        K = kernel_matrix(dec, t).K
        rel = float(K.min() / np.abs(K).max())
        mins[t] = {"min_entry": float(K.min()), "relative_min": rel}
        ok &= rel >= -tol
    return CheckResult(
        "positivity", _status(ok, hypothesis),
        {"per_time": mins, "excluded_times": dropped, "time_scale": scale},
        tol, "semigroup is positive (lattice sense) when the form is positive",
        "" if hypothesis else "positivity hypothesis does not hold; reported only")


def check_submarkov(dec: SpectralDecomposition, times, hypothesis=True, seed=0,
                    tol_one=1e-10, tol_box=1e-9, probes=8) -> CheckResult:
    """``S_t 1 <= 1`` and ``S_t`` maps [0, 1]-valued vectors into [0, 1]."""
    if not hypothesis:
        return CheckResult("submarkov", SKIP, {}, tol_one,
                           "semigroup is submarkovian for nonnegative potential",
                           "potential (or Robin weight) takes negative values")
    rng = np.random.default_rng(seed)
    n = len(dec.mass)
    one = np.ones(n)
    measured, ok = {}, True
    for t in times:
        s1 = semigroup_apply(dec, t, one)
        box = rng.uniform(0.0, 1.0, size=(probes, n))
        out = np.array([semigroup_apply(dec, t, f) for f in box])
        measured[t] = {"max_S1": float(s1.max()), "min_box": float(out.min()),
                       "max_box": float(out.max())}
        ok &= s1.max() <= 1 + tol_one
        ok &= out.min() >= -tol_box and out.max() <= 1 + tol_box
    return CheckResult("submarkov", _status(ok), measured,
                       {"S1": tol_one, "box": tol_box},
                       "semigroup is submarkovian for nonnegative potential")


def kernel_law_errors(dec: SpectralDecomposition, t, s=None, seed=0) -> dict:
    """Defects of the kernel identities at time ``t`` (and ``s`` for the
    semigroup law); all relative to the largest entry of the reference."""
    s = t if s is None else s
    kt = kernel_matrix(dec, t)
    K = kt.K
    m = kt.weights
    sym = float(np.abs(K - K.T).max() / np.abs(K).max())
    K2 = kernel_matrix(dec, 2 * t).K
    ck = _rel(K @ (m[:, None] * K), K2)
    phi = np.random.default_rng(seed).normal(size=len(m))
    action = _rel(kt.apply(phi), semigroup_apply(dec, t, phi))
    Ot = kt.operator()
    Os = kernel_matrix(dec, s).operator()
    Ots = kernel_matrix(dec, t + s).operator()
    law = _rel(Ot @ Os, Ots)
    tr = abs(float(np.sum(np.diag(K) * m)) - trace(dec, t)) / max(trace(dec, t), 1e-300)
    return {"symmetry": sym, "chapman_kolmogorov": ck, "action": action,
            "semigroup_law": law, "trace": tr}


KERNEL_TOL = {"symmetry": 1e-12, "chapman_kolmogorov": 1e-10, "action": 1e-10,
              "semigroup_law": 1e-10, "trace": 1e-10}


def check_kernel_laws(dec: SpectralDecomposition, times, seed=0) -> CheckResult:
    measured, ok = {}, True
    for t in times:
        errs = kernel_law_errors(dec, t, seed=seed)
        measured[t] = errs
        ok &= all(errs[k] <= KERNEL_TOL[k] for k in KERNEL_TOL)
    return CheckResult("kernel_laws", _status(ok), measured, KERNEL_TOL,
                       "semigroup has a symmetric kernel obeying Chapman-Kolmogorov")


def perron_data(dec: SpectralDecomposition):
    """Sign-normalized ground state, its spectral gap and min/max."""
    lam = dec.eigenvalues
    u1 = dec.ground_state()
    gap = float(lam[1] - lam[0]) if len(lam) > 1 else np.inf
    return u1, gap, float(u1.min()), float(u1.max())


def check_perron(dec: SpectralDecomposition, components=None, hypothesis=True,
                 gap_tol=1e-8, pos_tol=1e-14) -> CheckResult:
    """Simple bottom eigenvalue with a strictly positive eigenvector.

    ``components`` optionally maps each coordinate to a label (e.g. the
    boundary component) so the minimum is reported per label.
    """
    u1, gap, lo, hi = perron_data(dec)
    lam1 = float(dec.eigenvalues[0])
    need_gap = gap_tol * max(1.0, abs(lam1))
    measured = {"lambda1": lam1, "gap": gap, "delta": lo, "max": hi,
                "relative_min": lo / hi if hi > 0 else -np.inf}
    ok = gap >= need_gap and lo >= pos_tol * hi and hi > 0
    if components is not None:
        comps = np.asarray(components)
        per = {int(c): float(u1[comps == c].min()) for c in np.unique(comps)}
        measured["min_per_component"] = per
        ok &= all(v >= pos_tol * hi for v in per.values())
    return CheckResult("perron", _status(ok, hypothesis), measured,
                       {"gap": need_gap, "relative_min": pos_tol},
                       "bottom eigenvalue is simple with strictly positive eigenfunction",
                       "" if hypothesis else "Perron hypotheses do not hold")


def robin_link_data(dtn, bundle):
    """Robin pencil with ``beta = -lambda1(D_V)`` and its ground state."""
    dec_d = eigensolve(dtn.S, dtn.boundary_mass)
    lam1 = dec_d.lambda1
    phi1 = dec_d.ground_state()
    shifted = assemble(bundle.mesh, bundle.coeffs.with_beta(-lam1))
    robin = build_robin(shifted)
    R = robin.dense()
    dec_r = eigensolve(R, robin.mass)
    d = 1 / np.sqrt(robin.mass)
    scale = float(np.abs(np.linalg.eigvalsh(0.5 * (R + R.T) * d[:, None] * d)).max())
    return lam1, phi1, R, dec_r, scale


def check_robin_dtn_link(dtn, bundle, hypothesis=True, eig_tol=1e-8,
                         angle_tol=1e-6) -> CheckResult:
    """With ``beta = -min spec(D_V)`` the Robin operator has bottom eigenvalue 0
    and its ground state restricts to the DtN ground state."""
    lam1, phi1, R, dec_r, scale = robin_link_data(dtn, bundle)
    r0 = float(dec_r.eigenvalues[0])
    trace_u = dec_r.ground_state()[bundle.boundary]
    w = dtn.boundary_mass
    cos = abs(np.sum(w * trace_u * phi1)) / np.sqrt(
        np.sum(w * trace_u ** 2) * np.sum(w * phi1 ** 2))
    angle = float(np.arccos(min(1.0, cos)))
    residual = float(np.abs(R @ lift(dtn, phi1)).max() / np.abs(R).max())
    ok = abs(r0) <= eig_tol * scale and angle <= angle_tol
    return CheckResult(
        "robin_dtn_link", _status(ok, hypothesis),
        {"beta": -lam1, "robin_lambda1": r0, "scale": scale, "angle": angle,
         "lifted_residual": residual},
        {"eigenvalue": eig_tol * scale, "angle": angle_tol},
        "Robin operator with beta = -min spec(D_V) has bottom eigenvalue 0",
        "" if hypothesis else "Perron hypotheses do not hold")


def check_strict_kernel_positivity(dec: SpectralDecomposition, times,
                                   hypothesis=True, tol=1e-14) -> CheckResult:
    measured, ok = {}, True
    for t in times:
        K = kernel_matrix(dec, t).K
        rel = float(K.min() / np.abs(K).max())
        measured[t] = {"min_entry": float(K.min()), "relative_min": rel}
        ok &= rel > tol
    return CheckResult("strict_kernel_positivity", _status(ok, hypothesis),
                       measured, tol,
                       "kernel is strictly positive for every t > 0 (irreducibility)",
                       "" if hypothesis else "Perron hypotheses do not hold")


def check_lp_bound(dec: SpectralDecomposition, times, ps=(1, 2, np.inf),
                   tol=1e-8, dual_tol=1e-10) -> CheckResult:
    """Weighted ``||S_t||_{p->p} <= (max u1 / min u1) exp(-lambda1 t)``."""
    u1, _, lo, hi = perron_data(dec)
    if lo <= 0:
        return CheckResult("lp_bound", SKIP, {"delta": lo}, tol,
                           "L_p bound M exp(-lambda1 t) with M = max u1 / min u1",
                           "ground state is not strictly positive")
    M = hi / lo
    lam1 = dec.lambda1
    measured, ok = {"M": M, "lambda1": lam1}, True
    for t in times:
        kt = kernel_matrix(dec, t)
        bound = M * np.exp(-lam1 * t)
        row = {"bound": bound}
        for p in ps:
            v = weighted_operator_norm(kt, p)
            row["inf" if p == np.inf else p] = v
            ok &= v <= bound * (1 + tol)
        if 1 in ps and np.inf in ps:
            row["dual_gap"] = abs(row[1] - row["inf"]) / row["inf"]
            ok &= row["dual_gap"] <= dual_tol
        measured[t] = row
    return CheckResult("lp_bound", _status(ok), measured,
                       {"relative": tol, "duality": dual_tol},
                       "L_p bound M exp(-lambda1 t) with M = max u1 / min u1")


def coupling_components(S, tol=1e-14) -> int:
    """Number of invariant coordinate blocks of a generator matrix.

    Two coordinates are coupled when the off-diagonal entry between them is
    nonzero (relative to the largest entry); the generator leaves no proper
    coordinate subspace invariant iff this graph is connected.
    """
    S = np.asarray(S)
    mask = np.abs(S) > tol * np.abs(S).max()
    np.fill_diagonal(mask, False)
    i, j = np.nonzero(mask)
    n = len(S)
    count, _ = connected_components(coo_matrix((np.ones(len(i)), (i, j)),
                                               shape=(n, n)), directed=False)
    return int(count)


def check_irreducible_generator(S) -> CheckResult:
    count = coupling_components(S)
    return CheckResult("irreducible_generator", _status(count == 1),
                       {"blocks": count}, 1,
                       "no proper coordinate subspace is invariant")


def short_time_rates(dec: SpectralDecomposition, phi, times=(1e-3, 1e-2, 1e-1)):
    """``||S_t phi - phi||_inf`` at small times."""
    return {t: float(np.abs(semigroup_apply(dec, t, phi) - phi).max()) for t in times}


def check_short_time(dec, phi) -> CheckResult:
    return CheckResult("short_time_convergence", INFO,
                       {"sup_defect": short_time_rates(dec, phi)}, None,
                       "strong continuity at t = 0 (evidence only)",
                       "finite-dimensional semigroups are always strongly continuous")


# -- suite ---------------------------------------------------------------------


def run_suite(scenario: Scenario) -> VerificationReport:
    """Run every check that applies to the scenario."""
    report = VerificationReport(scenario.describe())
    try:
        bundle = build_bundle(scenario)
    except (MeshError, ValueError) as exc:
        report.checks.append(CheckResult("construction", FAIL, {"error": str(exc)},
                                         None, "scenario construction"))
        return report

    mesh = bundle.mesh
    lamD = dirichlet_eigenvalues(bundle)
    positive_form = len(lamD) > 0 and lamD[0] > 0
    report.scenario.update({
        "n_nodes": mesh.n_vertices, "n_boundary": len(bundle.boundary),
        "omega_connected": mesh.omega_connected,
        "boundary_components": mesh.component_count,
        "V_min": float(bundle.coeffs.V.min()), "V_max": float(bundle.coeffs.V.max()),
        "dirichlet_lambda1": float(lamD[0]) if len(lamD) else None,
        "dirichlet_positive": bool(positive_form),
    })
    times = tuple(scenario.times)
    seed = scenario.seed

    if scenario.operator == "robin":
        robin = build_robin(bundle)
        S, mass = robin.dense(), robin.mass
        labels = None
        perron_hyp = mesh.omega_connected
        positivity_hyp = True
        submarkov_hyp = bundle.potential_nonnegative and bundle.beta_nonnegative
    else:
        try:
            dtn = build_dtn(bundle, scenario.gate_tol)
        except SpectralGateViolation as exc:
            report.checks.append(CheckResult(
                "construction", FAIL,
                {"error": str(exc), "distance": exc.distance}, exc.tol,
                "zero is not in the spectrum of the Dirichlet operator"))
            return report
        S, mass = dtn.S, dtn.boundary_mass
        comp = mesh.node_component()
        labels = np.array([comp[int(z)] for z in bundle.boundary])
        perron_hyp = mesh.omega_connected and positive_form
        positivity_hyp = positive_form
        submarkov_hyp = bundle.potential_nonnegative

    if scenario.inject_asymmetry:
        S = S.copy()
        S[0, -1] += scenario.inject_asymmetry * np.abs(S).max()

    report.checks.append(check_selfadjoint_lowerbounded(S, mass))
    dec = eigensolve(S, mass)
    report.scenario["lambda1"] = dec.lambda1
    report.checks.append(check_positivity(dec, times, positivity_hyp))
    report.checks.append(check_submarkov(dec, times, submarkov_hyp, seed))
    report.checks.append(check_kernel_laws(dec, times, seed))
    report.checks.append(check_perron(dec, labels, perron_hyp))
    if scenario.operator != "robin":
        report.checks.append(check_robin_dtn_link(dtn, bundle, perron_hyp))
    # connectedness of the domain is the hypothesis exercised here, so a
    # disconnected domain is a hard failure rather than informational
    strict_hyp = positivity_hyp and (perron_hyp or not mesh.omega_connected)
    report.checks.append(check_strict_kernel_positivity(dec, times, strict_hyp))
    report.checks.append(check_irreducible_generator(S))
    if perron_hyp:
        report.checks.append(check_lp_bound(dec, times, scenario.ps))
    else:
        report.checks.append(CheckResult(
            "lp_bound", SKIP, {}, None,
            "L_p bound M exp(-lambda1 t) with M = max u1 / min u1",
            "strict Perron positivity not established"))

    x = mesh.vertices[bundle.boundary if scenario.operator != "robin" else
                      np.arange(mesh.n_vertices)]
    report.checks.append(check_short_time(dec, x[:, 0]))
    if scenario.operator != "robin":
        bx = mesh.vertices[bundle.boundary]
        cmp = conormal_two_routes(dtn, bundle, bx[:, 0])
        report.checks.append(CheckResult(
            "conormal_two_routes", INFO, {"discrepancy": cmp.discrepancy}, None,
            "variational and pointwise conormal derivatives agree",
            "consistency error; decreases under refinement"))
    return report
