"""Manufactured-solution convergence studies.

A study solves the same smooth problem on a sequence of uniform meshes and
reports four errors per level: the displacement and stress L2 errors, the
broken divergence error, and the plain L2 norm of the stress jumps across
interior faces.  Orders are computed between consecutive levels from the
mesh-size ratio.  The mesh-dependent star norm of the stress error is kept
alongside; its square is by definition the L2 square plus the divergence
square plus the eta-weighted jump sum.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import sympy

from stressfem.assembly import (
    Material,
    build_saddle_system,
    compile_element,
    div_monomials,
    face_jump_square_norms,
    stress_monomials,
)
from stressfem.mesh import generate_uniform_mesh
from stressfem.polynomial import (
    classic_order2_rule,
    exponents_homogeneous,
    monomial_values,
    quadrature_rule,
)
from stressfem.solver import SolverError, solve_saddle

__all__ = [
    "ManufacturedCase",
    "ErrorRecord",
    "StudyReport",
    "manufactured_case",
    "evaluate_errors",
    "convergence_study",
    "export_report",
    "import_report",
    "CSV_COLUMNS",
]

CSV_COLUMNS = [
    "m", "err_u", "ord_u", "err_sigma", "ord_sigma",
    "err_div", "ord_div", "err_jump", "ord_jump", "dim_V", "dim_Sigma",
]


@dataclass
class ManufacturedCase:
    """Exact displacement, stress, and load of a smooth test problem."""

    dim: int
    material: Material
    displacement: callable  # (npts, n) -> (npts, n)
    stress: callable        # (npts, n) -> (npts, n, n)
    load: callable          # (npts, n) -> (npts, n), equals div(stress)

    def check_consistency(self, npoints=100, step=1e-6, tol=1e-6, seed=11):
        """Finite-difference cross-check of the symbolic derivatives."""
        rng = np.random.default_rng(seed)
        n = self.dim
        pts = rng.uniform(0.05, 0.95, size=(npoints, n))

        grad = np.empty((npoints, n, n))
        for b in range(n):
            dp = np.zeros(n)
            dp[b] = step
            grad[:, :, b] = (self.displacement(pts + dp)
                             - self.displacement(pts - dp)) / (2 * step)
        eps = 0.5 * (grad + np.swapaxes(grad, 1, 2))
        sig_fd = self.material.stress_from_strain(eps)
        sig = self.stress(pts)
        scale = max(1.0, np.abs(sig).max())
        err_sig = np.abs(sig - sig_fd).max() / scale

        div_fd = np.zeros((npoints, n))
        for b in range(n):
            dp = np.zeros(n)
            dp[b] = step
            div_fd += (self.stress(pts + dp)[:, :, b]
                       - self.stress(pts - dp)[:, :, b]) / (2 * step)
        f = self.load(pts)
        scale = max(1.0, np.abs(f).max())
        err_f = np.abs(f - div_fd).max() / scale

        if err_sig > tol or err_f > tol:
            raise AssertionError(
                f"manufactured case is inconsistent: stress {err_sig:.2e}, "
                f"load {err_f:.2e}")
        return max(err_sig, err_f)


def _vectorize_component(expr, xs):
    fn = sympy.lambdify(xs, expr, modules="numpy")

    def call(pts):
        cols = [pts[:, a] for a in range(len(xs))]
        val = fn(*cols)
        return np.broadcast_to(np.asarray(val, dtype=float), (len(pts),)).copy()

    return call


def manufactured_case(dim, material: Material = None) -> ManufacturedCase:
    """Clamped-boundary polynomial/trigonometric displacement on the unit box.

    Both components vanish on the whole boundary, so the homogeneous
    Dirichlet problem is exact.  The stress and load come from symbolic
    differentiation and are finite-difference checked on random points.
    """
    if material is None:
        material = Material()
    if dim == 2:
        x, y = xs = sympy.symbols("x y")
        u = [
            sympy.exp(x - y) * x * y * (1 - x) * (1 - y),
            sympy.sin(sympy.pi * x) * sympy.sin(sympy.pi * y),
        ]
    elif dim == 3:
        x, y, z = xs = sympy.symbols("x y z")
        g = x * (1 - x) * y * (1 - y) * z * (1 - z)
        u = [16 * g, 32 * g, 64 * g]
    else:
        raise ValueError("dim must be 2 or 3")

    grad = [[sympy.diff(u[a], xs[b]) for b in range(dim)] for a in range(dim)]
    eps = [[sympy.Rational(1, 2) * (grad[a][b] + grad[b][a])
            for b in range(dim)] for a in range(dim)]
    tr = sum(eps[a][a] for a in range(dim))
    sig = [[2 * material.mu * eps[a][b] + (material.lam * tr if a == b else 0)
            for b in range(dim)] for a in range(dim)]
    f = [sum(sympy.diff(sig[a][b], xs[b]) for b in range(dim))
         for a in range(dim)]

    u_fns = [_vectorize_component(sympy.simplify(c), xs) for c in u]
    sig_fns = [[_vectorize_component(sympy.expand(sig[a][b]), xs)
                for b in range(dim)] for a in range(dim)]
    f_fns = [_vectorize_component(sympy.expand(c), xs) for c in f]

    def displacement(pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, dim)
        return np.stack([fn(pts) for fn in u_fns], axis=1)

    def stress(pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, dim)
        out = np.empty((len(pts), dim, dim))
        for a in range(dim):
            for b in range(dim):
                out[:, a, b] = sig_fns[a][b](pts)
        return out

    def load(pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, dim)
        return np.stack([fn(pts) for fn in f_fns], axis=1)

    case = ManufacturedCase(dim, material, displacement, stress, load)
    case.check_consistency()
    return case


@dataclass
class ErrorRecord:
    m: int
    err_u: float
    err_sigma: float
    err_div: float
    err_jump: float
    err_star: float
    dim_V: int
    dim_Sigma: int

    def to_dict(self):
        return {
            "m": self.m, "err_u": self.err_u, "err_sigma": self.err_sigma,
            "err_div": self.err_div, "err_jump": self.err_jump,
            "err_star": self.err_star, "dim_V": self.dim_V,
            "dim_Sigma": self.dim_Sigma,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["m"]), float(d["err_u"]), float(d["err_sigma"]),
                   float(d["err_div"]), float(d["err_jump"]),
                   float(d["err_star"]), int(d["dim_V"]), int(d["dim_Sigma"]))


def evaluate_errors(system, solution, case: ManufacturedCase, m,
                    degree=None, chunk=2048, rule=None) -> ErrorRecord:
    """All error norms of one solve, by quadrature of exactness 2k + 8.

    An explicit rule overrides the default; the jump column is exact
    either way since it never sees the smooth fields.
    """
    space = system.stress_space
    disp = system.displacement_space
    mesh = space.mesh
    n, k = mesh.dim, space.k
    if rule is None:
        if degree is None:
            degree = 2 * k + 8
        rule = quadrature_rule(n, degree)
    nq = len(rule.weights)
    exps1 = stress_monomials(n, k)
    exps0 = div_monomials(n, k)
    hom = exponents_homogeneous(n + 1, k)
    sv = monomial_values(exps1, rule.points)
    dv = monomial_values(exps0, rule.points)
    hv = monomial_values(hom, rule.points)
    nfact = math.factorial(n)

    sq_u = sq_sig = sq_div = 0.0
    ne = mesh.num_elements
    for start in range(0, ne, chunk):
        els = range(start, min(start + chunk, ne))
        nb = len(els)
        verts = mesh.vertices[mesh.elements[start:start + nb]]
        phys = np.einsum("qa,ban->bqn", rule.points, verts)
        flat = phys.reshape(-1, n)

        comp = np.empty((nb, len(compile_element(space, start).pair_gram), len(exps1)))
        dcomp = np.empty((nb, n, len(exps0)))
        tens = np.empty((nb,) + compile_element(space, start).tensors.shape)
        ucoef = np.empty((nb, len(hom), n))
        vols = np.empty(nb)
        for b, e in enumerate(els):
            ce = compile_element(space, e)
            gd, sg = space.element_dofs(e)
            c = sg * solution.stress[gd]
            comp[b] = np.einsum("p,pam->am", c, ce.C)
            dcomp[b] = np.einsum("p,pam->am", c, ce.D)
            tens[b] = ce.tensors
            ucoef[b] = solution.displacement[disp.element_dofs(e)].reshape(
                len(hom), n)
            vols[b] = ce.volume

        sig_h = np.einsum("bam,qm,baij->bqij", comp, sv, tens, optimize=True)
        div_h = np.einsum("bam,qm->bqa", dcomp, dv)
        u_h = np.einsum("qh,bha->bqa", hv, ucoef)

        sig_diff = case.stress(flat).reshape(nb, nq, n, n) - sig_h
        div_diff = case.load(flat).reshape(nb, nq, n) - div_h
        u_diff = case.displacement(flat).reshape(nb, nq, n) - u_h

        w = rule.weights * nfact
        sq_sig += float(np.einsum("b,q,bqij,bqij->", vols, w, sig_diff, sig_diff))
        sq_div += float(np.einsum("b,q,bqa,bqa->", vols, w, div_diff, div_diff))
        sq_u += float(np.einsum("b,q,bqa,bqa->", vols, w, u_diff, u_diff))

    jumps = face_jump_square_norms(space, solution.stress)
    sq_jump = sum(jumps.values())
    weighted = sum(v / mesh.face_scales[f] for f, v in jumps.items())
    star = math.sqrt(sq_sig + sq_div + system.eta * weighted)

    return ErrorRecord(
        m=int(m), err_u=math.sqrt(sq_u), err_sigma=math.sqrt(sq_sig),
        err_div=math.sqrt(sq_div), err_jump=math.sqrt(sq_jump), err_star=star,
        dim_V=disp.num_dofs, dim_Sigma=space.num_dofs)


@dataclass
class StudyReport:
    dim: int
    k: int
    kind: str
    eta: float
    records: list = field(default_factory=list)
    failure: str = None

    def orders(self):
        """Per record, dict of ord_u/ord_sigma/ord_div/ord_jump (None first)."""
        out = []
        prev = None
        for rec in self.records:
            row = {}
            for name in ("u", "sigma", "div", "jump"):
                if prev is None:
                    row[f"ord_{name}"] = None
                else:
                    e0 = getattr(prev, f"err_{name}")
                    e1 = getattr(rec, f"err_{name}")
                    ratio = math.log(rec.m / prev.m)
                    if e0 > 0 and e1 > 0 and ratio > 0:
                        row[f"ord_{name}"] = math.log(e0 / e1) / ratio
                    else:
                        row[f"ord_{name}"] = None
            out.append(row)
            prev = rec
        return out

    def to_rows(self):
        rows = []
        for rec, ords in zip(self.records, self.orders()):
            row = {
                "m": rec.m,
                "err_u": rec.err_u, "err_sigma": rec.err_sigma,
                "err_div": rec.err_div, "err_jump": rec.err_jump,
                "dim_V": rec.dim_V, "dim_Sigma": rec.dim_Sigma,
            }
            for key, val in ords.items():
                row[key] = "" if val is None else val
            rows.append(row)
        return rows

    def format_table(self):
        header = (f"{'m':>4} {'err_u':>10} {'ord':>6} {'err_sigma':>10} "
                  f"{'ord':>6} {'err_div':>10} {'ord':>6} {'err_jump':>10} "
                  f"{'ord':>6} {'dim_V':>8} {'dim_Sigma':>10}")
        lines = [header]
        for rec, ords in zip(self.records, self.orders()):
            cells = [f"{rec.m:>4}"]
            for name in ("u", "sigma", "div", "jump"):
                cells.append(f"{getattr(rec, 'err_' + name):>10.5f}")
                o = ords[f"ord_{name}"]
                cells.append("     -" if o is None else f"{o:>6.2f}")
            cells.append(f"{rec.dim_V:>8}")
            cells.append(f"{rec.dim_Sigma:>10}")
            lines.append(" ".join(cells))
        if self.failure:
            lines.append(f"aborted: {self.failure}")
        return "\n".join(lines)

    def to_json(self):
        return json.dumps({
            "dim": self.dim, "k": self.k, "kind": self.kind, "eta": self.eta,
            "failure": self.failure,
            "records": [r.to_dict() for r in self.records],
        }, indent=2)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            dim=int(d["dim"]), k=int(d["k"]), kind=d["kind"],
            eta=float(d["eta"]), failure=d.get("failure"),
            records=[ErrorRecord.from_dict(r) for r in d["records"]])


DEFAULT_LEVELS = {
    (2, 0): [8, 16, 32, 64],
    (2, 1): [4, 8, 16, 32],
    (2, 2): [4, 8, 16, 32],
    (3, 0): [2, 4, 8],
    (3, 1): [2, 4, 8],
    (3, 2): [2, 4],
}


def convergence_study(dim, k, kind="s1", levels=None, eta=1.0,
                      material=None, rhs_degree=None, error_degree=None,
                      mesh_factory=None, progress=None,
                      evaluation="exact") -> StudyReport:
    """Run the manufactured problem over a mesh sequence.

    evaluation selects how the load vector and error norms are computed:
    "exact" uses high-order quadrature, "classic" uses the equal-weight
    degree-2 simplex rule for both, which is what widely used reference
    implementations do and is the mode to use when comparing against
    numbers produced by them.

    A failure at any level (mesh rejection, singular system) stops the
    sequence; the report keeps the completed records and the failure text.
    """
    if material is None:
        material = Material()
    if levels is None:
        levels = DEFAULT_LEVELS[(dim, k)]
    if mesh_factory is None:
        mesh_factory = lambda m: generate_uniform_mesh(dim, m)
    if evaluation not in ("exact", "classic"):
        raise ValueError(f"unknown evaluation mode {evaluation!r}")
    shared_rule = classic_order2_rule(dim) if evaluation == "classic" else None
    case = manufactured_case(dim, material)
    report = StudyReport(dim=dim, k=k, kind=kind, eta=eta)
    for m in levels:
        try:
            mesh = mesh_factory(m)
            system = build_saddle_system(
                mesh, k, kind, material=material, eta=eta,
                load=case.load, rhs_degree=rhs_degree, rhs_rule=shared_rule)
            sol = solve_saddle(system)
            rec = evaluate_errors(system, sol, case, m, degree=error_degree,
                                  rule=shared_rule)
        except (SolverError, ValueError) as exc:
            report.failure = f"level m={m}: {exc}"
            break
        report.records.append(rec)
        if progress is not None:
            progress(rec)
    return report


def export_report(report: StudyReport, path=None, fmt="csv"):
    """Write a report as CSV (the table columns) or JSON (lossless)."""
    if fmt == "json":
        text = report.to_json()
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in report.to_rows():
            writer.writerow({key: _csv_cell(row[key]) for key in CSV_COLUMNS})
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _csv_cell(value):
    if isinstance(value, float):
        return repr(value)
    return value


def import_report(source) -> StudyReport:
    """Read back a JSON report (path or literal text)."""
    text = source
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and not source.lstrip().startswith("{"):
        with open(source) as fh:
            text = fh.read()
    return StudyReport.from_json(text)
