"""Polynomials in barycentric coordinates on simplices.

Every integral of a barycentric monomial over a simplex is known in closed
form (Dirichlet's formula), so mass, stiffness and penalty integrals in this
package are exact up to rounding.  Quadrature rules exist only for integrands
that are not polynomial in the barycentric coordinates: manufactured
right-hand sides and error norms.

A polynomial over an n-simplex is stored against its n+1 barycentric
coordinates; a polynomial over a face of that simplex (an (n-1)-simplex)
against the n coordinates of the face.  The representation is redundant
because the coordinates sum to one, and operations never normalise unless
asked to via :meth:`BarycentricPoly.eliminated` or
:meth:`BarycentricPoly.homogenized`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "BarycentricPoly",
    "SpaceSpec",
    "QuadratureRule",
    "exponents_homogeneous",
    "exponents_up_to",
    "monomial_integral",
    "monomial_product_integrals",
    "monomial_values",
    "span_basis",
    "restrict_to_face",
    "extend_from_face",
    "orthonormal_face_basis",
    "perp_complement_basis",
    "quadrature_rule",
    "classic_order2_rule",
]


# ---------------------------------------------------------------------------
# monomial bookkeeping


def _exponent_iter(nvars, degree):
    if nvars == 1:
        yield (degree,)
        return
    for d in range(degree + 1):
        for rest in _exponent_iter(nvars - 1, degree - d):
            yield (d,) + rest


@lru_cache(maxsize=None)
def exponents_homogeneous(nvars: int, degree: int) -> tuple:
    """Exponent tuples over `nvars` variables with total degree exactly `degree`."""
    return tuple(sorted(_exponent_iter(nvars, degree)))


@lru_cache(maxsize=None)
def exponents_up_to(nvars: int, degree: int) -> tuple:
    """Exponent tuples with total degree at most `degree`, lexicographic."""
    exps = []
    for d in range(degree + 1):
        exps.extend(_exponent_iter(nvars, d))
    return tuple(sorted(exps))


@lru_cache(maxsize=None)
def monomial_integral(exponents: tuple) -> Fraction:
    """Integral of prod_i lambda_i^m_i over a unit-measure simplex.

    The simplex dimension is len(exponents) - 1.  Dirichlet's formula gives
    n! * prod(m_i!) / (n + sum(m_i))! ; multiply by the measure for a
    concrete simplex.  Exact rational arithmetic throughout.
    """
    n = len(exponents) - 1
    num = math.factorial(n)
    for m in exponents:
        num *= math.factorial(m)
    return Fraction(num, math.factorial(n + sum(exponents)))


@lru_cache(maxsize=None)
def monomial_product_integrals(nvars: int, deg1: int, deg2: int) -> np.ndarray:
    """Matrix of unit-measure integrals of m_a * m_b.

    Rows run over exponents_up_to(nvars, deg1), columns over
    exponents_up_to(nvars, deg2).  Geometry independent: scaling by the
    simplex measure is the caller's job.
    """
    rows = exponents_up_to(nvars, deg1)
    cols = exponents_up_to(nvars, deg2)
    W = np.empty((len(rows), len(cols)))
    for a, ea in enumerate(rows):
        for b, eb in enumerate(cols):
            W[a, b] = float(monomial_integral(tuple(x + y for x, y in zip(ea, eb))))
    return W


def monomial_values(exponents, lams) -> np.ndarray:
    """Evaluate monomials at barycentric points; shape (npoints, nmonomials)."""
    lams = np.asarray(lams, dtype=float)
    out = np.ones((lams.shape[0], len(exponents)))
    for col, e in enumerate(exponents):
        for v, p in enumerate(e):
            if p:
                out[:, col] *= lams[:, v] ** p
    return out


# ---------------------------------------------------------------------------
# polynomials


class BarycentricPoly:
    """Polynomial in the barycentric coordinates of a simplex."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for e, c in terms.items():
                if c:
                    e = tuple(e)
                    self.terms[e] = self.terms.get(e, 0.0) + c

    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def monomial(cls, nvars, exponents, coeff=1.0):
        return cls(nvars, {tuple(exponents): coeff})

    @classmethod
    def coordinate(cls, nvars, i):
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1.0})

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def __add__(self, other):
        if not isinstance(other, BarycentricPoly):
            return NotImplemented
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return BarycentricPoly(self.nvars, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return BarycentricPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, BarycentricPoly):
            out = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    out[e] = out.get(e, 0.0) + c1 * c2
            return BarycentricPoly(self.nvars, out)
        return BarycentricPoly(self.nvars, {e: c * other for e, c in self.terms.items()})

    __rmul__ = __mul__

    def __repr__(self):
        if not self.terms:
            return "BarycentricPoly(0)"
        bits = [f"{c:+g}*l^{e}" for e, c in sorted(self.terms.items())]
        return "BarycentricPoly(" + " ".join(bits) + ")"

    def evaluate(self, lams) -> np.ndarray:
        """Values at barycentric points of shape (..., nvars)."""
        lams = np.asarray(lams, dtype=float)
        out = np.zeros(lams.shape[:-1])
        for e, c in self.terms.items():
            term = np.full(lams.shape[:-1], float(c))
            for v, p in enumerate(e):
                if p:
                    term = term * lams[..., v] ** p
            out += term
        return out

    def coefficients(self, exponent_basis) -> np.ndarray:
        """Coefficient vector against an explicit monomial list (must cover all terms)."""
        index = {e: i for i, e in enumerate(exponent_basis)}
        out = np.zeros(len(exponent_basis))
        for e, c in self.terms.items():
            out[index[e]] += c
        return out

    def integral(self, measure=1.0) -> float:
        """Integral over a simplex of the given measure."""
        total = 0.0
        for e, c in self.terms.items():
            total += c * float(monomial_integral(e))
        return total * measure

    def restrict(self, i) -> "BarycentricPoly":
        """Trace on the facet opposite coordinate i (set lambda_i = 0, drop the slot)."""
        out = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                fe = e[:i] + e[i + 1:]
                out[fe] = out.get(fe, 0.0) + c
        return BarycentricPoly(self.nvars - 1, out)

    def eliminated(self, i) -> "BarycentricPoly":
        """Equal polynomial on the simplex with no dependence on coordinate i.

        Substitutes lambda_i = 1 - sum of the others; exact on the simplex
        where the coordinates sum to one.
        """
        rest = BarycentricPoly.constant(self.nvars, 1.0)
        for l in range(self.nvars):
            if l != i:
                rest = rest - BarycentricPoly.coordinate(self.nvars, l)
        out = BarycentricPoly.zero(self.nvars)
        for e, c in self.terms.items():
            mono = BarycentricPoly.monomial(self.nvars, e[:i] + (0,) + e[i + 1:], c)
            for _ in range(e[i]):
                mono = mono * rest
            out = out + mono
        return out

    def homogenized(self, degree) -> "BarycentricPoly":
        """Equal polynomial written with every term of total degree `degree`."""
        ones = BarycentricPoly(self.nvars,
                               {tuple(int(l == v) for l in range(self.nvars)): 1.0
                                for v in range(self.nvars)})
        out = BarycentricPoly.zero(self.nvars)
        for e, c in self.terms.items():
            d = sum(e)
            if d > degree:
                raise ValueError(f"term degree {d} exceeds target {degree}")
            mono = BarycentricPoly.monomial(self.nvars, e, c)
            for _ in range(degree - d):
                mono = mono * ones
            out = out + mono
        return out

    def directional(self, slopes) -> "BarycentricPoly":
        """Derivative along a direction t, given slopes[l] = t . grad(lambda_l)."""
        out = {}
        for e, c in self.terms.items():
            for l, p in enumerate(e):
                if p and slopes[l]:
                    de = e[:l] + (p - 1,) + e[l + 1:]
                    out[de] = out.get(de, 0.0) + c * p * slopes[l]
        return BarycentricPoly(self.nvars, out)

    def canonical_coefficients(self, degree=None) -> np.ndarray:
        """Unique coefficient vector: eliminate coordinate 0, list the rest up to `degree`."""
        if degree is None:
            degree = self.degree
        p = self.eliminated(0)
        basis = [e for e in exponents_up_to(self.nvars, degree) if e[0] == 0]
        return p.coefficients(basis)

    def equals(self, other, tol=1e-12) -> bool:
        """Equality as functions on the simplex."""
        d = max(self.degree, other.degree)
        a = self.canonical_coefficients(d)
        b = other.canonical_coefficients(d)
        scale = max(1.0, np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
        return bool(np.abs(a - b).max(initial=0.0) <= tol * scale)


# ---------------------------------------------------------------------------
# polynomial space specifications


@dataclass(frozen=True)
class SpaceSpec:
    """Which span of barycentric monomials to take on a simplex.

    kind "full":  all coordinates, homogeneous total degree k   (= P_k).
    kind "hat0i": coordinates except i, homogeneous degree k    (no constant slot).
    kind "hatij": coordinates except i and j, degree at most k  (constant allowed).
    """

    kind: str
    degree: int
    i: int | None = None
    j: int | None = None

    @classmethod
    def full(cls, k):
        return cls("full", k)

    @classmethod
    def hat0i(cls, k, i):
        return cls("hat0i", k, i=i)

    @classmethod
    def hatij(cls, k, i, j):
        return cls("hatij", k, i=i, j=j)


def span_basis(spec: SpaceSpec, simplex_dim: int) -> list:
    """Monomial basis of the span described by `spec`, lexicographic order."""
    nvars = simplex_dim + 1
    if spec.kind == "full":
        exps = exponents_homogeneous(nvars, spec.degree)
    elif spec.kind == "hat0i":
        exps = [e for e in exponents_homogeneous(nvars, spec.degree) if e[spec.i] == 0]
    elif spec.kind == "hatij":
        exps = [e for e in exponents_up_to(nvars, spec.degree)
                if e[spec.i] == 0 and e[spec.j] == 0]
    else:
        raise ValueError(f"unknown space kind {spec.kind!r}")
    return [BarycentricPoly.monomial(nvars, e) for e in exps]


# ---------------------------------------------------------------------------
# faces: restriction, extension, orthonormal and complement bases


def face_vertex_slots(n: int, i: int) -> list:
    """Element-vertex indices carried by the face opposite vertex i, in slot order."""
    return [l for l in range(n + 1) if l != i]


def permute_coordinates(p: BarycentricPoly, perm) -> BarycentricPoly:
    """Relabel coordinates: slot s of the result carries slot perm[s] of p."""
    out = {}
    for e, c in p.terms.items():
        ne = tuple(e[perm[s]] for s in range(p.nvars))
        out[ne] = out.get(ne, 0.0) + c
    return BarycentricPoly(p.nvars, out)


def restrict_to_face(p: BarycentricPoly, i: int) -> BarycentricPoly:
    """Trace of an element polynomial on the face opposite vertex i."""
    return p.restrict(i)


def extend_from_face(p: BarycentricPoly, i: int, j: int | None) -> BarycentricPoly:
    """Extend a polynomial on face i of an n-simplex to the whole element.

    The extension writes p in face monomials that avoid one slot and then
    reads the face coordinates as element coordinates.  With j a vertex of
    the face, the slot of j is eliminated first (re-expansion), which makes
    the result independent of lambda_j.  With j None the polynomial is
    homogenized instead, the classical extension with no constant term.
    Either way restrict_to_face(extend_from_face(p, i, j), i) == p.
    """
    slots = face_vertex_slots(p.nvars, i)
    if j is None:
        q = p.homogenized(p.degree)
    else:
        if j == i or j not in slots:
            raise ValueError(f"excluded vertex {j} is not on face {i}")
        q = p.eliminated(slots.index(j))
    out = {}
    for e, c in q.terms.items():
        ee = [0] * (p.nvars + 1)
        for s, l in enumerate(slots):
            ee[l] = e[s]
        out[tuple(ee)] = out.get(tuple(ee), 0.0) + c
    return BarycentricPoly(p.nvars + 1, out)


@lru_cache(maxsize=None)
def orthonormal_face_basis(face_dim: int, k: int) -> tuple:
    """Basis of P_k on a face, orthonormal in the measure-scaled inner product.

    (1/|F|) int_F phi_s phi_t = delta_st.  Because the scaled inner product
    of barycentric monomials is pure combinatorics, the coefficients do not
    depend on the face shape.  Deterministic: Cholesky-based Gram-Schmidt on
    the lexicographic monomial order.
    """
    nvars = face_dim + 1
    # monomials in the leading face_dim coordinates are independent;
    # the full up-to-degree set is not (coordinates sum to one)
    exps = [e for e in exponents_up_to(nvars, k) if e[-1] == 0]
    G = np.empty((len(exps), len(exps)))
    for a, ea in enumerate(exps):
        for b, eb in enumerate(exps):
            # scaled integral: Dirichlet value over unit measure is already 1/|F|-scaled
            G[a, b] = float(monomial_integral(tuple(x + y for x, y in zip(ea, eb))))
    L = np.linalg.cholesky(G)
    C = np.linalg.inv(L)  # rows give orthonormal combinations
    basis = []
    for t in range(len(exps)):
        basis.append(BarycentricPoly(
            nvars, {e: C[t, s] for s, e in enumerate(exps) if C[t, s]}))
    return tuple(basis)


@lru_cache(maxsize=None)
def perp_complement_basis(face_dim: int, k: int) -> tuple:
    """Basis of the L2 complement of P_k inside P_{k+1} on a face.

    Candidates are the degree-(k+1) monomials in the leading face_dim
    coordinates (they complete any basis of P_k); each is then made L2(F)
    orthogonal to P_k by subtracting its projection.  Shape independent for
    the same combinatorial reason as the orthonormal basis.
    """
    nvars = face_dim + 1
    cand = [e + (0,) for e in exponents_homogeneous(face_dim, k + 1)]
    low = [e for e in exponents_up_to(nvars, k) if e[-1] == 0]
    G = np.empty((len(low), len(low)))
    for a, ea in enumerate(low):
        for b, eb in enumerate(low):
            G[a, b] = float(monomial_integral(tuple(x + y for x, y in zip(ea, eb))))
    R = np.empty((len(low), len(cand)))
    for a, ea in enumerate(low):
        for b, eb in enumerate(cand):
            R[a, b] = float(monomial_integral(tuple(x + y for x, y in zip(ea, eb))))
    X = np.linalg.solve(G, R)  # projection coefficients of each candidate
    basis = []
    for b, eb in enumerate(cand):
        terms = {eb: 1.0}
        for a, ea in enumerate(low):
            if X[a, b]:
                terms[ea] = terms.get(ea, 0.0) - X[a, b]
        basis.append(BarycentricPoly(nvars, terms))
    return tuple(basis)


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Simplex quadrature with barycentric points.

    Weights sum to the reference measure 1/dim!; some are negative, which is
    fine for the smooth integrands these rules are used on.  For a simplex
    of a given measure, integrate(values, measure) applies the affine
    scaling measure * dim! * sum(w * f).
    """

    dim: int
    degree: int
    points: np.ndarray   # (npoints, dim + 1)
    weights: np.ndarray  # (npoints,)

    def integrate(self, values, measure=1.0) -> float:
        return float(measure * math.factorial(self.dim) * np.dot(self.weights, values))


@lru_cache(maxsize=None)
def quadrature_rule(dim: int, degree: int) -> QuadratureRule:
    """Grundmann-Moller rule on the dim-simplex, exact to the requested degree."""
    s = max(0, math.ceil((degree - 1) / 2))
    d = 2 * s + 1
    n = dim
    points = []
    weights = []
    for i in range(s + 1):
        denom = d + n - 2 * i
        w = ((-1) ** i * Fraction(denom ** d,
                                  4 ** s * math.factorial(i) * math.factorial(d + n - i)))
        for beta in _exponent_iter(n + 1, s - i):
            points.append([(2 * b + 1) / denom for b in beta])
            weights.append(float(w))
    return QuadratureRule(dim, d, np.array(points), np.array(weights))


@lru_cache(maxsize=None)
def classic_order2_rule(dim: int) -> QuadratureRule:
    """Equal-weight symmetric rule exact to degree 2: 3 points on the
    triangle (barycentric permutations of (2/3, 1/6, 1/6)), 4 points on the
    tetrahedron (permutations of ((5+3*sqrt(5))/20, (5-sqrt(5))/20, ...)).

    These are the textbook low-order simplex rules; many finite element
    codes use them for both load vectors and error norms, so they matter
    when reproducing published numbers digit for digit.
    """
    if dim == 2:
        a, b = 2.0 / 3.0, 1.0 / 6.0
    elif dim == 3:
        r5 = math.sqrt(5.0)
        a, b = (5.0 + 3.0 * r5) / 20.0, (5.0 - r5) / 20.0
    else:
        raise ValueError("rule defined for dim 2 and 3 only")
    npts = dim + 1
    points = np.full((npts, npts), b)
    np.fill_diagonal(points, a)
    weights = np.full(npts, 1.0 / (npts * math.factorial(dim)))
    return QuadratureRule(dim, 2, points, weights)
