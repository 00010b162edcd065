"""Geometry of the deformed sphere: embedding, metric, connections, curvature.

Every closed form here has an independent assembly route through the exact
lattice star product (embedding identities, metric from the tangent basis,
connection contractions, Riemann/Ricci from the connection tables), so each
expression can be cross-verified rather than trusted.

All pointwise functions accept complex ``x`` (needed by the flow and mode
machinery, which evaluates the geometry on shifted slices x +- i k h) and
complex ``alpha`` (needed for the analytic continuation to imaginary
deformation parameter).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .starprod import Deformation, SingularityError, TrigPoly, basis_f, star_lattice

_SING_EPS = 1e-14


# ---------------------------------------------------------------------------
# embedding and tangent basis (exact lattice objects)


@dataclass(frozen=True)
class Embedding:
    """Unit embedding vector of the deformed sphere and its scale factors.

    ``lam`` holds the three components on the ambient basis as exact
    trigonometric polynomials; A = 1/cosh h and B = A sqrt(cosh 2h) are fixed
    by the unit constraint lam . lam = 1 under the star scalar product.
    """

    lam: tuple
    A: float
    B: float
    d: Deformation


def build_embedding(d: Deformation) -> Embedding:
    h = d.require_real("the embedding")
    A = 1.0 / math.cosh(h)
    B = A * math.sqrt(math.cosh(2.0 * h))
    lam = (
        A * basis_f(2),
        A * basis_f(1),
        B * TrigPoly.cosx(),
    )
    return Embedding(lam, A, B, d)


def tangent_basis(e: Embedding):
    """E_mu = d_mu lam, by exact lattice differentiation."""
    E1 = tuple(c.dx() for c in e.lam)
    E2 = tuple(c.dy() for c in e.lam)
    return E1, E2


def star_dot(u, v, d: Deformation) -> TrigPoly:
    """Componentwise star product summed over the ambient index."""
    out = TrigPoly()
    for a, b in zip(u, v):
        out = out + star_lattice(a, b, d)
    return out


def star_gram(e: Embedding):
    """2x2 matrix of TrigPolys  E_mu . E_nu  (not yet evaluated)."""
    E = tangent_basis(e)
    return [[star_dot(E[mu], E[nu], e.d) for nu in range(2)] for mu in range(2)]


def metric_from_basis(e: Embedding, x, y=0.0) -> np.ndarray:
    """Deformed metric assembled from the tangent basis at a point.

    The result is independent of y; callers may vary y to check that claim.
    """
    gram = star_gram(e)
    g = np.empty((2, 2), dtype=complex)
    for mu in range(2):
        for nu in range(2):
            g[mu, nu] = gram[mu][nu](x, y)
    return g


# ---------------------------------------------------------------------------
# closed-form metric, inverse, determinant


def metric_closed(x, alpha) -> np.ndarray:
    """g_11 = 1, g_22 = sin^2 x - alpha^2 cos^2 x, g_12 = -g_21 = -alpha cos 2x."""
    s2, c2 = np.sin(x) ** 2, np.cos(x) ** 2
    off = alpha * np.cos(2.0 * x)
    return np.array(
        [[s2 + c2, -off], [off, s2 - alpha**2 * c2]]
    )


def det_metric(x, alpha):
    """det g = sin^2 x - alpha^2 cos^2 x + alpha^2 cos^2 2x."""
    return np.sin(x) ** 2 - alpha**2 * np.cos(x) ** 2 + alpha**2 * np.cos(2.0 * x) ** 2


def d_alpha(x, alpha):
    """Inverse metric determinant 1/det(g); raises at the degenerate locus."""
    det = det_metric(x, alpha)
    if abs(det) < _SING_EPS:
        raise SingularityError(f"metric degenerate at x={x}, alpha={alpha}")
    return 1.0 / det


def inverse_metric(x, alpha):
    """Closed-form inverse metric together with d_alpha."""
    da = d_alpha(x, alpha)
    s2, c2 = np.sin(x) ** 2, np.cos(x) ** 2
    off = alpha * np.cos(2.0 * x)
    ginv = np.array(
        [[(s2 - alpha**2 * c2) * da, off * da], [-off * da, (s2 + c2) * da]]
    )
    return ginv, da


# ---------------------------------------------------------------------------
# connections


def gamma_lower_closed(x, alpha) -> np.ndarray:
    """All-lower connection components, indexed [mu, nu, sigma]."""
    s2x = np.sin(2.0 * x)
    g = np.zeros((2, 2, 2), dtype=np.result_type(x, alpha, float))
    g[0, 0, 1] = alpha * s2x
    g[1, 1, 1] = alpha * s2x
    g[0, 1, 0] = -alpha * s2x
    g[1, 0, 0] = -alpha * s2x
    g[0, 1, 1] = 0.5 * (1.0 + alpha**2) * s2x
    g[1, 0, 1] = 0.5 * (1.0 + alpha**2) * s2x
    g[1, 1, 0] = -0.5 * (1.0 + alpha**2) * s2x
    return g


def christoffel_classical(x, alpha) -> np.ndarray:
    """Symmetric part from metric derivatives, indexed [mu, nu, sigma]."""
    s2x = np.sin(2.0 * x)
    c = np.zeros((2, 2, 2), dtype=np.result_type(x, alpha, float))
    c[0, 1, 1] = 0.5 * (1.0 + alpha**2) * s2x
    c[1, 0, 1] = 0.5 * (1.0 + alpha**2) * s2x
    c[1, 1, 0] = -0.5 * (1.0 + alpha**2) * s2x
    return c


@dataclass(frozen=True)
class TorsionSplit:
    """Split of the lower connection into the classical Christoffel part and
    the antisymmetrized torsion part."""

    christoffel: np.ndarray
    torsion: np.ndarray


def torsion_split(x, alpha) -> TorsionSplit:
    c = christoffel_classical(x, alpha)
    return TorsionSplit(c, gamma_lower_closed(x, alpha) - c)


def gamma_upper_closed(x, alpha) -> np.ndarray:
    """Mixed connection components Gamma^sigma_{mu nu}, indexed [mu, nu, sigma]."""
    da = d_alpha(x, alpha)
    s2x, c2x, s4x = np.sin(2.0 * x), np.cos(2.0 * x), np.sin(4.0 * x)
    a2 = alpha * alpha
    g = np.zeros((2, 2, 2), dtype=np.result_type(x, alpha, float))
    g[0, 0, 0] = -0.5 * a2 * da * s4x
    g[0, 0, 1] = alpha * da * s2x
    g[0, 1, 0] = g[1, 0, 0] = 0.5 * (alpha**3 - alpha) * da * s2x
    g[0, 1, 1] = g[1, 0, 1] = 0.5 * (1.0 + a2 - 2.0 * a2 * c2x) * da * s2x
    g[1, 1, 0] = 0.25 * (c2x * (a2 - 1.0) ** 2 + alpha**4 - 1.0) * da * s2x
    g[1, 1, 1] = alpha * (1.0 - 0.5 * (1.0 + a2) * c2x) * da * s2x
    return g


def gamma_upper_dx(x, alpha) -> np.ndarray:
    """Exact x-derivative of the mixed connection components.

    Each component is N(x) * d_alpha(x) with trigonometric N, so the
    derivative is N' d_alpha - N D' d_alpha^2 with
    D' = (1 + alpha^2) sin 2x - 2 alpha^2 sin 4x.
    """
    da = d_alpha(x, alpha)
    s2x, c2x = np.sin(2.0 * x), np.cos(2.0 * x)
    s4x, c4x = np.sin(4.0 * x), np.cos(4.0 * x)
    a2 = alpha * alpha
    Dp = (1.0 + a2) * s2x - 2.0 * a2 * s4x

    N = np.zeros((2, 2, 2), dtype=np.result_type(x, alpha, float))
    Np = np.zeros_like(N)
    N[0, 0, 0] = -0.5 * a2 * s4x
    Np[0, 0, 0] = -2.0 * a2 * c4x
    N[0, 0, 1] = alpha * s2x
    Np[0, 0, 1] = 2.0 * alpha * c2x
    N[0, 1, 0] = N[1, 0, 0] = 0.5 * (alpha**3 - alpha) * s2x
    Np[0, 1, 0] = Np[1, 0, 0] = (alpha**3 - alpha) * c2x
    N[0, 1, 1] = N[1, 0, 1] = 0.5 * (1.0 + a2 - 2.0 * a2 * c2x) * s2x
    Np[0, 1, 1] = Np[1, 0, 1] = (1.0 + a2) * c2x - 2.0 * a2 * c4x
    N[1, 1, 0] = 0.25 * (c2x * (a2 - 1.0) ** 2 + alpha**4 - 1.0) * s2x
    Np[1, 1, 0] = 0.5 * (a2 - 1.0) ** 2 * c4x + 0.5 * (alpha**4 - 1.0) * c2x
    N[1, 1, 1] = alpha * s2x - 0.25 * alpha * (1.0 + a2) * s4x
    Np[1, 1, 1] = 2.0 * alpha * c2x - alpha * (1.0 + a2) * c4x

    return Np * da - N * Dp * da * da


def connections(x, alpha):
    """Lower and mixed connection tables plus the Christoffel/torsion split."""
    return gamma_lower_closed(x, alpha), gamma_upper_closed(x, alpha), torsion_split(x, alpha)


def gamma_lower_from_basis(e: Embedding, x, y=0.0) -> np.ndarray:
    """Gamma_{mu nu sigma} = (d_mu E_nu) . E_sigma assembled on the lattice."""
    E = tangent_basis(e)
    dE = [[c.dx() for c in E[nu]] for nu in range(2)], [[c.dy() for c in E[nu]] for nu in range(2)]
    g = np.empty((2, 2, 2), dtype=complex)
    for mu in range(2):
        for nu in range(2):
            for sigma in range(2):
                g[mu, nu, sigma] = star_dot(dE[mu][nu], E[sigma], e.d)(x, y)
    return g


def torsion_from_basis(e: Embedding, x, y=0.0) -> np.ndarray:
    """Torsion from its defining antisymmetrization of the scalar product."""
    E = tangent_basis(e)
    dE = [[c.dx() for c in E[nu]] for nu in range(2)], [[c.dy() for c in E[nu]] for nu in range(2)]
    t = np.empty((2, 2, 2), dtype=complex)
    for mu in range(2):
        for nu in range(2):
            for sigma in range(2):
                left = star_dot(dE[mu][nu], E[sigma], e.d)
                right = star_dot(E[sigma], dE[mu][nu], e.d)
                t[mu, nu, sigma] = 0.5 * (left - right)(x, y)
    return t


@dataclass
class ConsistencyReport:
    checks: dict

    @property
    def max_violation(self) -> float:
        return max(self.checks.values(), default=0.0)


def gamma_consistency(x, alpha) -> ConsistencyReport:
    """Contraction checks tying the mixed connection to the split lower one.

    All factors depend on x only, so the star product in the contraction is
    the ordinary product.  The dual connection is also checked: the mixed
    table at -alpha must equal the (christoffel - torsion) contraction.
    """
    gl, gu, split = connections(x, alpha)
    ginv, _ = inverse_metric(x, alpha)
    combo = split.christoffel + split.torsion
    checks = {}

    built = np.einsum("mns,st->mnt", combo, ginv)
    checks["upper_from_lower"] = float(np.max(np.abs(built - gu)))

    dual_combo = split.christoffel - split.torsion
    dual_built = np.einsum("ts,mns->mnt", ginv, dual_combo)
    gu_neg = gamma_upper_closed(x, -alpha)
    checks["dual_alpha_flip"] = float(np.max(np.abs(dual_built - gu_neg)))

    checks["lower_split"] = float(
        np.max(np.abs(split.christoffel + split.torsion - gl))
    )
    return ConsistencyReport(checks)


# ---------------------------------------------------------------------------
# curvature


def riemann_tensor(x, alpha) -> np.ndarray:
    """R^l_{kij} assembled from the connection tables, indexed [l, k, i, j].

    R^l_{kij} = -d_j G^l_{ik} - G^p_{ik} G^l_{jp} + d_i G^l_{jk} + G^p_{jk} G^l_{ip}
    with d_2 = 0; the x-derivative of the connection is exact.
    """
    gu = gamma_upper_closed(x, alpha)
    dgu = gamma_upper_dx(x, alpha)

    def G(s, m, n):
        return gu[m, n, s]

    def dG(j, s, m, n):
        return dgu[m, n, s] if j == 0 else 0.0

    R = np.zeros((2, 2, 2, 2), dtype=np.result_type(x, alpha, float))
    for el in range(2):
        for k in range(2):
            for i in range(2):
                for j in range(2):
                    val = -dG(j, el, i, k) + dG(i, el, j, k)
                    for p in range(2):
                        val += -G(p, i, k) * G(el, j, p) + G(p, j, k) * G(el, i, p)
                    R[el, k, i, j] = val
    return R


def ricci_assembled(x, alpha):
    """Ricci tensor R_kj = R^p_{kpj} and scalar R = g^{ji} R_ij, by assembly."""
    R4 = riemann_tensor(x, alpha)
    ricci = np.einsum("pkpj->kj", R4)
    ginv, _ = inverse_metric(x, alpha)
    scalar = np.einsum("ji,ij->", ginv, ricci)
    return ricci, scalar


def _curv_den(x, alpha):
    return alpha**2 + 2.0 * alpha**2 * np.cos(2.0 * x) - 1.0


def ricci_closed(x, alpha):
    """Closed-form Ricci tensor and scalar curvature."""
    den = _curv_den(x, alpha)
    if abs(den) < _SING_EPS:
        raise SingularityError(f"curvature singular at x={x}, alpha={alpha}")
    c2x = np.cos(2.0 * x)
    a2, a4 = alpha**2, alpha**4
    den2 = den * den
    ricci = np.array(
        [
            [
                (3.0 * a4 + 4.0 * a2 + 1.0) / den2,
                alpha * (1.0 - a4) * (c2x + 2.0) / den2,
            ],
            [
                alpha * (2.0 * (a2 + 1.0) ** 2 + (a4 - 1.0) * c2x) / den2,
                (1.0 - a4) * (3.0 * a2 + (3.0 * a2 - 1.0) * c2x + 1.0) / (2.0 * den2),
            ],
        ]
    )
    scalar = 2.0 * (a4 - 1.0) * (3.0 * a2 + 2.0 * a2 * c2x + 1.0) / (den2 * den)
    return ricci, scalar


def scalar_R_closed(x, alpha):
    return ricci_closed(x, alpha)[1]


def scalar_R_imaginary(x, hbar: float) -> float:
    """Scalar curvature for purely imaginary deformation parameter i*hbar.

    Equals the analytic continuation of the real-parameter closed form at
    alpha = i tan(hbar); written directly in terms of abar = tan(hbar) it is
    manifestly real.
    """
    if abs(math.cos(hbar)) < 1e-14:
        raise SingularityError("tan(hbar) pole at hbar = pi/2 + k pi")
    ab = math.tan(hbar)
    ab2, ab4 = ab * ab, ab**4
    c2x = np.cos(2.0 * x)
    den = ab2 + 2.0 * ab2 * c2x + 1.0
    if abs(den) < _SING_EPS:
        raise SingularityError(f"curvature singular at x={x}, hbar={hbar}")
    return 2.0 * (ab4 - 1.0) * (3.0 * ab2 + 2.0 * ab2 * c2x - 1.0) / den**3


def singularity_locus(alpha: float):
    """Real solutions of alpha^2 + 2 alpha^2 cos 2x - 1 = 0 in [0, pi)."""
    if alpha == 0.0:
        return []
    c = (1.0 - alpha * alpha) / (2.0 * alpha * alpha)
    if abs(c) > 1.0:
        return []
    x = 0.5 * math.acos(c)
    return [x, math.pi - x]


def curvature_sign_scan(alpha: float, grid: int, exclusion: float = 1e-6):
    """Sample the scalar curvature over [0, pi) and report sign changes.

    Returns (rows, sign_changes); rows are (x, R, sign) with singular points
    skipped by the exclusion radius.
    """
    if grid < 2:
        raise ValueError("grid must be >= 2")
    sing = singularity_locus(alpha)
    rows = []
    for i in range(grid):
        x = (i + 0.5) * math.pi / grid
        if any(abs(x - s) < exclusion for s in sing):
            continue
        R = scalar_R_closed(x, alpha)
        rows.append((x, float(np.real(R)), int(np.sign(np.real(R)))))
    changes = [
        (rows[i][0], rows[i + 1][0])
        for i in range(len(rows) - 1)
        if rows[i][2] * rows[i + 1][2] < 0
    ]
    return rows, changes


# ---------------------------------------------------------------------------
# bundled evaluation


@dataclass
class GeometryAt:
    """All geometric data of the deformed sphere at one point."""

    x: float
    alpha: float
    g: np.ndarray
    ginv: np.ndarray
    d_alpha: float
    gamma_lower: np.ndarray
    gamma_upper: np.ndarray
    ricci: np.ndarray
    scalar_R: float


def geometry_at(x: float, alpha: float) -> GeometryAt:
    g = metric_closed(x, alpha)
    ginv, da = inverse_metric(x, alpha)
    gl = gamma_lower_closed(x, alpha)
    gu = gamma_upper_closed(x, alpha)
    ricci, scalar = ricci_closed(x, alpha)
    return GeometryAt(x, alpha, g, ginv, da, gl, gu, ricci, scalar)
