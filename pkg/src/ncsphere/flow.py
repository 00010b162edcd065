"""Auto-parallel (geodesic-flow) equations for y-symmetric fields.

A y-symmetric field V = (Psi(x), Phi(x)) satisfies the deformed auto-parallel
equation iff the transport polynomial

    Sigma^sigma(x) = V^mu (d_mu V^sigma + V^rho Gamma^sigma_{mu rho})

obeys the non-local pair

    (Sigma^1 + a Sigma^2) cos z + i (Sigma^2 + a Sigma^1) sin z = 0   at z = x + i h,
    (Sigma^1 + a Sigma^2) cos z - i (Sigma^2 + a Sigma^1) sin z = 0   at z = x - i h,

plus the reported constraint Sigma^1(x) = 0.  This module evaluates those
residuals, carries the exact commutative solution, the first-order deviation
in alpha with its closed forms, a numerical cross-check of the deviation ODE,
and a field-line tracer.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import d_alpha, gamma_upper_closed
from .starprod import AnalyticFn1D, Deformation, DomainError


@dataclass(frozen=True)
class YSymField:
    """y-symmetric field with components Psi (latitude) and Phi (longitude)."""

    psi: AnalyticFn1D
    phi: AnalyticFn1D
    params: dict | None = None

    def scaled(self, lam) -> "YSymField":
        return YSymField(lam * self.psi, lam * self.phi, self.params)


@dataclass(frozen=True)
class SigmaPair:
    s1: complex
    s2: complex


def sigma_eval(f: YSymField, zpt, alpha) -> SigmaPair:
    """Transport polynomial (Sigma^1, Sigma^2) at a (possibly complex) point."""
    z = zpt
    psi, phi = f.psi(z), f.phi(z)
    dpsi, dphi = f.psi.d(z), f.phi.d(z)
    da = d_alpha(z, alpha)
    s2z, c2z = np.sin(2.0 * z), np.cos(2.0 * z)
    a = alpha
    s1 = psi * dpsi - (
        a * a * c2z * psi * psi
        - a * (a * a - 1.0) * psi * phi
        - 0.25 * (a**4 - 1.0 + (a * a - 1.0) ** 2 * c2z) * phi * phi
    ) * da * s2z
    s2 = psi * dphi + (
        a * psi * psi
        + (1.0 + a * a - 2.0 * a * a * c2z) * psi * phi
        + a * (1.0 - 0.5 * (a * a + 1.0) * c2z) * phi * phi
    ) * da * s2z
    return SigmaPair(s1, s2)


def sigma_eval_from_tables(f: YSymField, zpt, alpha) -> SigmaPair:
    """Independent route: contract the field against the connection tables."""
    gu = gamma_upper_closed(zpt, alpha)
    v = np.array([f.psi(zpt), f.phi(zpt)])
    dv = np.array([f.psi.d(zpt), f.phi.d(zpt)])
    out = []
    for sigma in range(2):
        val = v[0] * dv[sigma]
        for mu in range(2):
            for rho in range(2):
                val += v[mu] * v[rho] * gu[mu, rho, sigma]
        out.append(val)
    return SigmaPair(out[0], out[1])


def ysym_residual(f: YSymField, x, d: Deformation):
    """Residuals of the non-local pair at z = x + i h and z = x - i h."""
    h = d.require_real("the y-symmetric residual")
    a = d.alpha
    out = []
    for sign in (+1.0, -1.0):
        z = x + 1j * sign * h
        s = sigma_eval(f, z, a)
        out.append(
            (s.s1 + a * s.s2) * np.cos(z) + 1j * sign * (s.s2 + a * s.s1) * np.sin(z)
        )
    return out[0], out[1]


def compatibility(f: YSymField, x, d: Deformation):
    """Sigma^1(x+ih) Sigma^2(x-ih) + Sigma^2(x+ih) Sigma^1(x-ih)."""
    h = d.require_real("the compatibility combination")
    a = d.alpha
    sp = sigma_eval(f, x + 1j * h, a)
    sm = sigma_eval(f, x - 1j * h, a)
    return sp.s1 * sm.s2 + sp.s2 * sm.s1


def alphazero_residual(f: YSymField, x):
    """Residuals of the commutative system
    Psi Psi' - sin 2x Phi^2 / 2 = 0,  Psi Phi' + 2 Psi Phi cot x = 0."""
    psi, phi = f.psi(x), f.phi(x)
    r1 = psi * f.psi.d(x) - 0.5 * np.sin(2.0 * x) * phi * phi
    r2 = psi * f.phi.d(x) + 2.0 * psi * phi * np.cos(x) / np.sin(x)
    return r1, r2


# ---------------------------------------------------------------------------
# exact commutative solution


def validity_domain(a0: float, b0: float):
    """Latitude band sin^2 x >= a0/b0 on which the commutative flow is real."""
    if a0 < 0.0 or b0 <= 0.0 or a0 > b0:
        raise DomainError("need 0 <= a0 <= b0, b0 > 0 for a nonempty domain")
    xmin = math.asin(math.sqrt(a0 / b0))
    return xmin, math.pi - xmin


def zero_order_solution(a0: float, b0: float, signs=(+1, +1)) -> YSymField:
    """Exact commutative flow  Psi = +-sqrt(b0 - a0/sin^2 x),
    Phi = +-sqrt(a0)/sin^2 x, with exact derivatives attached."""
    xmin, xmax = validity_domain(a0, b0)
    spsi, sphi = signs
    ra = math.sqrt(a0)

    def psi(z):
        return spsi * np.sqrt(b0 - a0 / np.sin(z) ** 2 + 0.0j)

    def dpsi(z):
        s = np.sin(z)
        return a0 * np.cos(z) / (s**3 * psi(z))

    def d2psi(z):
        s, c = np.sin(z), np.cos(z)
        p = psi(z)
        return -a0 / (s * s * p) - a0 * c * (3.0 * c * p + s * dpsi(z)) / (s**4 * p * p)

    def phi(z):
        return sphi * ra / np.sin(z) ** 2

    def dphi(z):
        return -2.0 * sphi * ra * np.cos(z) / np.sin(z) ** 3

    def d2phi(z):
        s, c = np.sin(z), np.cos(z)
        return 2.0 * sphi * ra * (s * s + 3.0 * c * c) / s**4

    params = {"a0": a0, "b0": b0, "signs": signs, "domain": (xmin, xmax)}
    return YSymField(
        AnalyticFn1D(psi, dpsi, d2psi, label="psi0"),
        AnalyticFn1D(phi, dphi, d2phi, label="phi0"),
        params,
    )


# ---------------------------------------------------------------------------
# first order in alpha


def first_order_residual(f: YSymField, x, alpha):
    """Residuals of the order-alpha truncation of the y-symmetric system.

    r1 = Psi Psi' - sin 2x Phi^2 / 2
         - alpha { 2 (Psi Phi)' + tan x ((Psi Phi')' - 2 Phi Psi) },
    r2 = tan x Psi Phi' + 2 Psi Phi
         + alpha { 2 Psi^2 + 4 sin^2 x Phi^2 - sin 2x Phi Phi' + Psi'^2 + Psi Psi'' }.
    """
    psi, phi = f.psi(x), f.phi(x)
    dpsi, dphi = f.psi.d(x), f.phi.d(x)
    d2psi, d2phi = f.psi.d2(x), f.phi.d2(x)
    s2x = np.sin(2.0 * x)
    tx = np.tan(x)
    r1 = (
        psi * dpsi
        - 0.5 * s2x * phi * phi
        - alpha
        * (
            2.0 * (dpsi * phi + psi * dphi)
            + tx * ((dpsi * dphi + psi * d2phi) - 2.0 * phi * psi)
        )
    )
    r2 = (
        tx * psi * dphi
        + 2.0 * psi * phi
        + alpha
        * (
            2.0 * psi * psi
            + 4.0 * np.sin(x) ** 2 * phi * phi
            - s2x * phi * dphi
            + dpsi * dpsi
            + psi * d2psi
        )
    )
    return r1, r2


@dataclass(frozen=True)
class Deviation:
    """Closed-form first-order deviation (Omega, Delta) and the auxiliary
    profiles eta, beta of the underlying linear system."""

    omega: AnalyticFn1D
    delta: AnalyticFn1D
    eta: AnalyticFn1D
    beta: AnalyticFn1D
    params: dict


def _acoth(u):
    # principal inverse hyperbolic cotangent, analytic for u outside [-1, 1]
    return 0.5 * np.log((u + 1.0) / (u - 1.0))


def first_order_deviation(a0: float, b0: float, c0: float, d0: float) -> Deviation:
    """Closed-form deviation of the connected solution at first order.

    On the real validity band eta = 2(a0 - b0 sin^2 x) is negative, so the
    square roots and inverse trigonometric pieces are complex there; the
    functions below take the principal values on the real axis and are coded
    in a cut-free form (sqrt(eta) = i sqrt(-eta), arctan via acoth on |t|>1)
    so they stay analytic in a strip around the band interior.  The deviation
    is genuinely complex-valued: sqrt(eta) and psi0 are never simultaneously
    real for 0 < a0 < b0.
    """
    if not (0.0 < a0 < b0):
        raise DomainError("first-order deviation needs 0 < a0 < b0")
    zo = zero_order_solution(a0, b0)
    psi0, dpsi0 = zo.psi, zo.psi.d
    phi0, dphi0 = zo.phi, zo.phi.d
    ra, rb = math.sqrt(a0), math.sqrt(b0)

    def eta(z):
        return 2.0 * (a0 - b0 * np.sin(z) ** 2)

    def deta(z):
        return -2.0 * b0 * np.sin(2.0 * z)

    def beta(z):
        return eta(z) / b0

    def dbeta(z):
        return -2.0 * np.sin(2.0 * z)

    def sqrt_beta(z):
        # i sqrt(-beta): principal value on the band, analytic nearby
        return 1j * np.sqrt(-beta(z) + 0.0j)

    def sqrt_eta(z):
        return rb * sqrt_beta(z)

    def arctan_term(z):
        # atan(sqrt(2) sin z / sqrt(beta)) continued through the cut:
        # the argument is -i t with t = sqrt(2) sin z / sqrt(-beta) > 1,
        # and atan(-i t) = pi/2 - i acoth(t).
        t = math.sqrt(2.0) * np.sin(z) / np.sqrt(-beta(z) + 0.0j)
        return 0.5 * math.pi - 1j * _acoth(t)

    def darctan_term(z):
        return math.sqrt(2.0) * np.cos(z) / sqrt_beta(z)

    def warn_if_near_branch(z):
        if min(abs(eta(z)), abs(zo.psi(z))) < 1e-8:
            warnings.warn(
                f"deviation evaluated within 1e-8 of a branch point at x={z}",
                RuntimeWarning,
                stacklevel=3,
            )

    def omega(z):
        warn_if_near_branch(z)
        e = eta(z)
        bracket = (
            2.0 * c0 * psi0(z) / e
            + 1.0
            - (math.sqrt(2.0) * sqrt_beta(z) / np.sin(z))
            * (1.0 - a0 / e)
            * arctan_term(z)
        )
        return d0 * np.sin(z) / sqrt_eta(z) + ra * bracket

    def domega(z):
        e, de = eta(z), deta(z)
        sb, db = sqrt_beta(z), dbeta(z)
        s, c = np.sin(z), np.cos(z)
        T, dT = arctan_term(z), darctan_term(z)
        hom = d0 * (c / sqrt_eta(z) - s * de / (2.0 * sqrt_eta(z) ** 3))
        part = 2.0 * c0 * (dpsi0(z) / e - psi0(z) * de / (e * e))
        pre = math.sqrt(2.0) * sb / s
        dpre = math.sqrt(2.0) * (db / (2.0 * sb * s) - sb * c / (s * s))
        fac = 1.0 - a0 / e
        dfac = a0 * de / (e * e)
        return hom + ra * (part - (dpre * fac + pre * dfac) * T - pre * fac * dT)

    def coth_inv(z):
        # acoth continued onto (0, 1): atanh(u) + i pi/2 (principal value)
        u = psi0(z) / rb
        return np.arctanh(u + 0.0j) + 0.5j * math.pi

    def delta(z):
        num = c0 - (a0 / rb) * coth_inv(z) - (1.0 + np.sin(z) ** 2) * psi0(z)
        return num / np.sin(z) ** 2

    def ddelta(z):
        s, c = np.sin(z), np.cos(z)
        dnum = -(1.0 + 2.0 * s * s) * dpsi0(z) - 2.0 * s * c * psi0(z)
        return dnum / (s * s) - (2.0 * c / s) * delta(z)

    def d2omega(z):
        # differentiate the Omega equation of the linear system
        s2, c2 = np.sin(2.0 * z), np.cos(2.0 * z)
        return (
            2.0 * c2 * phi0(z) * delta(z)
            + s2 * (dphi0(z) * delta(z) + phi0(z) * ddelta(z))
            - 2.0 * dpsi0(z) * domega(z)
            - zo.psi.d2(z) * omega(z)
            - dpsi0(z) * dphi0(z)
            - psi0(z) * zo.phi.d2(z)
        ) / psi0(z)

    def d2delta(z):
        tz = np.tan(z)
        sec2 = 1.0 + tz * tz
        return -(
            dpsi0(z) * tz * ddelta(z)
            + psi0(z) * sec2 * ddelta(z)
            + 2.0 * dpsi0(z) * delta(z)
            + 2.0 * psi0(z) * ddelta(z)
            + 2.0 * phi0(z) * dphi0(z)
        ) / (psi0(z) * tz)

    params = {"a0": a0, "b0": b0, "c0": c0, "d0": d0}
    return Deviation(
        AnalyticFn1D(omega, domega, d2omega, label="Omega"),
        AnalyticFn1D(delta, ddelta, d2delta, label="Delta"),
        AnalyticFn1D(eta, deta, label="eta"),
        AnalyticFn1D(beta, dbeta, label="beta"),
        params,
    )


def deviation_system_residual(dev: Deviation, z):
    """Plug the closed forms into the linear first-order system.

    r1 = psi0 Omega' + psi0' Omega - sin 2x phi0 Delta + psi0 phi0',
    r2 = psi0 (tan x Delta' + 2 Delta) + phi0^2 + 2 b0.
    """
    a0, b0 = dev.params["a0"], dev.params["b0"]
    zo = zero_order_solution(a0, b0)
    psi0, phi0 = zo.psi(z), zo.phi(z)
    r1 = (
        psi0 * dev.omega.d(z)
        + zo.psi.d(z) * dev.omega(z)
        - np.sin(2.0 * z) * phi0 * dev.delta(z)
        + psi0 * zo.phi.d(z)
    )
    r2 = psi0 * (np.tan(z) * dev.delta.d(z) + 2.0 * dev.delta(z)) + phi0 * phi0 + 2.0 * b0
    return r1, r2


def connected_field(a0: float, b0: float, c0: float, d0: float, alpha: float) -> YSymField:
    """Zero-order flow plus alpha times its closed-form deviation."""
    zo = zero_order_solution(a0, b0)
    dev = first_order_deviation(a0, b0, c0, d0)
    psi = zo.psi + alpha * dev.omega
    phi = zo.phi + alpha * dev.delta
    params = dict(zo.params or {})
    params.update({"c0": c0, "d0": d0, "alpha": alpha})
    return YSymField(psi, phi, params)


# ---------------------------------------------------------------------------
# numerical integration


def _rk4_step(rhs, x, y, dt):
    k1 = rhs(x, y)
    k2 = rhs(x + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(x + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def deviation_ode_solve(a0, b0, c0, d0, x0, x1, dt=1e-4):
    """Integrate the linear deviation system by fixed-step RK4.

    Initial values come from the closed forms at x0; returns the sampled
    trajectory [(x, Omega, Delta), ...] so the endpoint can be compared
    against the closed forms.
    """
    dev = first_order_deviation(a0, b0, c0, d0)
    zo = zero_order_solution(a0, b0)

    def rhs(x, y):
        om, de = y
        psi0, phi0 = zo.psi(x), zo.phi(x)
        dom = (-zo.psi.d(x) * om + np.sin(2.0 * x) * phi0 * de - psi0 * zo.phi.d(x)) / psi0
        dde = -(2.0 * psi0 * de + phi0 * phi0 + 2.0 * b0) / (psi0 * np.tan(x))
        return np.array([dom, dde])

    n = max(1, int(math.ceil(abs(x1 - x0) / dt)))
    step = (x1 - x0) / n
    x = x0
    y = np.array([dev.omega(x0), dev.delta(x0)], dtype=complex)
    out = [(x, y[0], y[1])]
    for _ in range(n):
        y = _rk4_step(rhs, x, y, step)
        x += step
        out.append((x, y[0], y[1]))
    return out


@dataclass
class FlowTrace:
    """Sampled field line with its 3-space embedding."""

    samples: list  # (t, x, y)
    points: np.ndarray  # embedded (X, Y, Z) rows
    exited: bool
    exit_state: tuple | None

    def planarity(self) -> float:
        """Max distance of the embedded points to the best plane through the
        origin (zero for a great circle)."""
        pts = self.points
        if len(pts) < 3:
            return 0.0
        _, _, vt = np.linalg.svd(pts, full_matrices=False)
        normal = vt[-1]
        return float(np.max(np.abs(pts @ normal)))


def trace_flow(f: YSymField, start, t_end: float, dt: float = 1e-3) -> FlowTrace:
    """Integrate dx/dt = Psi(x), dy/dt = Phi(x) by RK4 from ``start``.

    Integration stops with a domain-exit report if Psi leaves the real axis
    (the field is only real inside its validity band).
    """
    x0, y0 = start
    params = f.params or {}
    dom = params.get("domain")

    def inside(x):
        if dom is None:
            return 0.0 < x < math.pi
        return dom[0] <= x <= dom[1]

    if not inside(x0):
        raise DomainError(f"start x={x0} outside the validity domain {dom}")

    def rhs(t, s):
        vx = f.psi(s[0])
        vy = f.phi(s[0])
        return np.array([vx.real, vy.real])

    def embed(x, y):
        return (math.sin(x) * math.cos(y), math.sin(x) * math.sin(y), math.cos(x))

    n = max(1, int(math.ceil(t_end / dt)))
    s = np.array([x0, y0], dtype=float)
    t = 0.0
    samples = [(t, s[0], s[1])]
    pts = [embed(s[0], s[1])]
    exited, exit_state = False, None
    for _ in range(n):
        val = f.psi(s[0])
        if abs(np.imag(val)) > 1e-12:
            exited, exit_state = True, (t, s[0], s[1])
            break
        s_new = _rk4_step(rhs, t, s, dt)
        if not inside(s_new[0]):
            exited, exit_state = True, (t + dt, s_new[0], s_new[1])
            break
        s = s_new
        t += dt
        samples.append((t, s[0], s[1]))
        pts.append(embed(s[0], s[1]))
    return FlowTrace(samples, np.array(pts), exited, exit_state)
