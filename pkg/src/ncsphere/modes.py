"""Fourier p-mode analysis of the general auto-parallel equation.

A field V^mu(x, y) truncated to N Fourier modes in y turns the auto-parallel
residual

    Sigma_hat^sigma(x, y) = V^mu * (d_mu V^sigma + V^rho * Gamma^sigma_{mu rho})

into a finite trigonometric series whose projections onto cos(p y), sin(p y)
give six coupled residual equations per mode p.  Two independent routes are
implemented:

* ``sigma_hat_direct`` / ``quadrature_residuals`` -- brute force.  The star
  product of a plane wave exp(i k y) T(x) against exp(i(e x + d y)) is exactly
  T(x + i h d) exp(h k e) exp(i k y) exp(i(e x + d y)), so Sigma_hat and its
  star products with the basis functions are evaluated pointwise (at complex
  arguments where needed) and the p-modes extracted by trapezoid quadrature.
* ``ModeAssembly`` -- the closed assembly through the shift building blocks
  B_1..B_6 and their mode sums K, L, M, ending in ``p_mode_residuals``.

The two routes share nothing beyond evaluation of the mode entries and the
connection at complex points, so their agreement validates every sign in the
assembly.

Conventions fixed here (each validated against the brute-force route):

* the connection argument inside the m-th mode functions is shifted by the
  full i m h, matching the shift notation of the one-variable products;
* in the K/L sums and the p = 1 source terms, z = x - i h and w = x + i h;
* the K-sums carry three index families per n (m = p - n, m = n - p and
  m = n + p, each with its own sign pattern), and the p + 1 slots of the
  system have double-sum companions K_3, K_4 next to L_3, L_4.  Both points
  follow from the exact wave expansion of Sigma_hat (see ``wave_block``) and
  are forced by the brute-force oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import gamma_upper_closed
from .starprod import AnalyticFn1D, Deformation, TrigPoly

# ---------------------------------------------------------------------------
# associated Legendre machinery (Condon-Shortley phase included)


def k_lm(l: int, m: int) -> float:
    """Spherical-harmonic normalization sqrt((2l+1)/(4 pi) (l-|m|)!/(l+|m|)!)."""
    m = abs(m)
    return math.sqrt(
        (2 * l + 1) / (4.0 * math.pi) * math.factorial(l - m) / math.factorial(l + m)
    )


def _legendre_power_coeffs(l: int) -> np.ndarray:
    c = np.zeros(l + 1)
    c[l] = 1.0
    return np.polynomial.legendre.leg2poly(c)


def assoc_legendre_fn(l: int, m: int, coeff: float = 1.0) -> AnalyticFn1D:
    """coeff * P_{l,m}(cos x) as an entire function of x (m >= 0).

    Written as (-1)^m sin^m x * Q(cos x) with Q the m-th derivative of the
    Legendre polynomial; this agrees with the half-integer-power convention
    on (0, pi) and stays entire in x.
    """
    if m < 0 or m > l:
        raise ValueError("need 0 <= m <= l")
    Q = np.polynomial.polynomial.polyder(_legendre_power_coeffs(l), m) if m else _legendre_power_coeffs(l)
    Qp = np.polynomial.polynomial.polyder(Q)
    sign = (-1.0) ** m * coeff

    def val(z):
        u = np.cos(z)
        return sign * np.sin(z) ** m * np.polynomial.polynomial.polyval(u, Q)

    def dval(z):
        u, s = np.cos(z), np.sin(z)
        q = np.polynomial.polynomial.polyval(u, Q)
        qp = np.polynomial.polynomial.polyval(u, Qp)
        if m == 0:
            return sign * (-s) * qp
        return sign * (m * s ** (m - 1) * u * q - s ** (m + 1) * qp)

    return AnalyticFn1D(val, dval, label=f"P({l},{m})")


def assoc_legendre(l: int, m: int, x):
    """P_{l,m}(cos x), negative orders folded by the standard ratio."""
    if m >= 0:
        return assoc_legendre_fn(l, m)(x)
    mm = -m
    ratio = (-1.0) ** mm * math.factorial(l - mm) / math.factorial(l + mm)
    return ratio * assoc_legendre_fn(l, mm)(x)


def spherical_harmonic(l: int, m: int, x, y):
    """Y_l^m(x, y) = k_{l,m} P_{l,m}(cos x) exp(i m y)."""
    return k_lm(l, m) * assoc_legendre(l, m, x) * np.exp(1j * m * y)


# ---------------------------------------------------------------------------
# truncated Fourier fields


def _zero_entry():
    return AnalyticFn1D.from_trigpoly(TrigPoly(), label="0")


@dataclass(frozen=True)
class ModeSet:
    """Truncated Fourier field {V_0^mu, V_C,n^mu, V_S,n^mu}_{n<=N}.

    ``v0`` is a pair (mu = 1, 2) of one-variable functions; ``vc``/``vs`` are
    lists of such pairs for n = 1..N.  ``specs`` optionally carries the
    serializable description of each entry.
    """

    N: int
    v0: tuple
    vc: tuple
    vs: tuple
    specs: dict | None = None

    def __post_init__(self):
        if len(self.vc) != self.N or len(self.vs) != self.N:
            raise ValueError("vc/vs must hold exactly N mode pairs")

    @classmethod
    def y_symmetric(cls, psi: AnalyticFn1D, phi: AnalyticFn1D) -> "ModeSet":
        return cls(0, (psi, phi), (), ())

    @classmethod
    def from_trigpolys(cls, v0, vc=(), vs=()) -> "ModeSet":
        """Build from x-only TrigPolys; attaches the serialization specs."""

        def conv(tp):
            return AnalyticFn1D.from_trigpoly(tp)

        def spec(tp):
            return {
                "kind": "trigpoly",
                "terms": [[a, c.real, c.imag] for (a, _), c in sorted(tp.terms.items())],
            }

        N = len(vc)
        specs = {
            "v0": [spec(t) for t in v0],
            "vc": [[spec(t) for t in pair] for pair in vc],
            "vs": [[spec(t) for t in pair] for pair in vs],
        }
        return cls(
            N,
            tuple(conv(t) for t in v0),
            tuple(tuple(conv(t) for t in pair) for pair in vc),
            tuple(tuple(conv(t) for t in pair) for pair in vs),
            specs,
        )

    def padded(self, extra: int = 1) -> "ModeSet":
        """Append zero modes; residuals must be unchanged bit for bit."""
        zc = tuple((_zero_entry(), _zero_entry()) for _ in range(extra))
        return ModeSet(self.N + extra, self.v0, self.vc + zc, self.vs + zc, None)

    def scaled(self, lam) -> "ModeSet":
        sc = lambda f: lam * f
        return ModeSet(
            self.N,
            tuple(sc(f) for f in self.v0),
            tuple(tuple(sc(f) for f in pair) for pair in self.vc),
            tuple(tuple(sc(f) for f in pair) for pair in self.vs),
            None,
        )

    # -- evaluation ---------------------------------------------------------

    def value(self, mu: int, x, y):
        """Reconstruct V^mu(x, y) (mu is 0-based here and below)."""
        out = self.v0[mu](x) + 0.0j
        for n in range(1, self.N + 1):
            out += self.vc[n - 1][mu](x) * np.cos(n * y) + self.vs[n - 1][mu](x) * np.sin(n * y)
        return out

    def wave_coeff(self, mu: int, k: int, x):
        """Coefficient of exp(i k y) in V^mu at x."""
        if k == 0:
            return self.v0[mu](x) + 0.0j
        n = abs(k)
        if n > self.N:
            return 0.0j
        vc, vs = self.vc[n - 1][mu](x), self.vs[n - 1][mu](x)
        return 0.5 * (vc - 1j * vs) if k > 0 else 0.5 * (vc + 1j * vs)

    def wave_coeff_dx(self, mu: int, k: int, x):
        if k == 0:
            return self.v0[mu].d(x) + 0.0j
        n = abs(k)
        if n > self.N:
            return 0.0j
        vc, vs = self.vc[n - 1][mu].d(x), self.vs[n - 1][mu].d(x)
        return 0.5 * (vc - 1j * vs) if k > 0 else 0.5 * (vc + 1j * vs)


# -- JSON wire format --------------------------------------------------------


def _entry_from_spec(spec: dict) -> AnalyticFn1D:
    kind = spec.get("kind")
    if kind == "trigpoly":
        tp = TrigPoly({(int(a), 0): complex(re, im) for a, re, im in spec["terms"]})
        return AnalyticFn1D.from_trigpoly(tp)
    if kind == "legendre":
        l, m = int(spec["l"]), int(spec["m"])
        return assoc_legendre_fn(l, abs(m), coeff=float(spec["coeff"]) * k_lm(l, m))
    raise ValueError(f"unknown mode entry kind {kind!r}")


def modeset_from_json(text: str) -> ModeSet:
    data = json.loads(text)
    N = int(data["N"])
    v0 = tuple(_entry_from_spec(s) for s in data["v0"])
    vc = tuple(tuple(_entry_from_spec(s) for s in pair) for pair in data["vc"])
    vs = tuple(tuple(_entry_from_spec(s) for s in pair) for pair in data["vs"])
    specs = {"v0": data["v0"], "vc": data["vc"], "vs": data["vs"]}
    return ModeSet(N, v0, vc, vs, specs)


def modeset_to_json(ms: ModeSet) -> str:
    if ms.specs is None:
        raise ValueError("this ModeSet carries no serializable entry specs")
    return json.dumps({"N": ms.N, **ms.specs}, indent=1)


# -- spherical-harmonic input -------------------------------------------------


def harmonics_to_modes(hc: dict, N: int) -> ModeSet:
    """Convert {(mu, l, m): (a, b)} spherical-harmonic data to Fourier modes.

    Each entry contributes k_{l,m} P_{l,m}(cos x) (a cos my - b sin my);
    negative m folds onto the |m| mode through the standard ratio of
    associated Legendre functions.  Entries beyond the truncation N are
    rejected rather than silently dropped.
    """
    acc = {"v0": [[], []], "vc": [[[], []] for _ in range(N)], "vs": [[[], []] for _ in range(N)]}
    for (mu, l, m), (a, b) in hc.items():
        if not 1 <= mu <= 2:
            raise ValueError("mu must be 1 or 2")
        if abs(m) > l:
            raise ValueError("need |m| <= l")
        if abs(m) > N:
            raise ValueError(f"harmonic order {m} exceeds the truncation N={N}")
        mm = abs(m)
        w = k_lm(l, mm)
        if m < 0:
            w *= (-1.0) ** mm * math.factorial(l - mm) / math.factorial(l + mm)
        if m == 0:
            acc["v0"][mu - 1].append((w * a, l, 0))
        else:
            sgn = 1.0 if m > 0 else -1.0
            acc["vc"][mm - 1][mu - 1].append((w * a, l, mm))
            acc["vs"][mm - 1][mu - 1].append((-sgn * w * b, l, mm))

    def build(parts):
        if not parts:
            return _zero_entry()
        fn = assoc_legendre_fn(parts[0][1], parts[0][2], coeff=parts[0][0])
        for coeff, l, m in parts[1:]:
            fn = fn + assoc_legendre_fn(l, m, coeff=coeff)
        return fn

    v0 = tuple(build(acc["v0"][mu]) for mu in range(2))
    vc = tuple(tuple(build(acc["vc"][n][mu]) for mu in range(2)) for n in range(N))
    vs = tuple(tuple(build(acc["vs"][n][mu]) for mu in range(2)) for n in range(N))
    return ModeSet(N, v0, vc, vs)


def harmonic_field_value(hc: dict, mu: int, x, y):
    """Direct reconstruction sum_{l,m} (C Y + conj(C) conj(Y)); oracle for
    ``harmonics_to_modes``."""
    out = 0.0j
    for (emu, l, m), (a, b) in hc.items():
        if emu != mu:
            continue
        C = 0.5 * (a + 1j * b)
        Y = spherical_harmonic(l, m, x, y)
        out += C * Y + np.conj(C) * np.conj(Y)
    return out


# ---------------------------------------------------------------------------
# mode functions of the covariant-derivative factor


def _gamma_default(d: Deformation):
    alpha = d.alpha

    def gamma(z):
        return gamma_upper_closed(z, alpha)

    return gamma


def mode_covariant_wave(ms: ModeSet, d: Deformation, k: int, x, gamma=None):
    """Coefficient of exp(i k y) in d_mu V^sigma + V^rho * Gamma^sigma_{mu rho},
    as a (sigma, mu) array; the star against the x-only connection shifts its
    argument to x - i k h."""
    gamma = gamma or _gamma_default(d)
    g = gamma(x - 1j * k * d.h)
    out = np.zeros((2, 2), dtype=complex)
    v = [ms.wave_coeff(rho, k, x) for rho in range(2)]
    dv = [ms.wave_coeff_dx(sig, k, x) for sig in range(2)]
    for sig in range(2):
        for mu in range(2):
            val = 0.0j
            if mu == 0:
                val += dv[sig]
            else:
                val += 1j * k * ms.wave_coeff(sig, k, x)
            for rho in range(2):
                val += v[rho] * g[mu, rho, sig]
            out[sig, mu] = val
    return out


@dataclass(frozen=True)
class ModeFunctions:
    """Cos/sin mode functions of the covariant-derivative factor at one x."""

    c0: np.ndarray  # (sigma, mu)
    cm: np.ndarray  # (N, sigma, mu)
    sm: np.ndarray  # (N, sigma, mu)


def mode_functions(ms: ModeSet, d: Deformation, x, gamma=None) -> ModeFunctions:
    """C_0, C_m, S_m with the connection averaged over x +- i m h shifts."""
    gamma = gamma or _gamma_default(d)
    c0 = _c0_functions(ms, d, x, gamma)
    cm = np.zeros((ms.N, 2, 2), dtype=complex)
    sm = np.zeros((ms.N, 2, 2), dtype=complex)
    for m in range(1, ms.N + 1):
        cm[m - 1], sm[m - 1] = _cs_mode_functions(ms, d, m, x, gamma)
    return ModeFunctions(c0, cm, sm)


def _c0_functions(ms: ModeSet, d: Deformation, z, gamma):
    g = gamma(z)
    out = np.zeros((2, 2), dtype=complex)
    v = [ms.v0[rho](z) for rho in range(2)]
    for sig in range(2):
        for mu in range(2):
            val = ms.v0[sig].d(z) + 0.0j if mu == 0 else 0.0j
            for rho in range(2):
                val += v[rho] * g[mu, rho, sig]
            out[sig, mu] = val
    return out


def _cs_mode_functions(ms: ModeSet, d: Deformation, m: int, z, gamma):
    gp = gamma(z + 1j * m * d.h)
    gm = gamma(z - 1j * m * d.h)
    C = np.zeros((2, 2), dtype=complex)
    S = np.zeros((2, 2), dtype=complex)
    vc = [ms.vc[m - 1][rho](z) for rho in range(2)]
    vs = [ms.vs[m - 1][rho](z) for rho in range(2)]
    for sig in range(2):
        dc = ms.vc[m - 1][sig].d(z)
        ds = ms.vs[m - 1][sig].d(z)
        for mu in range(2):
            cval = dc + 0.0j if mu == 0 else m * ms.vs[m - 1][sig](z) + 0.0j
            sval = ds + 0.0j if mu == 0 else -m * ms.vc[m - 1][sig](z) + 0.0j
            for rho in range(2):
                cval += 0.5 * (
                    (vc[rho] + 1j * vs[rho]) * gp[mu, rho, sig]
                    + (vc[rho] - 1j * vs[rho]) * gm[mu, rho, sig]
                )
                sval += 0.5 * (
                    (vs[rho] - 1j * vc[rho]) * gp[mu, rho, sig]
                    + (vs[rho] + 1j * vc[rho]) * gm[mu, rho, sig]
                )
            C[sig, mu] = cval
            S[sig, mu] = sval
    return C, S


# ---------------------------------------------------------------------------
# brute-force route


def sigma_hat_coeffs(ms: ModeSet, d: Deformation, x, gamma=None):
    """Wave coefficients T_K^sigma(x) of Sigma_hat = sum_K T_K exp(i K y).

    Expands both star factors into exp(i k y) waves; a pair (k1, k2)
    contributes  v^mu_{k1}(x + i h k2) D^sigma_{mu,k2}(x - i h k1)  at
    K = k1 + k2.  Exact for truncated fields; x may be complex.
    """
    gamma = gamma or _gamma_default(d)
    h = d.h
    N = ms.N
    coeffs = {}
    for k1 in range(-N, N + 1):
        zd = x - 1j * h * k1
        for k2 in range(-N, N + 1):
            D = mode_covariant_wave(ms, d, k2, zd, gamma)
            zv = x + 1j * h * k2
            K = k1 + k2
            acc = coeffs.setdefault(K, np.zeros(2, dtype=complex))
            for sig in range(2):
                val = 0.0j
                for mu in range(2):
                    val += ms.wave_coeff(mu, k1, zv) * D[sig, mu]
                acc[sig] += val
    return coeffs


def sigma_hat_direct(ms: ModeSet, d: Deformation, x, y, gamma=None):
    """Sigma_hat^sigma(x, y) by the brute-force wave expansion; both
    arguments may be complex."""
    coeffs = sigma_hat_coeffs(ms, d, x, gamma)
    out = np.zeros(2, dtype=complex)
    for K, pair in coeffs.items():
        out += pair * np.exp(1j * K * y)
    return out


_FJ_WAVES = {
    # f_j = sum coef * exp(i(eps x + delta y))
    1: [(+1, +1, -0.25), (+1, -1, +0.25), (-1, +1, +0.25), (-1, -1, -0.25)],
    2: [(+1, +1, -0.25j), (+1, -1, -0.25j), (-1, +1, +0.25j), (-1, -1, +0.25j)],
    3: [(+1, +1, -0.25j), (-1, +1, -0.25j), (+1, -1, +0.25j), (-1, -1, +0.25j)],
    4: [(+1, +1, +0.25), (+1, -1, +0.25), (-1, +1, +0.25), (-1, -1, +0.25)],
}


def sigma_hat_star_fj(ms: ModeSet, d: Deformation, x, ys, j: int, gamma=None):
    """(Sigma_hat * f_j)(x, y) on a grid of y values, per sigma.

    Uses the exact plane-wave rule: the right factor exp(i(e x + d y)) shifts
    Sigma_hat to (x + i h d, y - i h e).
    """
    h = d.h
    ys = np.asarray(ys, dtype=float)
    out = np.zeros((2, len(ys)), dtype=complex)
    tables = {dd: sigma_hat_coeffs(ms, d, x + 1j * h * dd, gamma) for dd in (+1, -1)}
    for eps, delta, coef in _FJ_WAVES[j]:
        wave = coef * np.exp(1j * (eps * x + delta * ys))
        for K, pair in tables[delta].items():
            phase = np.exp(h * K * eps) * np.exp(1j * K * ys)
            for sig in range(2):
                out[sig] += pair[sig] * phase * wave
    return out


def sigma_hat_star_sinx(ms: ModeSet, d: Deformation, x, ys, gamma=None):
    """(Sigma_hat * sin x)(x, y) on a grid of y values, per sigma."""
    h = d.h
    ys = np.asarray(ys, dtype=float)
    out = np.zeros((2, len(ys)), dtype=complex)
    table = sigma_hat_coeffs(ms, d, x, gamma)
    for eps in (+1, -1):
        wave = (eps / 2j) * np.exp(1j * eps * x)
        for K, pair in table.items():
            phase = np.exp(h * K * eps) * np.exp(1j * K * ys)
            for sig in range(2):
                out[sig] += pair[sig] * phase * wave
    return out


def quadrature_residuals(ms: ModeSet, d: Deformation, x, p: int, ny: int = 512, gamma=None):
    """The six p-mode residuals computed by brute force.

    Projects the three star-product equations (against f_4/f_1, f_3/f_2 and
    sin x) onto cos(p y) and sin(p y) with uniform trapezoid quadrature, then
    maps the integrals onto the assembled-system normalization:

        E1 = (4/pi)(I1c + I2s),  E2 = -(4/pi)(I2c - I1s),
        E3 = (4/pi)(I1c - I2s),  E4 = (4/pi)(I2c + I1s),
        E5 = (2/pi) I3c,         E6 = (2/pi) I3s,

    with I1 = S^1*f4 - S^2*f1, I2 = S^1*f3 + S^2*f2, I3 = S^1*sin x.
    """
    ys = np.arange(ny) * (2.0 * math.pi / ny)
    cp, sp = np.cos(p * ys), np.sin(p * ys)
    w = 2.0 * math.pi / ny

    s_f = {j: sigma_hat_star_fj(ms, d, x, ys, j, gamma) for j in range(1, 5)}
    s_sin = sigma_hat_star_sinx(ms, d, x, ys, gamma)

    I1 = s_f[4][0] - s_f[1][1]
    I2 = s_f[3][0] + s_f[2][1]
    I3 = s_sin[0]

    def proj(arr, weight):
        return w * np.sum(arr * weight)

    I1c, I1s = proj(I1, cp), proj(I1, sp)
    I2c, I2s = proj(I2, cp), proj(I2, sp)
    I3c, I3s = proj(I3, cp), proj(I3, sp)

    pi = math.pi
    return np.array(
        [
            (4.0 / pi) * (I1c + I2s),
            -(4.0 / pi) * (I2c - I1s),
            (4.0 / pi) * (I1c - I2s),
            (4.0 / pi) * (I2c + I1s),
            (2.0 / pi) * I3c,
            (2.0 / pi) * I3s,
        ]
    )


# ---------------------------------------------------------------------------
# assembled route


class ModeAssembly:
    """Closed assembly of the p-mode system for one ModeSet and deformation.

    Caches the shift building blocks B_{j,m}^{n,sigma} at every complex
    argument they are requested at.
    """

    def __init__(self, ms: ModeSet, d: Deformation, gamma=None):
        self.ms = ms
        self.d = d
        self.gamma = gamma or _gamma_default(d)
        self._bcache = {}
        self._cscache = {}
        self._c0cache = {}

    # -- building blocks -----------------------------------------------------

    def _c0(self, z):
        key = complex(z)
        if key not in self._c0cache:
            self._c0cache[key] = _c0_functions(self.ms, self.d, z, self.gamma)
        return self._c0cache[key]

    def _cs(self, m: int, z):
        key = (m, complex(z))
        if key not in self._cscache:
            self._cscache[key] = _cs_mode_functions(self.ms, self.d, m, z, self.gamma)
        return self._cscache[key]

    def sigma0(self, z):
        """Transport polynomial of the zero mode, per sigma."""
        c0 = self._c0(z)
        v = [self.ms.v0[mu](z) for mu in range(2)]
        return np.array([sum(v[mu] * c0[sig, mu] for mu in range(2)) for sig in range(2)])

    def b(self, n: int, m: int, z) -> np.ndarray:
        """B_{1..6,m}^{n,sigma}(z) as a (6, 2) array; zero outside 1 <= m <= N.

        B_1, B_2 pair the zero mode with mode m (n is ignored there);
        B_3..B_6 pair mode n against mode m through the reduced products,
        with the n-side factors shifted by +- i m h and the m-side factors
        by +- i n h.
        """
        ms, h = self.ms, self.d.h
        if m < 1 or m > ms.N:
            return np.zeros((6, 2), dtype=complex)
        key = (n, m, complex(z))
        hit = self._bcache.get(key)
        if hit is not None:
            return hit
        out = np.zeros((6, 2), dtype=complex)

        zp, zm = z + 1j * m * h, z - 1j * m * h
        v0p = [ms.v0[mu](zp) for mu in range(2)]
        v0m = [ms.v0[mu](zm) for mu in range(2)]
        c0p, c0m = self._c0(zp), self._c0(zm)
        CM, SM = self._cs(m, z)
        vc = [ms.vc[m - 1][mu](z) for mu in range(2)]
        vs = [ms.vs[m - 1][mu](z) for mu in range(2)]
        for sig in range(2):
            b1 = b2 = 0.0j
            for mu in range(2):
                b1 += (
                    (v0m[mu] + v0p[mu]) * CM[sig, mu]
                    - 1j * (v0p[mu] - v0m[mu]) * SM[sig, mu]
                    + (c0p[sig, mu] + c0m[sig, mu]) * vc[mu]
                    - 1j * (c0m[sig, mu] - c0p[sig, mu]) * vs[mu]
                )
                b2 += (
                    1j * (v0m[mu] - v0p[mu]) * CM[sig, mu]
                    - (v0p[mu] + v0m[mu]) * SM[sig, mu]
                    + 1j * (c0p[sig, mu] - c0m[sig, mu]) * vc[mu]
                    - (c0m[sig, mu] + c0p[sig, mu]) * vs[mu]
                )
            out[0, sig] = b1
            out[1, sig] = b2

        if 1 <= n <= ms.N:
            wp, wm = z + 1j * n * h, z - 1j * n * h
            CMp, SMp = self._cs(m, wp)
            CMm, SMm = self._cs(m, wm)
            for sig in range(2):
                b3 = b4 = b5 = b6 = 0.0j
                for mu in range(2):
                    fcp, fcm = ms.vc[n - 1][mu](zp), ms.vc[n - 1][mu](zm)
                    fsp, fsm = ms.vs[n - 1][mu](zp), ms.vs[n - 1][mu](zm)
                    CF_C, SF_C = 0.5 * (fcp + fcm), (fcp - fcm) / 2j
                    CF_S, SF_S = 0.5 * (fsp + fsm), (fsp - fsm) / 2j
                    CG_C = 0.5 * (CMp[sig, mu] + CMm[sig, mu])
                    SG_C = (CMp[sig, mu] - CMm[sig, mu]) / 2j
                    CG_S = 0.5 * (SMp[sig, mu] + SMm[sig, mu])
                    SG_S = (SMp[sig, mu] - SMm[sig, mu]) / 2j

                    def A(CF, SF, CG, SG):
                        return CF * CG, -SF * CG, CF * SG, -SF * SG

                    acc1, acc2, acc3, acc4 = A(CF_C, SF_C, CG_C, SG_C)
                    asc1, asc2, asc3, asc4 = A(CF_S, SF_S, CG_C, SG_C)
                    acs1, acs2, acs3, acs4 = A(CF_C, SF_C, CG_S, SG_S)
                    ass1, ass2, ass3, ass4 = A(CF_S, SF_S, CG_S, SG_S)

                    b3 += acc1 - acs2 - asc3 + ass4
                    b4 += acc2 + acs1 - asc4 - ass3
                    b5 += acc3 - acs4 + asc1 - ass2
                    b6 += acc4 + acs3 + asc2 + ass1
                out[2, sig] = b3
                out[3, sig] = b4
                out[4, sig] = b5
                out[5, sig] = b6

        self._bcache[key] = out
        return out

    # -- reconstruction of Sigma_hat from the blocks ---------------------------

    def sigma_hat_reassembled(self, x, y):
        """Sigma_hat from Sigma_0 plus the B-expansion (oracle target)."""
        N = self.ms.N
        out = self.sigma0(x).copy()
        for m in range(1, N + 1):
            bb = self.b(0, m, x)
            out += 0.5 * (np.cos(m * y) * bb[0] - np.sin(m * y) * bb[1])
        for n in range(1, N + 1):
            for m in range(1, N + 1):
                bb = self.b(n, m, x)
                cn, sn = np.cos(n * y), np.sin(n * y)
                cm, sm = np.cos(m * y), np.sin(m * y)
                out += cn * cm * bb[2] + cn * sm * bb[3] + sn * cm * bb[4] + sn * sm * bb[5]
        return out

    # -- exact wave coefficients from the blocks ---------------------------------

    def wave_block(self, K: int, z) -> np.ndarray:
        """Wave coefficient of exp(i K y) in Sigma_hat at z, from the B blocks.

        The double sum contributes through the four fixed combinations

            P    = B3 - i B4 - i B5 - B6   (wave n + m),
            Q    = B3 + i B4 - i B5 + B6   (wave n - m),
            R    = B3 - i B4 + i B5 + B6   (wave m - n),
            Pbar = B3 + i B4 + i B5 - B6   (wave -n - m),

        each with weight 1/4; the single sum contributes (B1 +- i B2)/4 at
        +-m, and the zero mode carries Sigma_0.  Must agree with the
        brute-force ``sigma_hat_coeffs`` for every K.
        """
        N = self.ms.N
        q = abs(K)
        out = np.zeros(2, dtype=complex)

        def P(b):
            return b[2] - 1j * b[3] - 1j * b[4] - b[5]

        def Q(b):
            return b[2] + 1j * b[3] - 1j * b[4] + b[5]

        def R(b):
            return b[2] - 1j * b[3] + 1j * b[4] + b[5]

        def Pbar(b):
            return b[2] + 1j * b[3] + 1j * b[4] - b[5]

        if K == 0:
            out += self.sigma0(z)
            for n in range(1, N + 1):
                bnn = self.b(n, n, z)
                out += 0.25 * (Q(bnn) + R(bnn))
            return out

        b1 = self.b(0, q, z)
        if K > 0:
            out += 0.25 * (b1[0] + 1j * b1[1])
            for n in range(1, N + 1):
                if n < q:
                    out += 0.25 * P(self.b(n, q - n, z))
                elif n > q:
                    out += 0.25 * Q(self.b(n, n - q, z))
                out += 0.25 * R(self.b(n, n + q, z))
        else:
            out += 0.25 * (b1[0] - 1j * b1[1])
            for n in range(1, N + 1):
                if n < q:
                    out += 0.25 * Pbar(self.b(n, q - n, z))
                elif n > q:
                    out += 0.25 * R(self.b(n, n - q, z))
                out += 0.25 * Q(self.b(n, n + q, z))
        return out

    def _wave_ds(self, K: int, z) -> np.ndarray:
        """Double-sum part of ``wave_block`` only (used by the K sums)."""
        full = self.wave_block(K, z)
        q = abs(K)
        b1 = self.b(0, q, z) if q else None
        if K == 0:
            return full - self.sigma0(z)
        if K > 0:
            return full - 0.25 * (b1[0] + 1j * b1[1])
        return full - 0.25 * (b1[0] - 1j * b1[1])

    # -- mode sums -------------------------------------------------------------

    def m_sums(self, x, p: int):
        """M_1, M_2 at mode p (evaluated at the unshifted point)."""
        N = self.ms.N
        M1 = np.zeros(2, dtype=complex)
        M2 = np.zeros(2, dtype=complex)
        for n in range(1, N + 1):
            b_pm = self.b(n, p - n, x)
            b_pp = self.b(n, p + n, x)
            b_mp = self.b(n, n - p, x)
            M1 += b_pm[2] - b_pm[5] + b_pp[2] + b_pp[5] + b_mp[2] + b_mp[5]
            M2 += b_pp[3] - b_pp[4] + b_pm[3] + b_pm[4] - b_mp[3] + b_mp[4]
        return M1, M2

    def k_sums(self, x, p: int):
        """Double-sum companions K_1..K_4 at mode index p.

        Defined so that (K_1 - L_1, K_2 + L_2) and (K_3 + L_3, K_4 + L_4)
        are the full p - 1 and p + 1 slot combinations of the system:

            K_1 = -4 [C^ds_p(w) + C^ds_{-p}(z)],
            K_2 = -4i [C^ds_p(w) - C^ds_{-p}(z)],
            K_3 = +4 [C^ds_p(z) - C^ds_{-p}(w)],
            K_4 = +4 [C^ds_p(z) + C^ds_{-p}(w)],

        with C^ds the double-sum wave coefficients and z/w the lower/upper
        slices.  For n > p the K_1/K_2 sums reduce to the familiar pair of
        bracketed lines at indices n - p and n + p; the n < p family and the
        K_3/K_4 companions complete them.
        """
        h = self.d.h
        z, w = x - 1j * h, x + 1j * h
        cw_p, cz_m = self._wave_ds(p, w), self._wave_ds(-p, z)
        cz_p, cw_m = self._wave_ds(p, z), self._wave_ds(-p, w)
        K1 = -4.0 * (cw_p + cz_m)
        K2 = -4j * (cw_p - cz_m)
        K3 = 4.0 * (cz_p - cw_m)
        K4 = 4.0 * (cz_p + cw_m)
        return K1, K2, K3, K4

    def l_sums(self, x, p: int):
        """L_1..L_4 at mode p, built from B_1, B_2 on the shifted slices."""
        h = self.d.h
        z, w = x - 1j * h, x + 1j * h
        bz, bw = self.b(0, p, z), self.b(0, p, w)
        L1 = bw[0] + 1j * bw[1] + bz[0] - 1j * bz[1]
        L2 = -1j * bw[0] + bw[1] + 1j * bz[0] + bz[1]
        L3 = -bw[0] + 1j * bw[1] + bz[0] + 1j * bz[1]
        L4 = bw[0] - 1j * bw[1] + bz[0] + 1j * bz[1]
        return L1, L2, L3, L4

    # -- the p-mode system -------------------------------------------------------

    def slot_combinations(self, x, p: int):
        """The four slot quantities carrying the whole p-mode system.

        U-/V- collect the p - 1 waves (upper slice forward, lower slice
        backward), U+/V+ the p + 1 waves with the slices exchanged; the
        mode-1 source terms of the zero mode enter automatically through the
        K = 0 wave coefficient.
        """
        h = self.d.h
        z, w = x - 1j * h, x + 1j * h
        q, r = p - 1, p + 1
        cq_w, cqm_z = self.wave_block(q, w), self.wave_block(-q, z)
        cr_z, crm_w = self.wave_block(r, z), self.wave_block(-r, w)
        Um = 4.0 * (cq_w + cqm_z)
        Vm = 4j * (cq_w - cqm_z)
        Up = 4.0 * (cr_z + crm_w)
        Vp = 4.0 * (cr_z - crm_w)
        return Um, Vm, Up, Vp

    def residuals(self, x, p: int) -> np.ndarray:
        """The six assembled residual equations at mode p."""
        if p < 1:
            raise ValueError("mode index p must be >= 1")
        h = self.d.require_real("the p-mode system")
        cx, sx = np.cos(x), np.sin(x)
        chm, shm = math.cosh((p - 1) * h), math.sinh((p - 1) * h)
        chp, shp = math.cosh((p + 1) * h), math.sinh((p + 1) * h)

        Um, Vm, Up, Vp = self.slot_combinations(x, p)
        bb = self.b(0, p, x)
        M1, M2 = self.m_sums(x, p)

        e1 = cx * (chm * Um[0] + shm * Um[1]) + sx * (shm * Vm[0] + chm * Vm[1])
        e2 = cx * (chm * Vm[0] + shm * Vm[1]) - sx * (shm * Um[0] + chm * Um[1])
        e3 = cx * (chp * Up[0] - shp * Up[1]) + 1j * sx * (shp * Vp[0] - chp * Vp[1])
        e4 = 1j * cx * (chp * Vp[0] - shp * Vp[1]) + sx * (chp * Up[1] - shp * Up[0])
        e5 = math.cosh(p * h) * sx * (bb[0, 0] + M1[0]) + math.sinh(p * h) * cx * (
            bb[1, 0] - M2[0]
        )
        e6 = math.sinh(p * h) * cx * (bb[0, 0] + M1[0]) - math.cosh(p * h) * sx * (
            bb[1, 0] - M2[0]
        )
        return np.array([e1, e2, e3, e4, e5, e6])

    def constraints(self, x, p: int):
        """Mode-coupling constraints (M1 + B1, M2 - B2) of the x component."""
        bb = self.b(0, p, x)
        M1, M2 = self.m_sums(x, p)
        return M1[0] + bb[0, 0], M2[0] - bb[1, 0]


@dataclass(frozen=True)
class BKLMBundle:
    """All mode sums entering the assembled residuals at one (x, p)."""

    B1: np.ndarray
    B2: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    K3: np.ndarray
    K4: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    L3: np.ndarray
    L4: np.ndarray
    M1: np.ndarray
    M2: np.ndarray


# -- one-shot functional wrappers ---------------------------------------------


def b_functions(ms: ModeSet, d: Deformation, x, n: int, m: int, gamma=None) -> np.ndarray:
    return ModeAssembly(ms, d, gamma).b(n, m, x)


def klm_functions(ms: ModeSet, d: Deformation, x, p: int, gamma=None) -> BKLMBundle:
    if p < 1:
        raise ValueError("mode index p must be >= 1")
    asm = ModeAssembly(ms, d, gamma)
    K1, K2, K3, K4 = asm.k_sums(x, p)
    L1, L2, L3, L4 = asm.l_sums(x, p)
    M1, M2 = asm.m_sums(x, p)
    bb = asm.b(0, p, x)
    return BKLMBundle(bb[0], bb[1], K1, K2, K3, K4, L1, L2, L3, L4, M1, M2)


def p_mode_residuals(ms: ModeSet, d: Deformation, x, p: int, gamma=None) -> np.ndarray:
    return ModeAssembly(ms, d, gamma).residuals(x, p)


def mode_constraints(ms: ModeSet, d: Deformation, x, p: int, gamma=None):
    return ModeAssembly(ms, d, gamma).constraints(x, p)
