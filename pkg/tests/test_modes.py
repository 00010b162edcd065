import json
import math

import numpy as np
import pytest

from ncsphere import AnalyticFn1D, Deformation, TrigPoly, star_lattice
from ncsphere import flow as fl
from ncsphere import modes as mo
from ncsphere.geometry import gamma_upper_closed

from conftest import SAMPLE_V0, SAMPLE_VC, SAMPLE_VS

D02 = Deformation.real(math.atanh(0.2))


# ---------------------------------------------------------------------------
# spherical harmonics and the Fourier form


def test_y00_gives_constant_zero_mode():
    ms = mo.harmonics_to_modes({(1, 0, 0): (math.sqrt(4 * math.pi), 0.0)}, 0)
    assert abs(ms.v0[0](0.77) - 1.0) < 1e-14
    assert abs(ms.v0[1](0.5)) == 0.0


def test_p11_convention():
    # k_{1,1} P_{1,1}(cos x) = -sqrt(3/(8 pi)) sin x with the standard phase
    for x in (0.3, 0.6, 2.0):
        got = mo.k_lm(1, 1) * mo.assoc_legendre(1, 1, x)
        assert abs(got + math.sqrt(3.0 / (8.0 * math.pi)) * math.sin(x)) < 1e-14


def test_harmonics_reconstruction_oracle(rng):
    hc = {
        (1, 0, 0): (1.2, 0.0),
        (1, 1, 1): (0.5, -0.3),
        (2, 2, 1): (0.2, 0.4),
        (2, 2, -2): (-0.3, 0.1),
        (1, 3, 2): (0.15, 0.25),
        (2, 1, 0): (0.4, 0.0),
    }
    ms = mo.harmonics_to_modes(hc, 3)
    for _ in range(20):
        x = rng.uniform(0.1, math.pi - 0.1)
        y = rng.uniform(0.0, 2 * math.pi)
        for mu in (1, 2):
            direct = mo.harmonic_field_value(hc, mu, x, y)
            assert abs(ms.value(mu - 1, x, y) - direct) < 1e-12
            assert abs(np.imag(ms.value(mu - 1, x, y))) < 1e-13


def test_harmonics_entry_validation():
    with pytest.raises(ValueError):
        mo.harmonics_to_modes({(3, 0, 0): (1.0, 0.0)}, 0)
    with pytest.raises(ValueError):
        mo.harmonics_to_modes({(1, 1, 2): (1.0, 0.0)}, 2)
    with pytest.raises(ValueError):
        mo.harmonics_to_modes({(1, 3, 2): (1.0, 0.0)}, 1)  # beyond truncation


def test_legendre_derivative_is_exact():
    fn = mo.assoc_legendre_fn(4, 2, coeff=0.7)
    for x in (0.4, 1.1, 2.3):
        fd = (fn(x + 1e-6) - fn(x - 1e-6)) / 2e-6
        assert abs(fn.d(x) - fd) < 1e-8


# ---------------------------------------------------------------------------
# ModeSet mechanics and serialization


def test_reconstruction_is_real(sample_modeset):
    ms = sample_modeset
    for x, y in [(0.4, 0.9), (1.7, 2.3)]:
        for mu in range(2):
            assert abs(np.imag(ms.value(mu, x, y))) < 1e-14


def test_wave_coeff_matches_reconstruction(sample_modeset):
    ms = sample_modeset
    x, y = 0.8, 1.9
    for mu in range(2):
        total = sum(
            ms.wave_coeff(mu, k, x) * np.exp(1j * k * y) for k in range(-ms.N, ms.N + 1)
        )
        assert abs(total - ms.value(mu, x, y)) < 1e-14


def test_json_round_trip(sample_modeset):
    text = mo.modeset_to_json(sample_modeset)
    back = mo.modeset_from_json(text)
    assert back.N == sample_modeset.N
    for x in (0.5, 1.3):
        for mu in range(2):
            assert abs(back.value(mu, x, 0.7) - sample_modeset.value(mu, x, 0.7)) < 1e-15


def test_json_legendre_entries():
    text = json.dumps(
        {
            "N": 1,
            "v0": [
                {"kind": "legendre", "l": 2, "m": 0, "coeff": 1.5},
                {"kind": "trigpoly", "terms": []},
            ],
            "vc": [[{"kind": "legendre", "l": 1, "m": 1, "coeff": 2.0}, {"kind": "trigpoly", "terms": []}]],
            "vs": [[{"kind": "trigpoly", "terms": []}, {"kind": "trigpoly", "terms": []}]],
        }
    )
    ms = mo.modeset_from_json(text)
    x = 0.9
    assert abs(ms.v0[0](x) - 1.5 * mo.k_lm(2, 0) * mo.assoc_legendre(2, 0, x)) < 1e-14
    assert abs(ms.vc[0][0](x) - 2.0 * mo.k_lm(1, 1) * mo.assoc_legendre(1, 1, x)) < 1e-14


def test_json_unknown_kind_rejected():
    with pytest.raises(ValueError):
        mo.modeset_from_json(json.dumps({"N": 0, "v0": [{"kind": "huh"}] * 2, "vc": [], "vs": []}))


# ---------------------------------------------------------------------------
# mode functions


def test_mode_functions_shift_collapse_at_h_zero(sample_modeset):
    ms = sample_modeset
    d0 = Deformation.real(0.0)
    x = 0.8
    mf = mo.mode_functions(ms, d0, x)
    g = gamma_upper_closed(x, 0.0)
    for m in range(1, ms.N + 1):
        for sig in range(2):
            for mu in range(2):
                cval = (ms.vc[m - 1][sig].d(x) if mu == 0 else m * ms.vs[m - 1][sig](x)) + 0.0j
                sval = (ms.vs[m - 1][sig].d(x) if mu == 0 else -m * ms.vc[m - 1][sig](x)) + 0.0j
                for rho in range(2):
                    cval += ms.vc[m - 1][rho](x) * g[mu, rho, sig]
                    sval += ms.vs[m - 1][rho](x) * g[mu, rho, sig]
                assert abs(mf.cm[m - 1, sig, mu] - cval) < 1e-14
                assert abs(mf.sm[m - 1, sig, mu] - sval) < 1e-14


def test_mode_functions_vanish_without_modes(sample_modeset):
    ms0 = mo.ModeSet.y_symmetric(sample_modeset.v0[0], sample_modeset.v0[1]).padded(2)
    mf = mo.mode_functions(ms0, D02, 0.9)
    assert np.max(np.abs(mf.cm)) == 0.0
    assert np.max(np.abs(mf.sm)) == 0.0


def test_mode_functions_real_for_real_field(sample_modeset):
    mf = mo.mode_functions(sample_modeset, D02, 0.8)
    assert np.max(np.abs(np.imag(mf.c0))) < 1e-14
    assert np.max(np.abs(np.imag(mf.cm))) < 1e-13
    assert np.max(np.abs(np.imag(mf.sm))) < 1e-13


# ---------------------------------------------------------------------------
# brute-force transport residual


def test_sigma_hat_reduces_to_y_symmetric_transport(sample_modeset):
    ms0 = mo.ModeSet.y_symmetric(sample_modeset.v0[0], sample_modeset.v0[1])
    fld = fl.YSymField(sample_modeset.v0[0], sample_modeset.v0[1])
    for x, y in [(0.9, 1.3), (1.8, 0.2)]:
        got = mo.sigma_hat_direct(ms0, D02, x, y)
        s = fl.sigma_eval(fld, x, D02.alpha)
        assert abs(got[0] - s.s1) < 1e-14
        assert abs(got[1] - s.s2) < 1e-14


def test_sigma_hat_classical_limit(sample_modeset):
    ms = sample_modeset
    d0 = Deformation.real(0.0)
    x, y = 0.9, 1.3
    got = mo.sigma_hat_direct(ms, d0, x, y)
    g = gamma_upper_closed(x, 0.0)
    eps = 1e-6
    v = [ms.value(mu, x, y) for mu in range(2)]
    for sig in range(2):
        dx = (ms.value(sig, x + eps, y) - ms.value(sig, x - eps, y)) / (2 * eps)
        dy = (ms.value(sig, x, y + eps) - ms.value(sig, x, y - eps)) / (2 * eps)
        ref = v[0] * dx + v[1] * dy
        for mu in range(2):
            for rho in range(2):
                ref += v[mu] * v[rho] * g[mu, rho, sig]
        assert abs(got[sig] - ref) < 1e-9


def test_sigma_hat_against_full_lattice_with_polynomial_connection(sample_modeset):
    # with a trigonometric-polynomial connection surrogate the whole product
    # can be evaluated on the exact lattice, validating every shift in the
    # wave engine (the geometric connection itself has chart poles at
    # x = 0, pi and admits no global Fourier representation)
    ms = sample_modeset
    d = D02
    gam_tp = [
        [
            [0.11 * TrigPoly.cosx() + 0.05 * TrigPoly.sinx(2), 0.07 * TrigPoly.sinx()],
            [0.04 * TrigPoly.cosx(2), -0.06 * TrigPoly.sinx() + TrigPoly.const(0.02)],
        ],
        [
            [TrigPoly.const(0.03), 0.09 * TrigPoly.cosx()],
            [0.08 * TrigPoly.sinx(2), 0.05 * TrigPoly.cosx(2)],
        ],
    ]

    def gamma(z):
        out = np.empty((2, 2, 2), dtype=complex)
        for mu in range(2):
            for rho in range(2):
                for sig in range(2):
                    out[mu, rho, sig] = gam_tp[mu][rho][sig](z, 0.0)
        return out

    # mode entries as full 2d lattice polynomials
    V = []
    for mu in range(2):
        poly = SAMPLE_V0[mu]
        for n in range(1, 4):
            poly = poly + SAMPLE_VC[n - 1][mu] * TrigPoly.cosy(n)
            poly = poly + SAMPLE_VS[n - 1][mu] * TrigPoly.siny(n)
        V.append(poly)

    for x, y in [(0.9, 1.3), (1.6, 2.8)]:
        got = mo.sigma_hat_direct(ms, d, x, y, gamma=gamma)
        for sig in range(2):
            cov1 = V[sig].dx()
            cov2 = V[sig].dy()
            for rho in range(2):
                cov1 = cov1 + star_lattice(V[rho], gam_tp[0][rho][sig], d)
                cov2 = cov2 + star_lattice(V[rho], gam_tp[1][rho][sig], d)
            ref = star_lattice(V[0], cov1, d) + star_lattice(V[1], cov2, d)
            assert abs(got[sig] - ref(x, y)) < 1e-12


# ---------------------------------------------------------------------------
# shift blocks and their reassembly


def test_b_blocks_vanish_at_mode_zero(sample_modeset):
    asm = mo.ModeAssembly(sample_modeset, D02)
    assert np.max(np.abs(asm.b(1, 0, 0.9))) == 0.0
    assert np.max(np.abs(asm.b(2, -1, 0.9))) == 0.0
    assert np.max(np.abs(asm.b(1, 4, 0.9))) == 0.0  # beyond truncation


def test_b2_shift_collapse_at_h_zero(sample_modeset):
    ms = sample_modeset
    d0 = Deformation.real(0.0)
    asm = mo.ModeAssembly(ms, d0)
    x, m = 0.8, 2
    bb = asm.b(0, m, x)
    mf = mo.mode_functions(ms, d0, x)
    c0 = mo.mode_functions(ms, d0, x).c0
    for sig in range(2):
        ref = 0.0j
        for mu in range(2):
            ref += (
                -2.0 * ms.v0[mu](x) * mf.sm[m - 1, sig, mu]
                - 2.0 * c0[sig, mu] * ms.vs[m - 1][mu](x)
            )
        assert abs(bb[1, sig] - ref) < 1e-13


def test_sigma_hat_reassembled_from_blocks(sample_modeset):
    asm = mo.ModeAssembly(sample_modeset, D02)
    for x, y in [(0.9, 1.3), (1.7, 0.4), (0.5, 2.8)]:
        a = asm.sigma_hat_reassembled(x, y)
        b = mo.sigma_hat_direct(sample_modeset, D02, x, y)
        assert np.max(np.abs(a - b)) < 1e-10


def test_wave_blocks_match_direct_coefficients(sample_modeset):
    ms = sample_modeset
    for alpha in (0.1, 0.2):
        d = Deformation.real(math.atanh(alpha))
        asm = mo.ModeAssembly(ms, d)
        for z in (0.9, 0.9 + 1j * d.h.real, 1.7 - 1j * d.h.real):
            direct = mo.sigma_hat_coeffs(ms, d, z)
            for K in range(-2 * ms.N - 1, 2 * ms.N + 2):
                blk = asm.wave_block(K, z)
                ref = direct.get(K, np.zeros(2, dtype=complex))
                assert np.max(np.abs(blk - ref)) < 1e-12


# ---------------------------------------------------------------------------
# mode sums and the assembled system


def test_klm_bundle_trivial_without_modes(sample_modeset):
    ms0 = mo.ModeSet.y_symmetric(sample_modeset.v0[0], sample_modeset.v0[1])
    bundle = mo.klm_functions(ms0, D02, 0.9, 1)
    for name in ("B1", "B2", "K1", "K2", "K3", "K4", "L1", "L2", "L3", "L4", "M1", "M2"):
        assert np.max(np.abs(getattr(bundle, name))) == 0.0


def test_l_sums_collapse_at_h_zero(sample_modeset):
    ms = sample_modeset
    d0 = Deformation.real(0.0)
    asm = mo.ModeAssembly(ms, d0)
    x, p = 0.8, 2
    bb = asm.b(0, p, x)
    L1, L2, L3, L4 = asm.l_sums(x, p)
    assert np.max(np.abs(L4 - 2.0 * bb[0])) < 1e-13
    assert np.max(np.abs(L3 - 2j * bb[1])) < 1e-13
    assert np.max(np.abs(L1 - 2.0 * bb[0])) < 1e-13
    assert np.max(np.abs(L2 - 2.0 * bb[1])) < 1e-13


@pytest.mark.parametrize("alpha", [0.1, 0.2])
def test_assembled_residuals_match_quadrature(sample_modeset, alpha):
    d = Deformation.real(math.atanh(alpha))
    asm = mo.ModeAssembly(sample_modeset, d)
    worst = 0.0
    for p in (1, 2, 3, 4):
        for x in np.linspace(0.5, 2.4, 4):
            E = asm.residuals(x, p)
            Q = mo.quadrature_residuals(sample_modeset, d, x, p)
            worst = max(worst, float(np.max(np.abs(E - Q))))
    assert worst < 1e-8


def test_p1_reduction_to_y_symmetric_system(sample_modeset):
    # with only the zero mode, the first two assembled equations are a fixed
    # invertible combination of the two non-local y-symmetric residuals:
    # r+- = A (E1 -+ i E2)/8 with A = 1/cosh h
    ms0 = mo.ModeSet.y_symmetric(sample_modeset.v0[0], sample_modeset.v0[1])
    fld = fl.YSymField(sample_modeset.v0[0], sample_modeset.v0[1])
    A = 1.0 / math.cosh(D02.h.real)
    for x in (0.7, 1.3, 2.1):
        E = mo.p_mode_residuals(ms0, D02, x, 1)
        rp, rm = fl.ysym_residual(fld, x, D02)
        assert abs(rp - A * (E[0] - 1j * E[1]) / 8.0) / abs(rp) < 1e-12
        assert abs(rm - A * (E[0] + 1j * E[1]) / 8.0) / abs(rm) < 1e-12


def test_higher_modes_vanish_identically_without_support(sample_modeset):
    ms0 = mo.ModeSet.y_symmetric(sample_modeset.v0[0], sample_modeset.v0[1])
    for p in (2, 3, 5):
        E = mo.p_mode_residuals(ms0, D02, 0.9, p)
        assert np.max(np.abs(E)) == 0.0


def test_residuals_are_quadratic_in_the_field(sample_modeset):
    lam = 1.7
    Ea = mo.p_mode_residuals(sample_modeset.scaled(lam), D02, 0.9, 2)
    Eb = mo.p_mode_residuals(sample_modeset, D02, 0.9, 2)
    assert np.max(np.abs(Ea - lam**2 * Eb)) < 1e-13


def test_truncation_padding_is_bit_identical(sample_modeset):
    padded = sample_modeset.padded(2)
    for p in (1, 2, 4):
        E1 = mo.p_mode_residuals(sample_modeset, D02, 0.9, p)
        E2 = mo.p_mode_residuals(padded, D02, 0.9, p)
        assert np.array_equal(E1, E2)


def test_h_to_zero_consistency(sample_modeset):
    # the residuals converge linearly in h to the commutative projections
    ms = sample_modeset.scaled(0.8)
    d_zero = Deformation.real(0.0)
    for p in (1, 2):
        Ez = mo.p_mode_residuals(ms, d_zero, 0.9, p)
        diffs = []
        for h in (1e-5, 1e-6):
            Ee = mo.p_mode_residuals(ms, Deformation.real(h), 0.9, p)
            diffs.append(float(np.max(np.abs(Ee - Ez))))
        assert diffs[0] / diffs[1] == pytest.approx(10.0, rel=0.05)
        assert diffs[1] < 1e-5


def test_mode_constraints_equal_linear_solve(sample_modeset):
    asm = mo.ModeAssembly(sample_modeset, D02)
    h = D02.h.real
    for p in (1, 2):
        for x in (0.9, 1.6):
            E = asm.residuals(x, p)
            chp, shp = math.cosh(p * h), math.sinh(p * h)
            sx, cx = math.sin(x), math.cos(x)
            det = (chp * sx) ** 2 + (shp * cx) ** 2
            assert det > 0.0
            U = (chp * sx * E[4] + shp * cx * E[5]) / det
            V = (shp * cx * E[4] - chp * sx * E[5]) / det
            c1, c2 = asm.constraints(x, p)
            assert abs(c1 - U) < 1e-13  # U = B1 + M1 slot
            assert abs(c2 + V) < 1e-13  # V = B2 - M2 slot


def test_constraints_consistent_without_modes(sample_modeset):
    ms0 = mo.ModeSet.y_symmetric(sample_modeset.v0[0], sample_modeset.v0[1])
    c1, c2 = mo.mode_constraints(ms0, D02, 0.9, 1)
    assert abs(c1) == 0.0 and abs(c2) == 0.0


def test_residuals_require_positive_p(sample_modeset):
    with pytest.raises(ValueError):
        mo.p_mode_residuals(sample_modeset, D02, 0.9, 0)
