import math
import warnings

import numpy as np
import pytest

from ncsphere import AnalyticFn1D, Deformation, DomainError
from ncsphere import flow as fl


def smooth_field():
    psi = AnalyticFn1D(
        lambda z: np.sin(z) + 0.3 * np.cos(2 * z),
        lambda z: np.cos(z) - 0.6 * np.sin(2 * z),
        lambda z: -np.sin(z) - 1.2 * np.cos(2 * z),
    )
    phi = AnalyticFn1D(
        lambda z: 0.2 + 0.1 * np.sin(z),
        lambda z: 0.1 * np.cos(z),
        lambda z: -0.1 * np.sin(z),
    )
    return fl.YSymField(psi, phi)


# ---------------------------------------------------------------------------
# transport polynomial


def test_sigma_meridian_is_geodesic():
    f = fl.YSymField(AnalyticFn1D.const(0.8), AnalyticFn1D.const(0.0))
    s = fl.sigma_eval(f, 1.1, 0.0)
    assert abs(s.s1) < 1e-15 and abs(s.s2) < 1e-15


def test_sigma_zero_order_solution():
    f = fl.zero_order_solution(0.05, 1.0)
    s = fl.sigma_eval(f, 1.0, 0.0)
    assert abs(s.s1) < 1e-12 and abs(s.s2) < 1e-12


def test_sigma_double_entry_oracle():
    f = smooth_field()
    for zpt in (0.8 + 0.3j, 1.4 - 0.2j, 2.1):
        a = fl.sigma_eval(f, zpt, 0.3)
        b = fl.sigma_eval_from_tables(f, zpt, 0.3)
        assert abs(a.s1 - b.s1) < 1e-13
        assert abs(a.s2 - b.s2) < 1e-13


# ---------------------------------------------------------------------------
# non-local residual pair


def test_residual_h_zero_zero_order():
    f = fl.zero_order_solution(0.05, 1.0)
    rp, rm = fl.ysym_residual(f, 1.0, Deformation.real(0.0))
    assert abs(rp) < 1e-12 and abs(rm) < 1e-12


def test_residual_h_zero_collapse():
    f = smooth_field()
    x = 0.9
    rp, rm = fl.ysym_residual(f, x, Deformation.real(0.0))
    s = fl.sigma_eval(f, x, 0.0)
    direct = s.s1 * math.cos(x) + 1j * s.s2 * math.sin(x)
    assert abs(rp - direct) < 1e-15
    assert abs(rm - np.conj(direct)) < 1e-15


def test_residual_equals_projected_form_times_scale():
    # the non-local form equals A times Sigma^1(z) cos x + i Sigma^2(z) sin x
    # after the complex-slice trigonometric identities, A = 1/cosh h
    f = smooth_field()
    d = Deformation.real(0.25)
    x = 0.9
    rp, rm = fl.ysym_residual(f, x, d)
    A = 1.0 / math.cosh(0.25)
    sp = fl.sigma_eval(f, x + 0.25j, d.alpha)
    sm = fl.sigma_eval(f, x - 0.25j, d.alpha)
    assert abs(rp - A * (sp.s1 * math.cos(x) + 1j * sp.s2 * math.sin(x))) < 1e-12
    assert abs(rm - A * (sm.s1 * math.cos(x) - 1j * sm.s2 * math.sin(x))) < 1e-12


def test_residual_small_h_limits():
    # sum -> 2 Sigma^1 cos x and difference -> 2 i Sigma^2 sin x as h -> 0;
    # the deviation from the limiting constraint shrinks linearly with h
    f = smooth_field()
    x = 1.2
    errs = []
    for h in (1e-4, 1e-5, 1e-6):
        rp, rm = fl.ysym_residual(f, x, Deformation.real(h))
        s = fl.sigma_eval(f, x, math.tanh(h))
        e_sum = abs((rp + rm) - 2.0 * s.s1 * math.cos(x))
        e_diff = abs((rp - rm) - 2j * s.s2 * math.sin(x))
        errs.append((e_sum, e_diff))
    for k in range(2):
        assert errs[0][k] / errs[1][k] == pytest.approx(10.0, rel=0.05)
        assert errs[1][k] / errs[2][k] == pytest.approx(10.0, rel=0.05)
    assert errs[-1][0] < 1e-5 and errs[-1][1] < 1e-6


# ---------------------------------------------------------------------------
# compatibility combination


def test_compatibility_zero_when_sigma1_vanishes():
    f = fl.zero_order_solution(0.03, 1.0)
    # at alpha = 0 both transport components vanish identically
    assert abs(fl.compatibility(f, 1.2, Deformation.real(0.0))) < 1e-12


def test_compatibility_finite_off_solution():
    f = fl.zero_order_solution(0.05, 1.0)
    c = fl.compatibility(f, 1.2, Deformation.real(0.2))
    assert np.isfinite(c) and abs(c) > 1e-12  # not a solution at alpha != 0


def test_compatibility_vanishes_on_manufactured_solution():
    # tune two scale parameters so the first residual vanishes at one x
    # (the second is its conjugate for a real field), then the compatibility
    # combination must vanish as an algebraic consequence
    d = Deformation.real(0.15)
    x0 = 1.1
    zo = fl.zero_order_solution(0.05, 1.0)

    def field(a, b):
        return fl.YSymField((1.0 + a) * zo.psi, (1.0 + b) * zo.phi, zo.params)

    def res(v):
        rp, _ = fl.ysym_residual(field(v[0], v[1]), x0, d)
        return np.array([rp.real, rp.imag])

    v = np.zeros(2)
    for _ in range(60):
        r = res(v)
        if np.max(np.abs(r)) < 1e-13:
            break
        eps = 1e-7
        J = np.empty((2, 2))
        for j in range(2):
            dv = np.zeros(2)
            dv[j] = eps
            J[:, j] = (res(v + dv) - res(v - dv)) / (2 * eps)
        v = v - np.linalg.solve(J, r)
    rp, rm = fl.ysym_residual(field(v[0], v[1]), x0, d)
    assert abs(rp) < 1e-12 and abs(rm) < 1e-12
    assert abs(fl.compatibility(field(v[0], v[1]), x0, d)) < 1e-10


# ---------------------------------------------------------------------------
# commutative solution


def test_zero_order_meridian_case():
    f = fl.zero_order_solution(0.0, 1.0)
    assert abs(f.psi(0.9) - 1.0) < 1e-15
    assert abs(f.phi(0.9)) < 1e-15


def test_zero_order_domain():
    f = fl.zero_order_solution(0.05, 1.0)
    xmin, xmax = f.params["domain"]
    assert abs(xmin - math.asin(math.sqrt(0.05))) < 1e-15
    assert abs(xmax - (math.pi - xmin)) < 1e-15


def test_zero_order_rejects_empty_domain():
    with pytest.raises(DomainError):
        fl.zero_order_solution(2.0, 1.0)
    with pytest.raises(DomainError):
        fl.zero_order_solution(-0.1, 1.0)


def test_zero_order_residual_dense_grid():
    f = fl.zero_order_solution(0.05, 1.0)
    xmin, xmax = f.params["domain"]
    worst = 0.0
    for x in np.linspace(xmin + 1e-3, xmax - 1e-3, 100):
        r1, r2 = fl.alphazero_residual(f, x)
        worst = max(worst, abs(r1), abs(r2))
    assert worst < 1e-12


def test_zero_order_residual_random_parameters(rng):
    worst = 0.0
    for _ in range(20):
        b0 = rng.uniform(0.5, 3.0)
        a0 = rng.uniform(0.0, 0.9) * b0
        f = fl.zero_order_solution(a0, b0)
        xmin, xmax = f.params["domain"]
        for x in np.linspace(xmin + 0.05, xmax - 0.05, 25):
            r1, r2 = fl.alphazero_residual(f, x)
            worst = max(worst, abs(r1), abs(r2))
    assert worst < 1e-12


def test_discrete_symmetry_of_commutative_system():
    f = fl.zero_order_solution(0.07, 1.3)
    xmin, xmax = f.params["domain"]
    xs = np.linspace(xmin + 0.1, xmax - 0.1, 7)
    for lam in (1.0, -1.0, 1j, -1j):
        g = f.scaled(lam)
        for x in xs:
            r1, r2 = fl.alphazero_residual(g, x)
            assert abs(r1) < 1e-12 and abs(r2) < 1e-12


# ---------------------------------------------------------------------------
# first order in alpha


def test_first_order_residual_reduces_at_alpha_zero():
    f = fl.zero_order_solution(0.05, 1.0)
    r1, r2 = fl.first_order_residual(f, 1.0, 0.0)
    # the second equation is tan x times the commutative one; both vanish
    assert abs(r1) < 1e-12 and abs(r2) < 1e-12


def test_first_order_residual_constant_meridian():
    f = fl.YSymField(AnalyticFn1D.const(1.0), AnalyticFn1D.const(0.0))
    for alpha in (0.01, 0.123, -0.2):
        r1, r2 = fl.first_order_residual(f, 0.7, alpha)
        assert abs(r1) < 1e-15
        assert abs(r2 - 2.0 * alpha) < 1e-15


def test_first_order_residual_order_scaling():
    # residual of the connected field is quadratic in alpha: Richardson ratio 4
    for alpha in (5e-4, 1e-3):
        f1 = fl.connected_field(0.05, 1.0, 0.1, 0.2, alpha)
        f2 = fl.connected_field(0.05, 1.0, 0.1, 0.2, 2 * alpha)
        n1 = n2 = 0.0
        for x in (0.8, 1.1, 1.9):
            r1 = fl.first_order_residual(f1, x, alpha)
            r2 = fl.first_order_residual(f2, x, 2 * alpha)
            n1 += abs(r1[0]) + abs(r1[1])
            n2 += abs(r2[0]) + abs(r2[1])
        assert 3.2 < n2 / n1 < 4.8


# ---------------------------------------------------------------------------
# closed-form deviation


def test_deviation_requires_ordered_parameters():
    with pytest.raises(DomainError):
        fl.first_order_deviation(1.0, 0.5, 0.0, 0.0)
    with pytest.raises(DomainError):
        fl.first_order_deviation(0.0, 1.0, 0.0, 0.0)


def test_deviation_satisfies_linear_system():
    dev = fl.first_order_deviation(0.05, 1.0, 0.1, 0.2)
    f0 = fl.zero_order_solution(0.05, 1.0)
    xmin, xmax = f0.params["domain"]
    worst = 0.0
    for x in np.linspace(xmin + 0.05, xmax - 0.05, 50):
        if abs(x - math.pi / 2) < 0.02:
            continue
        r1, r2 = fl.deviation_system_residual(dev, x)
        worst = max(worst, abs(r1), abs(r2))
    assert worst < 1e-8


def test_deviation_derivatives_match_finite_differences():
    dev = fl.first_order_deviation(0.05, 1.0, 0.1, 0.2)
    for x in (0.8, 1.3, 2.0):
        for fn in (dev.omega, dev.delta):
            fd = (fn(x + 1e-6) - fn(x - 1e-6)) / 2e-6
            assert abs(fn.d(x) - fd) / max(1.0, abs(fd)) < 1e-8


def test_delta_vanishes_for_tuned_constant():
    a0, b0, d0 = 0.05, 1.0, 0.2
    zo = fl.zero_order_solution(a0, b0)
    x = math.pi / 2
    psi = zo.psi(x)
    # pick c0 so the bracket at the equator cancels exactly
    c0 = float(
        np.real(
            (a0 / math.sqrt(b0)) * (np.arctanh(psi / math.sqrt(b0) + 0.0j) + 0.5j * math.pi)
            + 2.0 * psi
        )
    )
    dev = fl.first_order_deviation(a0, b0, c0, d0)
    val = dev.delta(x)
    # c0 cancels the real part; the inverse-cotangent branch leaves the
    # constant imaginary remainder
    assert abs(val.real) < 1e-13


def test_eta_beta_relationship():
    dev = fl.first_order_deviation(0.05, 1.0, 0.1, 0.2)
    f0 = fl.zero_order_solution(0.05, 1.0)
    for x in (0.6, 1.1, 2.2):
        assert abs(dev.beta(x) - dev.eta(x) / 1.0) < 1e-14
        assert abs(dev.beta(x) + 2.0 * np.sin(x) ** 2 * f0.psi(x) ** 2) < 1e-13


def test_sqrt_eta_and_psi_never_simultaneously_real():
    dev = fl.first_order_deviation(0.05, 1.0, 0.1, 0.2)
    f0 = fl.zero_order_solution(0.05, 1.0)
    for x in np.linspace(0.01, math.pi - 0.01, 400):
        eta_real_sqrt = abs(np.imag(np.sqrt(dev.eta(x) + 0.0j))) < 1e-12
        psi_real = abs(np.imag(f0.psi(x))) < 1e-12
        assert not (eta_real_sqrt and psi_real)


def test_deviation_mirror_symmetry():
    dev = fl.first_order_deviation(0.05, 1.0, 0.1, 0.2)
    for x in (0.7, 1.2, 1.4):
        assert abs(dev.omega(x) - dev.omega(math.pi - x)) < 1e-13
        assert abs(dev.delta(x) - dev.delta(math.pi - x)) < 1e-13


def test_deviation_branch_point_warning():
    a0, b0 = 0.05, 1.0
    dev = fl.first_order_deviation(a0, b0, 0.1, 0.2)
    xb = math.asin(math.sqrt(a0 / b0))  # eta and psi0 vanish here
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        dev.omega(xb + 1e-12)
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


def test_deviation_principal_values_on_real_axis():
    # the cut-free implementation must coincide with plain principal-branch
    # evaluation on the real validity band
    a0, b0, c0, d0 = 0.05, 1.0, 0.1, 0.2
    dev = fl.first_order_deviation(a0, b0, c0, d0)
    zo = fl.zero_order_solution(a0, b0)
    for x in (0.7, 1.0, 1.9):
        eta = 2.0 * (a0 - b0 * math.sin(x) ** 2)
        beta = eta / b0
        sq_eta = np.sqrt(complex(eta))
        sq_beta = np.sqrt(complex(beta))
        T = np.arctan(np.sqrt(2.0) * math.sin(x) / sq_beta)
        om = d0 * math.sin(x) / sq_eta + math.sqrt(a0) * (
            2.0 * c0 * zo.psi(x) / eta
            + 1.0
            - (np.sqrt(2.0 * complex(beta)) / math.sin(x)) * (1.0 - a0 / eta) * T
        )
        # form the real quotient first, then take the principal complex log
        u = float(np.real(zo.psi(x))) / math.sqrt(b0)
        coth_inv = 0.5 * np.log(complex((u + 1.0) / (u - 1.0)))
        de = (c0 - (a0 / math.sqrt(b0)) * coth_inv - (1.0 + math.sin(x) ** 2) * zo.psi(x)) / math.sin(x) ** 2
        assert abs(dev.omega(x) - om) < 1e-12
        assert abs(dev.delta(x) - de) < 1e-12


# ---------------------------------------------------------------------------
# numerical cross-checks


def test_ode_solver_matches_closed_forms():
    dev = fl.first_order_deviation(0.05, 1.0, 0.1, 0.2)
    sol = fl.deviation_ode_solve(0.05, 1.0, 0.1, 0.2, 1.0, 1.5, dt=1e-4)
    xe, om, de = sol[-1]
    assert abs(om - dev.omega(xe)) < 1e-7
    assert abs(de - dev.delta(xe)) < 1e-7


def test_ode_solver_fourth_order_convergence():
    dev = fl.first_order_deviation(0.05, 1.0, 0.1, 0.2)
    errs = []
    for dt in (0.05, 0.025):
        sol = fl.deviation_ode_solve(0.05, 1.0, 0.1, 0.2, 1.0, 1.5, dt=dt)
        xe, om, de = sol[-1]
        errs.append(abs(om - dev.omega(xe)) + abs(de - dev.delta(xe)))
    ratio = errs[0] / errs[1]
    assert 10.0 < ratio < 24.0  # fourth order: ~16x per halving


def test_ode_degenerate_constant_coefficient_case():
    # frozen psi0 = k, phi0 = 0: tan x Delta' + 2 Delta = -2 b0 / k has the
    # closed solution Delta = -b0/k + C / sin^2 x
    k, b0 = 0.8, 1.3
    C = 0.45

    def delta_exact(x):
        return -b0 / k + C / math.sin(x) ** 2

    def rhs(x, y):
        return np.array([0.0, -(2.0 * k * y[1] + 2.0 * b0) / (k * math.tan(x))])

    x0, x1, n = 1.0, 1.8, 8000
    step = (x1 - x0) / n
    y = np.array([0.0, delta_exact(x0)], dtype=complex)
    x = x0
    for _ in range(n):
        y = fl._rk4_step(rhs, x, y, step)
        x += step
    assert abs(y[1] - delta_exact(x1)) < 1e-10


# ---------------------------------------------------------------------------
# field-line tracer


def test_trace_meridian():
    f = fl.zero_order_solution(0.0, 1.0)
    tr = fl.trace_flow(f, (0.3, 1.0), 1.0, 1e-3)
    assert max(abs(y - 1.0) for _, _, y in tr.samples) == 0.0
    assert tr.planarity() < 1e-12


def test_trace_crosses_equator_and_is_planar():
    f = fl.zero_order_solution(0.05, 1.0)
    x0 = math.asin(0.05**0.25) + 0.01
    tr = fl.trace_flow(f, (x0, 0.0), 3.0, 1e-3)
    assert max(x for _, x, _ in tr.samples) > math.pi / 2
    assert tr.planarity() < 1e-6


def test_trace_reports_domain_exit():
    f = fl.zero_order_solution(0.05, 1.0)
    x0 = math.asin(0.05**0.25) + 0.01
    tr = fl.trace_flow(f, (x0, 0.0), 10.0, 1e-3)
    assert tr.exited
    t, x, y = tr.exit_state
    xmin, xmax = f.params["domain"]
    assert x > xmax - 0.05  # leaves through the southern boundary


def test_trace_rejects_start_outside_domain():
    f = fl.zero_order_solution(0.05, 1.0)
    with pytest.raises(DomainError):
        fl.trace_flow(f, (0.05, 0.0), 1.0)
