"""Independent closed-form values used as oracles by the test-suite."""

import math


def displacement_msl(vqq, s0):
    """Bayes risk of a Gaussian location model with Gaussian prior."""
    return 1.0 / (1.0 / vqq + 1.0 / s0)


def shrinkage_estimate(x, q0, mu0, vqq, s0):
    return (s0 * (x - q0) + mu0 * vqq) / (s0 + vqq)


def squeezing_full_quadratic_msl(s0, vqq, vpp, vqp=0.0):
    num = 16 * s0**2 * math.exp(4 * s0) * vqq * vpp
    den = 1 + 2 * (3 * math.exp(8 * s0) - 1) * vqq * vpp - 4 * vqp**2
    return s0 - num / den


def squeezing_full_quadratic_coeffs(s0, vqq, vpp, vqp=0.0, mu0=0.0):
    """Coefficients of p^2 and q^2 in the projected operator (q-centred, p-centred form)."""
    den = 1 + 2 * (3 * math.exp(8 * s0) - 1) * vqq * vpp - 4 * vqp**2
    pref = 4 * s0 * math.exp(2 * s0) / den
    return pref * vqq * math.exp(-2 * mu0), -pref * vpp * math.exp(2 * mu0)


def _a_pm(phi, s0, mu0, vqq, vpp, vqp):
    tq = math.exp(2 * s0) * vqq
    tp = math.exp(4 * mu0 + 2 * s0) * vpp
    tx = math.exp(2 * mu0) * vqp
    bp = 3 * math.exp(4 * s0) - 1
    bm = bp - 4 * s0
    cm = 3 * math.exp(-4 * s0) - 1
    cp = cm + 4 * s0
    c, s = math.cos(phi), math.sin(phi)
    common_quartic = tq**2 * c**4 + tp**2 * s**4
    cross = 8 * tx * (tq * c**3 * s + tp * s**3 * c)
    s2 = math.sin(2 * phi) ** 2
    a_plus = bp * common_quartic + 0.5 * (4 * tx**2 + cm * tq * tp) * s2 + cross
    a_minus = bm * common_quartic + 0.5 * (4 * tx**2 + cp * tq * tp) * s2 + cross
    return a_plus, a_minus, tq, tp


def squeezing_homodyne_msl(phi, s0, mu0, vqq, vpp, vqp=0.0):
    a_plus, a_minus, _, _ = _a_pm(phi, s0, mu0, vqq, vpp, vqp)
    return s0 * a_minus / a_plus


def squeezing_homodyne_coeff(phi, s0, mu0, vqq, vpp, vqp=0.0):
    a_plus, _, tq, tp = _a_pm(phi, s0, mu0, vqq, vpp, vqp)
    return 2 * s0 * math.exp(2 * mu0) * (tp * math.sin(phi) ** 2 - tq * math.cos(phi) ** 2) / a_plus


def squeezing_homodyne_axis_msl(s0):
    return s0 - 4 * s0**2 / (3 * math.exp(4 * s0) - 1)
