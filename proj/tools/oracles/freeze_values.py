"""Reference values frozen into the unit tests, computed with mpmath at 40 digits."""
from mpmath import mp, mpf, hyp1f1, hyp2f1, hyp3f2, appellf1, quad, gamma, rf, exp, log, inf, nsum, factorial

mp.dps = 40


def show(name, v):
    print(f"{name} = {mp.nstr(v, 20)}")


show("1f1(10,1.2,3.7)", hyp1f1(10, 1.2, 3.7))
show("1f1(0.7,1.3,-60)", hyp1f1(0.7, 1.3, -60))
show("1f1(2.5,1.2,-3.2)", hyp1f1(2.5, 1.2, -3.2))
show("2f1(1.2,0.8,2.5,0.95)", hyp2f1(1.2, 0.8, 2.5, 0.95))
show("2f1(0.3,1.4,2.1,-0.8)", hyp2f1(0.3, 1.4, 2.1, -0.8))
show("2f1(0.5,0.7,1.3,0.4)", hyp2f1(0.5, 0.7, 1.3, 0.4))
show("3f2(1,2.5,1.5;3.2,2.1;0.6)", hyp3f2(1, 2.5, 1.5, 3.2, 2.1, 0.6))
show("F1(0.8;0.6,1.3;2.2;0.5,-0.7)", appellf1(0.8, 0.6, 1.3, 2.2, 0.5, -0.7))
show("F1(1.5;-0.4,2.0;3.1;0.9,0.3)", appellf1(1.5, -0.4, 2.0, 3.1, 0.9, 0.3))
show("lnpoch(0.5,300)", log(rf(mpf("0.5"), 300)))


def phi2(b1, b2, c, x, y, terms=400):
    s = mpf(0)
    for i in range(terms):
        ti = rf(b1, i) * x**i / factorial(i)
        for j in range(terms):
            s += ti * rf(b2, j) * y**j / (factorial(j) * rf(c, i + j))
    return s


mp.dps = 60
show("phi2(0.7,1.5;2.3;-4,-2.5)", phi2(mpf("0.7"), mpf("1.5"), mpf("2.3"), mpf(-4), mpf("-2.5"), 120))
mp.dps = 80
show("phi2(0.7,1.5;2.3;-30,-12)", phi2(mpf("0.7"), mpf("1.5"), mpf("2.3"), mpf(-30), mpf(-12), 260))
mp.dps = 40
show("1f1(2.1,3.1,-40)", hyp1f1(2.1, 3.1, -40))
show("1f1(1.2,3.5,2)", hyp1f1(1.2, 3.5, 2))


# kappa-mu shadowed pdf and cdf at the Table-I SoI profile
def ks_pdf(kappa, mu, m, mean):
    th = mean / (mu * (1 + kappa))
    la = (mu * kappa + m) * mean / (mu * (1 + kappa) * m)
    return lambda x: x ** (mu - 1) * exp(-x / th) * hyp1f1(m, mu, x / th - x / la) / (th ** (mu - m) * la**m * gamma(mu))


f = ks_pdf(mpf("1.5"), mpf("1.2"), mpf(10), mpf(1))
show("pdf_tableI(0.7)", f(mpf("0.7")))
show("cdf_tableI(0.7)", quad(f, [0, mpf("0.7")]))
show("cdf_tableI(2.5)", quad(f, [0, 1, mpf("2.5")]))

# Two-variable quadratures in double precision (scipy).
import numpy as np
from scipy import integrate, special


def sp_pdf(kappa, mu, m, mean):
    th = mean / (mu * (1 + kappa))
    la = (mu * kappa + m) * mean / (mu * (1 + kappa) * m)
    lc = -(mu - m) * np.log(th) - m * np.log(la) - special.gammaln(mu)
    # Kummer form e^{-x/lambda} 1F1(mu - m; mu; -x(1/theta - 1/lambda)) keeps every factor bounded.
    return lambda x: 0.0 if x <= 0 else np.exp((mu - 1) * np.log(x) - x / la + lc) * special.hyp1f1(mu - m, mu, -x * (1 / th - 1 / la))


opts = dict(epsabs=1e-14, epsrel=1e-12, limit=400)
g = sp_pdf(1.5, 1.2, 10.0, 1.0)
h = sp_pdf(1.0, 1.0, 10.0, 0.3)
Fg = lambda z: integrate.quad(g, 0, z, **opts)[0]
out = integrate.quad(lambda y: h(y) * Fg(2.0 * y), 0, 40, points=[0.3, 1, 3], **opts)
print("outage_N1(T=2) =", repr(out[0]), out[1])

g2 = sp_pdf(1.5, 2.0, 3.0, 1.0)
inner = lambda y: integrate.quad(lambda x: np.log1p(x / y) * g2(x), 0, 80, points=[0.5, 2, 8], **opts)[0]
rate = integrate.quad(lambda y: h(y) * inner(y), 0, 40, points=[0.01, 0.3, 1, 3], **opts)
print("rate_N1_mu2 =", repr(rate[0]), rate[1])
