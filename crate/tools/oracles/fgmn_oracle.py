"""F, G, M, N and the transversality combination for n=5, eps=0.2, b=0, default schedule.

u(rho) = rho^((4-n)/2) v(log R - log rho) is differentiated symbolically; v and its
derivatives come from a DOP853 integration started at the minimum with the escape
value of q (see delaunay_golden.py). Writes fgmn_golden.json.
"""
import json

import sympy as sp
from scipy.integrate import solve_ivp

from delaunay_golden import alpha_beta, escape_q, rhs, consts

N, EPS, DELTA0 = 5, 0.2, 0.05


def v_derivs(n, eps, q, t):
    s = solve_ivp(rhs(n), [0, t], [eps, 0, q, 0], method="DOP853", rtol=1e-13, atol=1e-15)
    y = s.y[:, -1]
    A, B, C, p = consts(n)
    return [*y, A * y[2] + C * abs(y[0]) ** p - B * y[0]]


def main():
    n = N
    q = escape_q(n, EPS)
    alpha, _ = alpha_beta(n, EPS, q)
    R = (alpha / 2) ** (2 / (n - 4))
    r = alpha ** (2 / (n - 4) - DELTA0)
    t = sp.log(R) - sp.log(r)
    vd = v_derivs(n, EPS, q, float(t))

    # a degree-4 Taylor polynomial of v at t0 has the same first four derivatives there
    rho = sp.symbols("rho", positive=True)
    tt = sp.log(R) - sp.log(rho)
    t0 = float(t)
    V = sum(sp.Float(vd[j], 30) * (tt - t0) ** j / sp.factorial(j) for j in range(5))
    u = rho ** sp.Rational(4 - n, 2) * V
    num = [float(sp.N(sp.diff(u, rho, k).subs(rho, r), 30)) for k in range(5)]
    u0, u1, u2, u3, u4 = num[0], r * num[1], r ** 2 * num[2], r ** 3 * num[3], r ** 4 * num[4]
    F = (n - 4) * u0 + u1
    G = (n - 4) * u0 + (n - 2) * u1 + u2
    M = (n - 3) * (n + 1) * u1 + (2 * n - 1) * u2 + u3
    Nn = (n * n - 4) * u2 + (2 * n + 1) * u3 + u4
    den = 2 * (n - 1) * (n - 2)
    T = F + G / (n - 1) - (n - 3) / den * M - Nn / den
    out = dict(n=n, eps=EPS, delta0=DELTA0, b=0.0, q=q, alpha=alpha, R=R, r=r,
               F=F, G=G, M=M, N=Nn, transversality=T)
    print(out)
    with open("fgmn_golden.json", "w") as f:
        json.dump(out, f, indent=1)


if __name__ == "__main__":
    main()
