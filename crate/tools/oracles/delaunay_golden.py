"""Reference Delaunay data for n in {5, 6, 8}, eps in {0.3, 0.2, 0.1, 0.05}.

Two independent shoots:
  escape   bisection on q by escape direction (above 2 / below eps) from the minimum
  orbit    Newton on (v_max, v''(max)) from the symmetric maximum to the next minimum
Writes delaunay_golden.json.
"""
import json

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import fsolve


def consts(n):
    A = (n * (n - 4) + 8) / 2
    B = n * n * (n - 4) ** 2 / 16
    C = n * (n - 4) * (n * n - 4) / 16
    p = (n + 4) / (n - 4)
    return A, B, C, p


def rhs(n):
    A, B, C, p = consts(n)
    return lambda t, y: [y[1], y[2], y[3], A * y[2] + C * abs(y[0]) ** p - B * y[0]]


def ham(n, y):
    v, v1, v2, v3 = y
    return (-v3 * v1 + v2 ** 2 / 2 + (n * n - 4 * n + 8) / 4 * v1 ** 2
            - n * n * (n - 4) ** 2 / 32 * v ** 2
            + (n - 4) ** 2 * (n * n - 4) / 32 * abs(v) ** (2 * n / (n - 4)))


def classify(n, eps, q, tmax=200):
    def up(t, y):
        return y[0] - 2
    up.terminal = True

    def dn(t, y):
        return y[0] - eps * (1 - 1e-9)
    dn.terminal = True
    dn.direction = -1
    s = solve_ivp(rhs(n), [0, tmax], [eps, 0, q, 0], method="DOP853", rtol=1e-12, atol=1e-14, events=[up, dn])
    if len(s.t_events[0]):
        return "A"
    if len(s.t_events[1]):
        return "B"
    return "?"


def escape_q(n, eps):
    qm = n * (n - 4) * eps / 4
    lo, hi = -qm * 0.999999, qm * 0.999999
    cl = classify(n, eps, lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if classify(n, eps, mid) == cl:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def first_max(n, eps, q):
    def ev(t, y):
        return y[1]
    ev.terminal = True
    ev.direction = -1
    s = solve_ivp(rhs(n), [0, 100], [eps, 0, q, 0], method="DOP853", rtol=1e-13, atol=1e-15, events=[ev])
    return s.t_events[0][0], s.y_events[0][0]


def half(n, x):
    def ev(t, y):
        return y[1]
    ev.direction = 1

    def up(t, y):
        return y[0] - 3
    up.terminal = True
    s = solve_ivp(rhs(n), [0, 60], [x[0], 0, x[1], 0], method="DOP853", rtol=1e-13, atol=1e-16, events=[ev, up])
    for t, y in zip(s.t_events[0], s.y_events[0]):
        if t > 1e-6:
            return t, y
    return 60.0, s.y[:, -1]


def orbit(n, eps, vm, w):
    F = lambda x: [half(n, x)[1][3], half(n, x)[1][0] - eps]
    x = fsolve(F, [vm, w], xtol=1e-15)
    th, y = half(n, x)
    return x, y[2], 2 * th, F(x)


def alpha_beta(n, eps, q):
    return (n * n * eps / 4 - q) / (2 * (n - 2)), (q - (n - 4) ** 2 * eps / 4) / (2 * (n - 2))


def main():
    out = []
    for n in [5, 6, 8]:
        for eps in [0.3, 0.2, 0.1, 0.05]:
            qe = escape_q(n, eps)
            t, y = first_max(n, eps, qe)
            x, q, T, res = orbit(n, eps, y[0], y[2])
            a, b = alpha_beta(n, eps, qe)
            row = dict(n=n, eps=eps, q_escape=qe, T_escape=2 * t, q_orbit=float(q), T_orbit=float(T),
                       H=ham(n, [eps, 0, qe, 0]), alpha=a, beta=b, vmax=float(x[0]),
                       orbit_residual=[float(r) for r in res])
            print(row)
            out.append(row)
    with open("delaunay_golden.json", "w") as f:
        json.dump(out, f, indent=1)


if __name__ == "__main__":
    main()
