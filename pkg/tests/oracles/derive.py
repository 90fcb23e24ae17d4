"""Independent high-precision oracles for frozen test values.

Run ``python tests/oracles/derive.py`` to regenerate ``frozen.json``.  Uses
mpmath quadrature directly on the defining integrals, sharing no code with
the package.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 30

A, B, C = mp.mpf("0.0001"), mp.mpf("0.00035"), mp.mpf("1.075")


def mu(t, eta=50, factor=0):
    return (1 + factor) * (A + B * C ** (eta + t))


def surv(t, s, eta=50, factor=0):
    return mp.exp(-mp.quad(lambda u: mu(t + u, eta, factor), [0, s]))


def life_expectancy(eta=50, factor=0, max_age=120):
    return mp.quad(lambda s: surv(0, s, eta, factor), mp.linspace(0, max_age - eta, 8))


def ncdf(x):
    return mp.ncdf(x)


def u0(T, r, sigma, c, g, x0=100, eta=50):
    """European value by direct quadrature of the risk-neutral expectation in log space."""
    q = r - c

    def bracket(t):
        if t == 0:
            return x0
        G = x0 * mp.e ** (g * t)
        sd = sigma * mp.sqrt(t)
        m = mp.log(x0) + (q - sigma**2 / 2) * t
        dens = lambda y: mp.npdf(y, m, sd)
        lg = mp.log(G)
        return G * mp.quad(dens, [-mp.inf, lg]) + mp.quad(lambda y: mp.e**y * dens(y), [lg, mp.inf])

    death = mp.quad(lambda t: mp.e ** (-r * t) * surv(0, t, eta) * mu(t, eta) * bracket(t), mp.linspace(0, T, 6))
    return death + mp.e ** (-r * T) * surv(0, T, eta) * bracket(T)


def lognormal_moments(z, s, drift, sigma, a):
    """P(Z_s > a) and E[Z_s 1{Z_s > a}] by quadrature over the log-normal density."""
    sd = sigma * mp.sqrt(s)
    m = mp.log(z) + (drift - sigma**2 / 2) * s
    dens = lambda y: mp.npdf(y, m, sd)
    la = mp.log(a)
    return mp.quad(dens, [la, mp.inf]), mp.quad(lambda y: mp.e**y * dens(y), [la, mp.inf])


def main():
    out = {}
    out["life_expectancy"] = {str(f): float(life_expectancy(50, mp.mpf(f))) for f in ("0", "-0.38", "0.38")}
    cells = {}
    for spread in ("0.05", "0.03", "0.01"):
        for c in ("0.04", "0.025"):
            g = mp.mpf("0.05") - mp.mpf(spread)
            cells[f"{spread}/{c}"] = float(u0(10, mp.mpf("0.05"), mp.mpf("0.2"), mp.mpf(c), g))
    out["U0"] = cells
    mom = []
    for z, s, drift, sigma, a in [(1.0, 0.5, -0.025, 0.2, 0.8), (0.7, 3.0, 0.01, 0.35, 1.0), (2.0, 10.0, -0.05, 0.1, 1.5)]:
        tp, pm = lognormal_moments(mp.mpf(z), mp.mpf(s), mp.mpf(drift), mp.mpf(sigma), mp.mpf(a))
        mom.append({"z": z, "s": s, "drift": drift, "sigma": sigma, "a": a, "tail": float(tp), "partial_mean": float(pm)})
    out["lognormal"] = mom
    # benchmark growth cap by hand; f(T) = K - c since k(T) = 0 and k'(T) = -K
    T, c, K, r, g = 10, mp.mpf("0.025"), mp.mpf("0.014"), mp.mpf("0.05"), 0
    alpha = abs(g + c - r)
    fT = K - c  # k(T) = 0, k'(T) = -K
    out["lambda_cap"] = float(mp.log(C) + mu(T) + c + alpha * mp.e ** (alpha * T) - fT)
    Path(__file__).with_name("frozen.json").write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
