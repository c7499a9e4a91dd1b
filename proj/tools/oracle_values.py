"""Reference values for the analytic unit tests.

Every quantity is computed from first principles (first-passage densities and
radial integrals) with mpmath, independently of the closed forms in the
library. Run with `python tools/oracle_values.py`.
"""

from mpmath import mp, erfc, exp, sqrt, pi, quad, inf, log, nstr

mp.dps = 30


def first_passage_density(s, a, D, d):
    return a / d * (d - a) / sqrt(4 * pi * D * s**3) * exp(-((d - a) ** 2) / (4 * D * s))


def p_single(t, a, D, d, mu=0):
    if t == inf and mu == 0:
        return a / d
    return quad(lambda s: first_passage_density(s, a, D, d) * exp(-mu * s), [0, min(t, 1), t])


def radial(f, r):
    return quad(lambda rho: 4 * pi * rho**2 * f(rho), [r, r + 50, r + 500, inf])


def kappa(t, a, D, lam, r):
    return lam * radial(lambda rho: (a / rho) * erfc((rho - a) / sqrt(4 * D * t)), r)


def zeta(t, a, D, lam, r, mu):
    return lam * radial(lambda rho: p_single(t, a, D, rho, mu), r)


def displaced(rho, t, D, lam, r):
    q2 = 4 * D * t
    if rho == 0:
        inside = quad(lambda s: 4 * pi * s**2 * exp(-s**2 / q2) / (pi * q2) ** 1.5, [0, r])
    else:
        inside = quad(lambda s: s / (rho * sqrt(pi * q2))
                      * (exp(-((s - rho) ** 2) / q2) - exp(-((s + rho) ** 2) / q2)), [0, r])
    return lam * (1 - inside)


def main():
    out = {}
    out["p_single(100,a=4,D=100,d=50)"] = p_single(100, 4, 100, 50)
    out["p_single(inf,a=4,D=100,d=30,mu=0.1)"] = p_single(inf, 4, 100, 30, 0.1)
    out["kappa(t=1,a=r=3,D=100,lam=1e-5)"] = kappa(1, 3, 100, 1e-5, 3)
    out["kappa(t=10,a=3,r=30,D=100,lam=1e-5)"] = kappa(10, 3, 100, 1e-5, 30)
    for t, mu in [(50, 0.1), (5, 1), (100, 0.01), (inf, 0.1)]:
        out[f"zeta(t={t},a=3,r=30,D=100,lam=1e-5,mu={mu})"] = zeta(t, 3, 100, 1e-5, 30, mu)

    # Degradable target, exact expectation over t_d ~ Exp(mu).
    a, D, lam, r, mu = 3, 100, 1e-5, 30, 0.1
    k = lambda s: kappa(s, a, D, lam, r) if s > 0 else 0
    t = 20
    exact = quad(lambda s: mu * exp(-mu * s) * (1 - exp(-k(s))), [0, 5, t]) \
        + exp(-mu * t) * (1 - exp(-k(t)))
    out["p_deg_exact(t=20,a=3,r=30,D=100,lam=1e-5,mu=0.1)"] = exact

    # Two classes: mean detection time of a stationary target.
    classes = [(3, 100, 1e-5), (4, 75, 1e-5)]
    K = lambda s: sum(kappa(s, ai, Di, li, 30) for ai, Di, li in classes) if s > 0 else 0
    out["mdt(two classes,r=30)"] = quad(lambda s: exp(-K(s)), [0, 1, 10, 50, 200, 1000])

    out["displaced(rho=0,t=1,r=30,D=100,lam=1e-5)"] = displaced(0, 1, 100, 1e-5, 30)
    out["displaced(rho=25,t=2,r=30,D=100,lam=1e-5)"] = displaced(25, 2, 100, 1e-5, 30)
    out["displaced(rho=40,t=2,r=30,D=100,lam=1e-5)"] = displaced(40, 2, 100, 1e-5, 30)

    # Presence in the sensing ball b = a + d_m at t.
    b = 3 + 10
    mean_inside = quad(lambda rho: 4 * pi * rho**2 * displaced(rho, 5, 100, 1e-5, 30), [0, b])
    out["p_sense_at(t=5,a=3,dm=10,r=30,D=100,lam=1e-5)"] = 1 - exp(-mean_inside)

    M, Dm, eta = 100, 100, 0.002
    out["d_m(M=100,Dm=100,eta=0.002)"] = M / (4 * pi * Dm * eta)
    out["c(d=20,t=3,M=100,Dm=100)"] = quad(
        lambda s: M / (4 * pi * Dm * s) ** 1.5 * exp(-(20**2) / (4 * Dm * s)), [0, 3])

    for key, value in out.items():
        print(f"{key:55s} {nstr(value, 17)}")


if __name__ == "__main__":
    main()
