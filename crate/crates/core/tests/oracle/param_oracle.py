"""Extended-precision reference values for the closed-form parameter formulas.

Regenerate with:  python3 param_oracle.py > ../data/param_oracle.tsv
Every value is evaluated with mpmath at 60 significant digits, independently
of the Rust implementation.
"""
from mpmath import mp, mpf, sqrt, log, ceil

mp.dps = 60

LT2 = mpf(2)  # squared row-norm bound used throughout the grid


def tree_depth(n):
    return int(ceil(log(mpf(n), 2) + 1))


def row(eps, delta, n, d, alpha):
    eps, delta, alpha = mpf(eps), mpf(delta), mpf(alpha)
    lt = sqrt(LT2)
    m = tree_depth(n)
    eps0 = eps / sqrt(8 * m * log(2 / delta))
    delta0 = delta / (2 * m)
    k = d + 1 + int(ceil(224 * m * eps ** -2 * log(8 * m / delta) * log(2 / delta)))
    premise = d + 1 + 28 * eps0 ** -2 * log(4 / delta0)
    smk = sqrt(mpf(m) * k)
    t8 = sqrt(d) + sqrt(2 * log(8 * n / alpha))
    t2 = sqrt(d) + sqrt(2 * log(2 * n / alpha))
    c = LT2 * (smk - t8) ** 2 - 4 * LT2 * smk * t8
    rho_min_w = LT2 * (smk - t8) ** 2
    rho_max_w = LT2 * (smk + t8) ** 2
    gamma_w = lt * t2
    rho_min_ws = 4 * LT2 * smk * t8
    gamma_ws = lt * sqrt(smk * t2)
    sigma2 = 16 * m * LT2 ** 2 * log(4 / delta) ** 2 / eps ** 2
    ups = sqrt(32) * m * LT2 * log(4 / delta) * (4 * sqrt(d) + 2 * log(2 * n / alpha)) / eps
    gamma_g = sqrt(sigma2) * sqrt(m / ups) * t2
    vals = [eps, delta, n, d, alpha, m, k, eps0, delta0, premise, c,
            rho_min_w, rho_max_w, gamma_w, rho_min_ws, gamma_ws, sigma2, ups, gamma_g]
    return vals


HEADER = ["eps", "delta", "n", "d", "alpha", "m", "k", "eps0", "delta0", "k_premise",
          "shift_c", "wishart_rho_min", "wishart_rho_max", "wishart_gamma",
          "shifted_rho_min", "shifted_gamma", "sigma_noise_sq", "upsilon", "gaussian_gamma"]

GRID = [
    (1.0, 0.1, 2 ** 15, 5, 0.05),
    (1.0, 0.1, 200000, 5, 1 / 200000),
    (1.0, 0.1, 50000000, 5, 1 / 50000000),
    (0.5, 0.1, 100000, 4, 1e-5),
    (2.0, 0.05, 100000, 8, 1e-5),
    (0.1, 0.01, 1000, 2, 0.01),
    (0.25, 0.2, 4096, 3, 0.05),
    (5.0, 0.3, 1024, 10, 0.1),
    (1.5, 0.001, 65536, 16, 1 / 65536),
    (0.8, 0.02, 12345, 7, 0.02),
    (3.0, 0.15, 999, 6, 0.5),
    (1.0, 0.3, 2, 3, 0.25),
    (0.3, 0.05, 1000000, 32, 1e-6),
    (1.0, 1e-6, 200000, 5, 0.05),
    (10.0, 0.1, 8, 2, 0.1),
    (0.05, 0.1, 100, 5, 0.05),
    (1.2, 0.08, 777777, 12, 1e-3),
    (0.7, 0.25, 3000, 1, 0.2),
    (2.5, 0.005, 2 ** 20, 20, 2 ** -20),
    (0.9, 0.12, 54321, 9, 0.01),
]

if __name__ == "__main__":
    print("\t".join(HEADER))
    for g in GRID:
        print("\t".join(mp.nstr(v, 30) if not isinstance(v, int) else str(v) for v in row(*g)))
