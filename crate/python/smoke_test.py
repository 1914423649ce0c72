"""Smoke test for the uscx extension module.

Build it first, either with `maturin develop -m crates/python/Cargo.toml`
or by copying `target/release/libuscx.so` (built with
`--features extension-module`) to `uscx.so` somewhere on PYTHONPATH.
"""

import math

import uscx

SEED = 7


def check_gev():
    for gamma in (-0.5, 0.0, 0.3):
        for p in (0.1, 0.5, 0.9):
            x = uscx.gev_quantile(p, gamma, mu=1.0, sigma=2.0)
            assert abs(uscx.gev_cdf(x, gamma, mu=1.0, sigma=2.0) - p) < 1e-12
    q = uscx.gev_quantile(math.exp(-1.0), 0.2, 0.5, 1.5)
    q1 = uscx.gev_quantile(0.1, 0.2, 0.5, 1.5)
    q2 = uscx.gev_quantile(0.9, 0.2, 0.5, 1.5)
    gamma, mu, sigma = uscx.gev_fit(q, q1, q2, 0.1, 0.9)
    assert abs(gamma - 0.2) < 1e-8 and abs(mu - 0.5) < 1e-8 and abs(sigma - 1.5) < 1e-8


def check_simulator():
    values, atoms = uscx.simulate(SEED, model="storm", radius=0.1, resolution=51)
    assert len(values) == 51 and atoms > 0
    assert all(v > 0 for v in values)
    again, _ = uscx.simulate(SEED, model="storm", radius=0.1, resolution=51)
    assert values == again

    exact, emp, half = uscx.capacity(0.2, 0.4, 2.0, 20_000, SEED)
    assert abs(exact - emp) < 4 * half + 1e-3

    report = uscx.maxstab_check(2, [(0.0, 0.5, 2.0), (0.3, 0.6, 5.0)], 20_000, SEED)
    assert report["n"] == 2 and len(report["rows"]) == 2
    assert all(abs(r["z_score"]) < 4 for r in report["rows"])


def check_gallery_and_hypoconv():
    est, half = uscx.gallery_nonusc("lsc_margins", 20_000, SEED)
    assert abs(est - 2 / 3) < 4 * half
    est, _ = uscx.gallery_nonusc("b_not_necessary", 5_000, SEED)
    assert est == 0.0

    n = 41
    grid = [i / (n - 1) for i in range(n)]
    spike = lambda c: [1.0 if abs(s - c) < 1e-9 else 0.0 for s in grid]
    seq = [spike(grid[k]) for k in (10, 20, 30, 10, 20, 30)]
    assert uscx.hypoconv([[0.5] * n] * 4, [0.5] * n) == "pass"
    assert uscx.hypoconv(seq, [0.0] * n) != "pass"


if __name__ == "__main__":
    check_gev()
    check_simulator()
    check_gallery_and_hypoconv()
    print("smoke test passed")
