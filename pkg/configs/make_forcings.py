"""Regenerate the example configurations with seeded random forcings.

Each forcing uses modes 1..min(m, 4) with Gaussian coefficients damped by
1/k, rescaled so that E(f) / nu_lo^2 equals the requested E0.
"""
import math
import pathlib

import numpy as np

ROWS = {
    # name: (nu_lo, nu_hi, alpha, E0, epsilon, m)
    "row1": ("10", "10.1", 7.0, 0.5, "0.001", 5),
    "row2": ("4", "4.1", 2.0, 0.5, "0.001", 7),
    "row4": ("1", "1", 0.2, 0.25, "0.0001", 20),
    "row5": ("0.5", "0.5", 0.05, 0.08, "0.0001", 20),
    "row6": ("0.15", "0.15", 0.0, 0.22, "0", 40),
}


def forcing(seed, nu_lo, E0, m):
    rng = np.random.default_rng(seed)
    K = min(m, 4)
    k = np.arange(1, K + 1)
    f = (rng.normal(size=K) + 1j * rng.normal(size=K)) / k
    energy = 2.0 * np.sum(np.abs(f) ** 2)
    return f * math.sqrt(E0 * nu_lo ** 2 / energy)


def write(name, row, seed):
    nu_lo, nu_hi, alpha, E0, eps, m = row
    f = forcing(seed, float(nu_lo), E0, m)
    nu = nu_lo if nu_lo == nu_hi else f"{nu_lo}, {nu_hi}"
    lines = [f"# regenerated forcing, seed {seed}, E(f)/nu^2 = {E0}",
             f"nu = {nu}", f"alpha = {alpha!r}", f"m = {m}", f"epsilon = {eps}",
             "order = 6", "h = 0.005"]
    lines += [f"f[{k}] = {c.real:.9f}, {c.imag:.9f}" for k, c in enumerate(f, 1)]
    path = pathlib.Path(__file__).with_name(f"{name}.cfg")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    for i, (name, row) in enumerate(ROWS.items()):
        write(name, row, seed=2024 + i)
