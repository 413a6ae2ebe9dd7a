"""Smoke test for the Python extension.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""

import cmath
import math

import numpy as np
from scipy import integrate, special

import lora_relay_lab as lrl


def check(label, ok):
    print(f"{'ok' if ok else 'FAIL'}  {label}")
    return ok


def rayleigh_branch_cdf(r, g1, g2):
    # closed form of the AF branch CDF for unit-order fading on both hops
    b = math.sqrt(4.0 * r * (r + 1.0) / (g1 * g2))
    return 1.0 - b * math.exp(-r * (1.0 / g1 + 1.0 / g2)) * special.k1(b)


def main():
    results = []
    modem = lrl.ModemConfig(8)

    x = np.array(modem.modulate(37))
    results.append(check("unit-energy chirp", abs(np.vdot(x, x).real - 1.0) < 1e-12))
    n = modem.samples_per_symbol
    x0 = np.array(modem.modulate(0))
    shifted = np.roll(x0, -37)
    results.append(check("symbol is a cyclic shift", np.max(np.abs(shifted - x)) < 1e-12))
    sym, mags = modem.detect(list(x * cmath.exp(0.7j)))
    results.append(check("noiseless detection", sym == 37 and len(mags) == n))

    p = lrl.BranchParams(1.0, 1.0, 12.0, 30.0)
    worst = max(abs(p.cdf(r) - rayleigh_branch_cdf(r, 12.0, 30.0)) for r in (0.1, 1.0, 5.0, 20.0))
    results.append(check(f"branch CDF vs Bessel form ({worst:.1e})", worst < 1e-9))

    v = math.sqrt(2.0 * sum(1.0 / k for k in range(1, 2**7)))
    gamma = 15.0
    oracle = 0.5 * 0.5 * special.erfc((math.sqrt(2.0 * gamma) - v) / math.sqrt(2.0))
    ours = lrl.conditional_ber(gamma, 7)
    results.append(check(f"conditional BER {ours:.4e} vs {oracle:.4e}", abs(ours / oracle - 1.0) < 1e-9))

    branches = [lrl.BranchParams(1.0, 1.0, 100.0, 100.0)] * 2
    pdf_mass, _ = integrate.quad(lambda r: lrl.max_pdf(r, branches), 0.0, np.inf, limit=200)
    results.append(check(f"max pdf mass {pdf_mass:.8f}", abs(pdf_mass - 1.0) < 1e-4))
    results.append(check("diversity order", lrl.diversity_order(branches) == 2.0))

    exact = lrl.analytical_ber(branches, 7)
    asym = lrl.asymptotic_ber(branches, 7)
    results.append(check(f"asymptote brackets exact ({asym / exact:.3f})", 0.5 < asym / exact < 2.0))

    plateau = lrl.throughput(0.0, 20, lrl.ModemConfig(7), relay=True)
    results.append(check("relay plateau", abs(plateau - 7 * 125e3 / 128 / 2) < 1e-9))

    scenario = lrl.Scenario("n_relays = 2\nmode = snr\n")
    est = scenario.estimate_ber(80.0, 200_000, seed=4)
    analytic = lrl.analytical_ber(scenario.branches(80.0), scenario.sf)
    z = (est["point_estimate"] - analytic) / est["stderr"]
    results.append(check(f"Monte Carlo BER within 4 se of analysis (z={z:+.2f})", abs(z) < 4.0))

    csv = scenario.throughput_csv([60.0, 90.0])
    results.append(check("throughput CSV header", csv.splitlines()[0].startswith("snr_db,throughput_conv")))
    results.append(check("self-test", "SF7: all 128 symbols pass" in lrl.modem_selftest(7, 7)))

    try:
        lrl.ModemConfig(5)
        results.append(check("invalid SF rejected", False))
    except ValueError:
        results.append(check("invalid SF rejected", True))

    if not all(results):
        raise SystemExit(1)
    print("python smoke test passed")


if __name__ == "__main__":
    main()
