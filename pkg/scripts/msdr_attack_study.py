#!/usr/bin/env python3
"""Attack-rate sweep on the MS/DR model.

Sweeps a Poisson attack process against the main system and reports how
service availability and MTTF degrade, comparing the concurrent-repair and
single-crew policies, with a Monte Carlo cross-check at one point.

Usage: python scripts/msdr_attack_study.py [--seed N] [--trials N]
"""

import argparse

from securakit import markov, montecarlo, securability
from securakit.montecarlo import MonteCarloConfig
from securakit.securability import MsDrRates, ThreatProfile, build_msdr


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--trials", type=int, default=50_000)
    args = ap.parse_args()

    base = MsDrRates(lambda_ms=0.01, lambda_dr=0.01, mu_ms=0.1, mu_dr=0.1)
    attack_rates = [0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05]

    print(f"{'attack rate':>12} {'avail (dual)':>14} {'avail (1 crew)':>15} {'mttf':>10}")
    for rate in attack_rates:
        lam_ms = base.lambda_ms + rate
        rates = MsDrRates(lam_ms, base.lambda_dr, base.mu_ms, base.mu_dr)
        dual = securability.service_availability(rates)
        single = securability.service_availability(rates, single_repair_crew=True)
        mttf = markov.mttf_absorbing(build_msdr(rates), 0)
        print(f"{rate:>12.3f} {dual:>14.8f} {single:>15.8f} {mttf:>10.1f}")

    threat = ThreatProfile(attack_rate=0.005, applies_to="ms")
    print(f"\nmean time to attack at rate {threat.attack_rate}: {securability.mtta(threat):.0f}")

    rates = MsDrRates(base.lambda_ms + threat.attack_rate, base.lambda_dr, base.mu_ms, base.mu_dr)
    chain = build_msdr(rates)
    cfg = MonteCarloConfig(n_trials=args.trials, horizon=1.0, seed=args.seed)
    est = montecarlo.estimate_mttf(chain, 0, cfg)
    analytic = markov.mttf_absorbing(chain, 0)
    print(
        f"mttf cross-check under attack: analytic {analytic:.1f}, "
        f"simulated {est.value:.1f} +- {est.std_error:.1f} ({args.trials} trials, seed {args.seed})"
    )


if __name__ == "__main__":
    main()
