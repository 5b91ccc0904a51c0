#!/usr/bin/env python3

# This script is an example use case for the library. It follows the
# tutorial in the html documentation: a weak measurement of the Zeeman
# splitting of Rb87 is simulated and analyzed, and the result compared with
# the exact theory.

import math

# 1. Describe the atom and the postselection:

from weakbeam.types import PulseShape, VSystemParams
from weakbeam.util import angular_from_cyclic, rate_from_lifetime_ns

params = VSystemParams(
    gamma=rate_from_lifetime_ns(26),
    delta=angular_from_cyclic(20e3),
    epsilon=0.2,
    pulse=PulseShape.square(4.2e-9),
)

print("System parameters:")
print("==================")
print(f"Γ = {params.gamma:.6g} /s, Δ = {params.delta:.6g} rad/s, ε = {params.epsilon}")
print()

# 2. Calculate what the theory predicts:

from weakbeam.pointer import acceptance_probability, approx_decay_rate
from weakbeam.pointer import mean_arrival_time, mean_shift, weak_value_of_params

weak_value = weak_value_of_params(params)
approx = approx_decay_rate(params)

print("Theoretical predictions:")
print("========================")
print(f"Weak value: {complex(weak_value):.4f}")
print(f"Postselection acceptance: {acceptance_probability(params):.4%}")
print(f"Mean arrival time: {1e9*mean_arrival_time(params):.4f} ns (natural {1e9/params.gamma:.4f} ns)")
print(f"First-order shift: {1e9*mean_shift(params):.4f} ns")
print(f"First-order Γ_eff: {approx.gamma_eff:.6g} /s (valid: {approx.valid})")
print()

# 3. Simulate the experiment with a realistic detector:

from weakbeam.emission import DetectorConfig, SimConfig, run_simulation
from weakbeam.events import EventStream, Tag

detector = DetectorConfig(dead_time=52e-9, afterpulse_prob=0.02, bin_width=1e-10)


def simulate(epsilon: float, seed: int) -> EventStream:
    return run_simulation(SimConfig(
        VSystemParams(params.gamma, params.delta, epsilon, params.pulse),
        n_shots=2000000,
        rep_period=1e-6,
        detect_prob=0.1,
        background_fraction=0.12,
        rng_seed=seed,
        detector=detector,
    ))


events = simulate(params.epsilon, 0)
ref_before = simulate(0, 1)
ref_after = simulate(0, 2)

print("Simulated detector events:")
print("==========================")
print(f"{len(events)} events, of which {events.count_tag(Tag.AFTERPULSE)} afterpulses")
print()

# 4. Run the data reduction:

from weakbeam.pipeline import AnalysisOptions, analyze

options = AnalysisOptions(
    window=(0, 520e-9),
    afterpulse_cutoff=115e-9,
    subtract_background=True,
    reference_tolerance=0.2,
)
result = analyze(events, params, options, ref_before, ref_after).result

print("Analysis result:")
print("================")
print(f"Mean arrival time: {result.mean_arrival.ns():.4f} ± {1e9*result.mean_arrival_se:.4f} ns")
print(f"Γ_eff over the tail: {result.gamma_eff:.6g} ± {result.gamma_eff_se:.2g} /s")
print(f"Reduced χ² of the exact model: {result.chi2_reduced:.4f}")
print(f"Background fraction in the references: {result.background_fraction:.4f}")
print()

# 5. Compare with the sensitivity bound:

from weakbeam.sensitivity import crlb_sensitivity

deviation = (float(result.mean_arrival) - mean_arrival_time(params))/result.mean_arrival_se
print("Comparison:")
print("===========")
print(f"Deviation from theory: {deviation:+.2f} standard errors")
print(f"Bound on sensitivity at 10^5 photons/s: {crlb_sensitivity(params, 1e5):.4g} Hz/√Hz")
