"""End-to-end acceptance run: every criterion at its stated tolerance.

The full suite takes a couple of minutes (it includes 10^7-step simulations
and 1e5-step training runs); results are computed once per session and each
criterion is asserted as its own test with a printed pass/fail line.
"""

import pytest

from eco import validation

EXPECTED = [
    "exact_equivalence",
    "virtual_dynamics",
    "stationary_vs_monte_carlo",
    "naive_inverse_lr_law",
    "eco_noise_floor",
    "momentum_bound_stochastic",
    "momentum_bound_deterministic",
    "descent_inequality",
    "convergence_envelope",
    "regime_ordering_mlp",
    "memory_accounting",
    "quantizer_suite",
]


@pytest.fixture(scope="session")
def results():
    collected = {}

    def progress(r):
        print(f"\n  {r.summary()}")

    for result in validation.run_all(progress=progress):
        collected[result.name] = result
    return collected


def test_all_criteria_present(results):
    assert list(results) == EXPECTED


@pytest.mark.parametrize("name", EXPECTED)
def test_criterion(results, name):
    result = results[name]
    print(result.summary())
    assert result.passed, f"{name} failed: {result.detail} | measured={result.measured}"


def test_runtime_limits(results):
    assert results["exact_equivalence"].seconds < 5.0
    assert results["virtual_dynamics"].seconds < 5.0
    assert results["stationary_vs_monte_carlo"].seconds < 60.0
