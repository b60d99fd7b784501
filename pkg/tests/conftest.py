"""Shared test helpers and the acceptance-criterion report."""

import numpy as np

from pulsegabor.filters import IntegerMask

# one (name, status, details) entry per acceptance criterion; printed
# as a summary block so the pass/fail line per criterion survives
# output capture
ACCEPTANCE_RESULTS = []


def record_criterion(name: str, ok: bool, details: str) -> None:
    ACCEPTANCE_RESULTS.append((name, "PASS" if ok else "FAIL", details))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, details in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{status}  {name}  {details}")


def random_zero_sum_mask(rng, max_side=9, max_coeff=8):
    """Nonzero integer mask with coefficients summing to zero."""
    while True:
        h = int(rng.integers(1, max_side + 1))
        w = int(rng.integers(1, max_side + 1))
        coeffs = rng.integers(-max_coeff, max_coeff + 1, size=(h, w))
        total = int(coeffs.sum())
        # walk the excess back to zero without leaving the coefficient range
        flat = coeffs.ravel()
        i = 0
        while total != 0 and i < flat.size:
            step = int(np.clip(-total, -max_coeff - flat[i], max_coeff - flat[i]))
            flat[i] += step
            total += step
            i += 1
        if total == 0 and np.any(flat > 0):
            return IntegerMask(coeffs)
