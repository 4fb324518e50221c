"""Shared fixtures: the anchor models and independently computed reference data.

Reference eigendata comes from numpy's companion-matrix eigensolver (a
different algorithm than the bisection classifier under test) and is polished
against the exact integer characteristic polynomial.
"""

import numpy as np
import pytest

from phlab.dynamics import MapSpec, sine_field

L3_ROWS = ((0, 1, 0), (0, 0, 1), (-1, 0, 3))
CAT_ROWS = ((2, 1), (1, 1))


def _cubic_roots_oracle():
    # roots of x^3 - 3x^2 + 1 via numpy.roots, Newton-polished
    r = np.sort(np.roots([1.0, -3.0, 0.0, 1.0]).real)
    for _ in range(60):
        r = r - (r**3 - 3 * r**2 + 1) / (3 * r**2 - 6 * r)
    return r  # lam_s, lam_c, lam_u (sorted ascending = sorted by modulus here)


class L3Reference:
    """Closed-form reference values for the anchor automorphism."""

    def __init__(self):
        lam_s, lam_c, lam_u = _cubic_roots_oracle()
        self.lam_s, self.lam_c, self.lam_u = float(lam_s), float(lam_c), float(lam_u)
        self.log_s = float(np.log(abs(lam_s)))
        self.log_c = float(np.log(abs(lam_c)))
        self.log_u = float(np.log(abs(lam_u)))
        self.theta_s = (self.log_c - self.log_s) / self.log_u
        self.theta_c = 1.0 - self.log_c / self.log_s
        self.kappa = self.log_s / self.log_c

    def unit_eigvec(self, lam: float) -> np.ndarray:
        v = np.array([1.0, lam, lam * lam])
        return v / np.linalg.norm(v)

    @property
    def e_s(self):
        return self.unit_eigvec(self.lam_s)

    @property
    def e_c(self):
        return self.unit_eigvec(self.lam_c)

    @property
    def e_u(self):
        return self.unit_eigvec(self.lam_u)


@pytest.fixture(scope="session")
def ref():
    return L3Reference()


@pytest.fixture(scope="session")
def l3():
    return MapSpec.make_linear(L3_ROWS)


@pytest.fixture(scope="session")
def cat():
    return MapSpec.make_linear(CAT_ROWS)


def _perturbed(direction_vec):
    return MapSpec.make_perturbed(L3_ROWS, 0.05, sine_field(), direction_vec)


@pytest.fixture(scope="session")
def pert_u(ref):
    """x -> L3 x + 0.05 sin(2 pi x1)/(2 pi) e_u: shifts only u-multipliers."""
    return _perturbed(ref.e_u)


@pytest.fixture(scope="session")
def pert_s(ref):
    """Stable-direction analogue; its rank-one Jacobians leave c- and
    u-multipliers and the stable bundle itself untouched."""
    return _perturbed(ref.e_s)


@pytest.fixture(scope="session")
def pert_c(ref):
    """Center-direction perturbation: the one that genuinely changes the
    c-periodic data, breaking su joint integrability."""
    return _perturbed(ref.e_c)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, printed after the run."""
    lines = []
    for status in ("passed", "failed"):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance" in rep.nodeid:
                name = rep.nodeid.split("::")[-1]
                lines.append((name, status.upper()))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{status:>6}  {name}")
