import math

import numpy as np
import pytest

from bric.exceptions import DomainError
from bric.funnel import FunnelSpec, beta, phi, phi_reciprocal, validate

PAPER = FunnelSpec.uniform(2, 0.5, 0.5)


def test_reciprocal_examples():
    assert phi_reciprocal(PAPER, 0, 0.0) == 0.0
    assert phi_reciprocal(PAPER, 0, 1.0) == pytest.approx(0.9037255237552121, rel=1e-14)
    assert phi_reciprocal(PAPER, 1, 100.0) == pytest.approx(2.0, abs=1e-6)
    with pytest.raises(DomainError):
        phi_reciprocal(PAPER, 0, -1e-3)


def test_reciprocal_increasing():
    t = np.linspace(0, 30, 2001)
    psi = np.array([phi_reciprocal(PAPER, 0, v) for v in t])
    assert np.all(np.diff(psi) > 0)


def test_beta_examples():
    b0 = beta(PAPER, 0.0)
    assert np.array_equal(b0, [1.0, 1.0])
    np.testing.assert_allclose(beta(PAPER, 1.0), 1.347857493315459, rtol=1e-14)
    np.testing.assert_allclose(beta(PAPER, 100.0), math.sqrt(5), rtol=1e-6)


def test_beta_nondecreasing():
    b = np.array([beta(PAPER, t)[0] for t in np.linspace(0, 50, 1001)])
    assert np.all(np.diff(b) >= 0)


@pytest.mark.parametrize("c,f", [(0.5, 0.5), (2.0, 0.05), (0.1, 3.0)])
def test_reciprocal_consistent_with_direct_phi(c, f):
    spec = FunnelSpec((c,), (f,))
    for t in np.logspace(-6, 2, 300):
        ph = phi(spec, 0, t)
        assert phi_reciprocal(spec, 0, t) * ph == pytest.approx(1.0, rel=1e-12)
        assert beta(spec, t)[0] == pytest.approx(math.sqrt(1 / ph**2 + 1), rel=1e-12)


def test_validate():
    assert validate(PAPER) == []
    assert any("floor must be positive" in p for p in validate(FunnelSpec((0.5,), (0.0,))))
    assert any("rate must be positive" in p for p in validate(FunnelSpec((-1.0,), (0.5,))))
    assert validate(FunnelSpec((0.5, 0.5), (0.5,)))


def test_validate_cap_is_configurable():
    tight = FunnelSpec.uniform(1, 0.5, 1e-6)
    assert validate(tight)
    assert validate(FunnelSpec.uniform(1, 0.5, 1e-6, cap=1e12)) == []
