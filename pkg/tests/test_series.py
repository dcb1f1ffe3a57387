import mpmath
import pytest

from dgreedy.series import polylog, power_tail, zeta


@pytest.mark.parametrize("s", [1.1, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 6.0, 12.0])
def test_zeta_matches_mpmath(s):
    assert zeta(s) == pytest.approx(float(mpmath.zeta(s)), rel=1e-12)


def test_zeta_two():
    assert zeta(2.0) == pytest.approx(mpmath.pi ** 2 / 6, rel=1e-14)


@pytest.mark.parametrize("start", [1, 2, 7, 31, 32, 100, 5000])
def test_power_tail_is_hurwitz_zeta(start):
    assert power_tail(3.5, start) == pytest.approx(float(mpmath.zeta(3.5, start)), rel=1e-12)


def test_power_tail_rejects_divergent():
    with pytest.raises(ValueError):
        power_tail(1.0, 1)


@pytest.mark.parametrize("s", [0.5, 1.0, 1.3, 2.0, 3.5])
@pytest.mark.parametrize("z", [0.0, 0.1, 0.5, 0.9, 0.99])
def test_polylog_matches_mpmath(s, z):
    assert polylog(s, z) == pytest.approx(float(mpmath.polylog(s, z)), rel=1e-12, abs=1e-300)


def test_polylog_domain():
    with pytest.raises(ValueError):
        polylog(2.0, 1.0)
