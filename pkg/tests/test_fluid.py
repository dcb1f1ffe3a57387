import json
import math

import numpy as np
import pytest

from dgreedy.errors import InvalidInputs
from dgreedy.fluid import (
    Population,
    fluid_curves,
    ode_oracle,
    simulate_phase1,
    simulate_phase2,
    trajectory_csv,
    untouched_fractions,
    urn_simulate,
    write_trajectory,
)
from dgreedy.graphgen import MultiGraph, sample_cm, sample_degrees
from dgreedy.rng import stream
from dgreedy.spectra import apply_m1, poisson_distribution, powerlaw_distribution

P1 = poisson_distribution(1.0)


@pytest.fixture(scope="module")
def poisson_runs():
    """Both phases for Poisson(1) at n = 1e5 over 20 trials."""
    runs = []
    for t in range(20):
        deg = sample_degrees(P1, 100_000, stream(2, t, "degrees"))
        one = simulate_phase1(deg, stream(2, t, "fluid"))
        two = simulate_phase2(one.end, stream(2, t, "fluid2"))
        runs.append((one, two))
    return runs


# --- closed forms ------------------------------------------------------------

def test_curve_anchors():
    c = fluid_curves(dist=P1)
    assert c.u1(0.0) == pytest.approx(c.lam)
    assert c.a(0.0) == pytest.approx(c.p1)
    assert abs(c.a(c.t1)) < 1e-12
    assert c.u1(c.t1) == pytest.approx(c.q ** 2 * c.lam, abs=1e-12)
    assert abs(c.b(c.t2)) < 1e-12
    assert c.t1 == pytest.approx(-math.log(1 - math.exp(-1)), abs=1e-8)


def test_log1p_expression_value():
    # the logarithmic expression evaluates to 0.3133 for Poisson(1), but it
    # is not where a vanishes; the stopping time is -log Q (see t1)
    c = fluid_curves(dist=P1)
    assert math.log1p(c.p1 / c.lam) == pytest.approx(0.3133, abs=1e-4)
    assert abs(c.a(math.log1p(c.p1 / c.lam))) > 0.05


def test_curves_without_distribution():
    c = fluid_curves(2.0, 0.5)
    assert c.q == 0.75 and c.t2 is None
    with pytest.raises(InvalidInputs):
        c.b(0.1)


@pytest.mark.parametrize("lam,p1", [(1.0, 1.5), (0.0, 0.0), (-1.0, 0.1), (1.0, 0.0)])
def test_curve_input_errors(lam, p1):
    with pytest.raises(InvalidInputs):
        fluid_curves(lam, p1)


@pytest.mark.parametrize("dist", [P1, poisson_distribution(2.0), powerlaw_distribution(3.5)])
def test_curves_satisfy_their_drifts(dist):
    c = fluid_curves(dist=dist)
    h = 1e-5
    for t in np.linspace(0.0, c.t1, 7)[:-1] + 2 * h:
        du = (c.u1(t + h) - c.u1(t - h)) / (2 * h)
        da = (c.a(t + h) - c.a(t - h)) / (2 * h)
        assert du == pytest.approx(-2 * c.u1(t), abs=1e-6)
        assert da == pytest.approx(-(c.a(t) + c.u1(t)), abs=1e-6)
    for t in np.linspace(0.0, c.t2, 7)[:-1] + 2 * h:
        db = (c.b(t + h) - c.b(t - h)) / (2 * h)
        assert db == pytest.approx(-(c.b(t) + c.u2(t)), abs=1e-6)
        dmu = (c.mu2(t + h) - c.mu2(t - h)) / (2 * h)
        mu = c.mu2(t)
        k = np.arange(mu.size)
        rhs = -k * mu
        rhs[:-1] += k[1:] * mu[1:]
        assert np.max(np.abs(dmu - rhs)) < 1e-6


def test_u_monotone():
    c = fluid_curves(dist=P1)
    t = np.linspace(0, 3, 100)
    assert np.all(np.diff(c.u1(t)) < 0) and np.all(np.diff(c.u2(t)) < 0)


# --- ODE oracle ----------------------------------------------------------------

def test_ode_trivial_cases():
    mu = np.array([0.1, 0.2, 0.3])
    assert np.array_equal(ode_oracle(mu, 0.0), mu)
    out = ode_oracle([0.0, 0.7], 1.3, step=1e-3)
    assert out[1] == pytest.approx(0.7 * math.exp(-1.3), abs=1e-10)
    with pytest.raises(InvalidInputs):
        ode_oracle(mu, 1.0, step=1e-2)


@pytest.mark.parametrize("dist", [P1, poisson_distribution(1.3)])
def test_ode_matches_thinning(dist):
    c = fluid_curves(dist=dist)
    assert np.max(np.abs(ode_oracle(c.survivors, c.t2) - c.mu2(c.t2))) < 1e-8


# --- simulators ------------------------------------------------------------------

def test_phase1_two_leaves():
    tr = simulate_phase1([1, 1], 0)
    assert tr.secondary[0] == 1.0 and tr.secondary[-1] == 0.0
    assert tr.u[-1] == 0.0 and tr.end.blocked == 0
    assert tr.stop_time > 0


def test_phase1_without_leaves():
    tr = simulate_phase1([2, 2, 0], 0)
    assert tr.stop_time == 0.0 and tr.set_aside == 1
    assert tr.end.mu.tolist() == [0, 0, 2]


def test_phase2_nothing_blocked():
    tr = simulate_phase2(Population(n=5, blocked=0, mu=np.array([0, 0, 3])), 0)
    assert tr.times.size == 0 and tr.stop_time == 0.0


def test_simulation_invariants(poisson_runs):
    for one, two in poisson_runs[:5]:
        for tr in (one, two):
            assert np.all(np.diff(tr.times) > 0)
            assert np.all(np.diff(tr.u) <= 0)
            U = np.rint(tr.u * tr.n).astype(int)
            assert np.all(U % 2 == 0)  # every event removes two half-edges
            assert np.all(np.diff(tr.secondary) <= 0)
        assert np.all(one.u - one.secondary >= 0)
        assert one.secondary[-1] == 0 and two.secondary[-1] == 0


def test_phase1_tracks_fluid_limit(poisson_runs):
    c = fluid_curves(dist=P1)
    sup_u = [one.sup_deviation(c.u1) for one, _ in poisson_runs]
    sup_a = [one.sup_deviation(c.a, "secondary") for one, _ in poisson_runs]
    t1 = [one.stop_time for one, _ in poisson_runs]
    u_end = [one.end.unpaired / one.n for one, _ in poisson_runs]
    assert np.median(sup_u) <= 0.02 and np.median(sup_a) <= 0.02
    assert abs(np.median(t1) - c.t1) <= 0.02
    assert abs(np.median(u_end) - c.q ** 2 * c.lam) <= 0.02


def test_phase2_tracks_fluid_limit(poisson_runs):
    c = fluid_curves(dist=P1)
    sup_b = [two.sup_deviation(c.b, "secondary") for _, two in poisson_runs]
    t2 = [two.stop_time for _, two in poisson_runs]
    assert np.median(sup_b) <= 0.02
    assert abs(np.median(t2) - c.t2) <= 0.02


def test_phase2_output_matches_m1(poisson_runs):
    out, _ = apply_m1(P1)
    pooled = sum(two.end.mu[:7].astype(float) for _, two in poisson_runs)
    total = sum(two.end.mu.sum() for _, two in poisson_runs)
    assert np.max(np.abs(pooled / total - out.mass[:7])) <= 0.01


def test_untouched_fractions_examples(rng):
    assert untouched_fractions(MultiGraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])) == {2: 1.0}
    assert untouched_fractions(MultiGraph.from_edges(2, [(0, 1)])) == {}
    g = MultiGraph.from_edges(5, [(0, 1), (0, 2), (2, 3), (3, 4), (4, 2)])
    assert untouched_fractions(g) == {2: pytest.approx(2 / 3), 3: 1.0}


# --- urn ------------------------------------------------------------------------

def test_urn_examples():
    r = urn_simulate(2, 2, 0)
    assert r.removed_red.tolist() == [0, 2] and r.t_half == 1
    assert urn_simulate(2, 0, 0).t_half == 0


@pytest.mark.parametrize("n,k", [(100, 90), (101, 101), (7, 3), (1, 1), (50, 0)])
def test_urn_invariants(n, k):
    for seed in range(20):
        r = urn_simulate(n, k, seed)
        inc = np.diff(r.removed_red)
        assert np.all((inc == 1) | (inc == 2))
        assert r.removed_red[-1] == k
        balls_left = n - 2 * np.arange(r.steps + 1)
        assert np.all(k - r.removed_red[:-1] <= balls_left[:-1])
        assert r.t_half is not None


def test_urn_rejects_bad_inputs():
    with pytest.raises(InvalidInputs):
        urn_simulate(3, 4, 0)


# --- output ---------------------------------------------------------------------

def test_trajectory_files(tmp_path, poisson_runs):
    one, two = poisson_runs[0]
    c = fluid_curves(dist=P1)
    sidecar = write_trajectory(two, tmp_path / "p2.csv", c)
    lines = (tmp_path / "p2.csv").read_text().splitlines()
    K = two.mu.shape[1] - 1
    assert lines[0] == "t,u,a_or_b," + ",".join(f"mu_{k}" for k in range(K + 1))
    assert len(lines) == two.times.size + 1
    meta = json.loads(sidecar.read_text())
    assert set(meta) == {"n", "seed", "lambda", "p1", "T1_or_T2_empirical", "T1_or_T2_closed_form"}
    assert meta["T1_or_T2_closed_form"] == c.t2
    assert trajectory_csv(one).startswith("t,u,a_or_b,mu_0,mu_1")
