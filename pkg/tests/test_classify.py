import csv

import numpy as np
import pytest

from ckn_branches import classify as cl
from ckn_branches.analytic import ParameterError, k_star_ckn, lambda_fs, vartheta


def test_asymptotic_constant_theta_one_is_sp():
    from ckn_branches.spectral import ground_state_shoot
    gs = ground_state_shoot(2.8, 5)
    assert cl.asymptotic_constant(1.0, 2.8, 5, gs.K_GN) == pytest.approx(gs.S_p, rel=1e-10)


def test_asymptote_law_and_guard():
    K = cl.k_gn(2.8, 5)
    J = cl.asymptote(0.8, 2.8, 5, K)
    th = vartheta(2.8, 5)
    lam = np.array([1.0, 10.0])
    assert J(10.0) / J(1.0) == pytest.approx(10 ** (0.8 - th))
    with pytest.raises(ParameterError):
        cl.asymptote(th, 2.8, 5, K)


@pytest.mark.parametrize("theta", [0.72, 0.8, 0.95, 1.0])
def test_asymptote_matches_mu_limit(theta):
    # on the limiting line Lambda = (theta - vartheta)/(1 - vartheta) mu both laws give the same J
    K = cl.k_gn(2.8, 5)
    th = vartheta(2.8, 5)
    mu = 37.0
    lam = (theta - th) / (1 - th) * mu
    assert cl.asymptote(theta, 2.8, 5, K)(lam) == pytest.approx(
        cl.asymptotic_constant(theta, 2.8, 5, K) * mu ** (theta - th), rel=1e-12)
    assert cl.asymptote_prefactor(theta, 2.8, 5, K) * lam ** (theta - th) == pytest.approx(
        float(cl.asymptote(theta, 2.8, 5, K)(lam)), rel=1e-14)


def test_scenarios():
    two = cl.classify_scenario(2.8, 5)
    assert two.scenario == "two" and not two.tie
    assert two.K_GN > two.K_star_at_FS
    assert two.Lambda_GN_star < lambda_fs(2.8, vartheta(2.8, 5), 5)
    assert float(k_star_ckn(vartheta(2.8, 5), two.Lambda_GN_star, 2.8)) == pytest.approx(two.K_GN, rel=1e-9)
    one = cl.classify_scenario(3.15, 5)
    assert one.scenario == "one" and one.Lambda_GN_star is None


def test_frozen_constants():
    assert cl.k_gn(2.8, 5) == pytest.approx(0.3297683, rel=1e-6)
    assert cl.k_star_at_fs(2.8, 5) == pytest.approx(0.3249379, rel=1e-6)


def test_classify_rejects_critical_p():
    with pytest.raises(ParameterError):
        cl.classify_scenario(10 / 3, 5)


def test_comparison_csv(tmp_path):
    path = cl.write_comparison_csv(2.8, 5, tmp_path / "cmp.csv", n=20)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["Lambda", "K_star_CKN", "K_GN"]
    ks = [float(r[1]) for r in rows[1:]]
    assert len(ks) == 20 and all(b < a for a, b in zip(ks, ks[1:]))


def test_report_json_round_trip():
    import json
    data = json.loads(cl.classify_scenario(2.8, 5).to_json())
    assert data["scenario"] == "two" and data["theta2"] == pytest.approx(0.7364088, rel=1e-6)
