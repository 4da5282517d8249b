import numpy as np
import pytest
from scipy import stats

from tengraph.sampling import (
    GraphSpec,
    ScenarioConfig,
    chain_precision,
    gen_scenario,
    graph_precisions,
    make_auxiliary,
    max_column_support,
    nearest_neighbor_precision,
    rate_anchor,
    sample_tensor_normal,
)
from tengraph.tensor_ops import kron_all, vec


def test_chain_precision_structure():
    rng = np.random.default_rng(11)
    for p in (2, 5, 12):
        om = chain_precision(p, rng)
        # the diagonal is constant: 1 plus whatever uniform shift keeps the
        # band matrix positive definite (none is needed at p = 2)
        diag = np.diag(om)
        np.testing.assert_allclose(diag, diag[0], atol=1e-12)
        assert diag[0] >= 1.0
        if p == 2:
            assert diag[0] == 1.0
        band = np.diag(om, 1)
        assert np.all(band >= np.exp(-0.5) - 1e-12)
        assert np.all(band <= np.exp(-0.25) + 1e-12)
        np.testing.assert_array_equal(om, om.T)
        # nothing beyond the first off-diagonal
        for k in range(2, p):
            np.testing.assert_array_equal(np.diag(om, k), np.zeros(p - k))
        assert np.linalg.eigvalsh(om)[0] >= 0.2 - 1e-8


def test_nearest_neighbor_precision_structure():
    rng = np.random.default_rng(13)
    for p in (5, 10, 15):
        om = nearest_neighbor_precision(p, rng)
        np.testing.assert_array_equal(om, om.T)
        assert np.linalg.eigvalsh(om)[0] >= 0.2 - 1e-8
        off = om - np.diag(np.diag(om))
        nz = np.abs(off[off != 0])
        assert np.all(nz >= 0.5) and np.all(nz <= 1.0)
        row_deg = (off != 0).sum(axis=1)
        assert np.all(row_deg >= 4) and np.all(row_deg <= p - 1)


def test_graph_precisions_dispatch_and_determinism():
    spec = GraphSpec("chain", (6, 4), seed=21)
    a = graph_precisions(spec)
    b = graph_precisions(spec)
    assert len(a) == 2 and a[0].shape == (6, 6) and a[1].shape == (4, 4)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    with pytest.raises(ValueError):
        graph_precisions(GraphSpec("ring", (5, 5), seed=0))


def test_sampler_identity_precision_is_standard_normal():
    rng = np.random.default_rng(17)
    xs = sample_tensor_normal([np.eye(4), np.eye(5)], 500, rng)
    pooled = np.asarray(xs).ravel()
    assert pooled.size == 10000
    stat = stats.kstest(pooled, "norm")
    assert stat.pvalue > 0.01


def test_sampler_mean_and_covariance_against_kron():
    rng = np.random.default_rng(19)
    om1 = chain_precision(3, rng)
    om2 = chain_precision(2, rng)
    sig = [np.linalg.inv(om1), np.linalg.inv(om2)]
    cov = kron_all([sig[1], sig[0]])

    n = 4000
    xs = sample_tensor_normal([om1, om2], n, np.random.default_rng(23))
    vs = np.stack([vec(x) for x in xs])
    # entrywise mean stays within 4 sd of its own sampling noise
    sd = np.sqrt(np.diag(cov) / n)
    assert np.all(np.abs(vs.mean(axis=0)) <= 4.0 * sd)
    emp = vs.T @ vs / n
    err = np.abs(emp - cov).max()
    assert err <= 0.1 * np.abs(cov).max()


def test_sampler_rejects_non_pd():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
    with pytest.raises(ValueError):
        sample_tensor_normal([bad], 3, np.random.default_rng(0))


def test_make_auxiliary_unperturbed_case():
    rng = np.random.default_rng(29)
    om = [chain_precision(5, rng), chain_precision(4, rng)]
    om = [m / np.linalg.norm(m) for m in om]
    sig = [np.linalg.inv(m) for m in om]
    aux = make_auxiliary(sig, 10, h0=0.3, prob_zero=1.0, rng=np.random.default_rng(31))
    for m in range(2):
        np.testing.assert_allclose(aux.sigma[m], sig[m], atol=1e-12)
        np.testing.assert_allclose(aux.delta[m], 0.0, atol=1e-10)


def test_make_auxiliary_identity_holds_exactly():
    """The realized divergence satisfies Omega Sigma^k - Delta - I = 0."""
    rng = np.random.default_rng(37)
    om = [chain_precision(6, rng)]
    om = [m / np.linalg.norm(m) for m in om]
    sig = [np.linalg.inv(m) for m in om]
    for seed in range(5):
        aux = make_auxiliary(sig, 5, 0.5, 0.5, np.random.default_rng(seed))
        resid = om[0] @ aux.sigma[0] - aux.delta[0] - np.eye(6)
        assert np.abs(resid).max() < 1e-12
        assert np.linalg.eigvalsh(aux.sigma[0])[0] > 0


def test_informative_divergences_smaller_than_noise_domains():
    rng = np.random.default_rng(41)
    raw = [chain_precision(10, rng), chain_precision(10, rng)]
    norm = [m / np.linalg.norm(m) for m in raw]
    sig = [np.linalg.inv(m) for m in norm]
    h01 = rate_anchor((10, 10), 50)
    h02 = 10.0 * max_column_support(raw) * h01
    small, large = [], []
    for seed in range(20):
        a = make_auxiliary(sig, 5, h01, 0.9, np.random.default_rng(100 + seed))
        b = make_auxiliary(sig, 5, h02, 0.75, np.random.default_rng(200 + seed))
        small.append(max(np.abs(d).sum(axis=0).max() for d in a.delta))
        large.append(max(np.abs(d).sum(axis=0).max() for d in b.delta))
    assert np.median(small) < np.median(large)


def test_gen_scenario_one_layout():
    cfg = ScenarioConfig(scenario="one", graph=GraphSpec("chain", (6, 5)), n=20, K=3, seed=5)
    scn = gen_scenario(cfg)
    assert len(scn.auxiliaries) == 3
    assert all(d.informative for d in scn.auxiliaries)
    assert all(d.samples.shape == (80, 6, 5) for d in scn.auxiliaries)
    assert scn.target.samples.shape == (20, 6, 5)
    for om in scn.normalized_truth:
        assert abs(np.linalg.norm(om) - 1.0) < 1e-12


def test_gen_scenario_two_flags_and_defaults():
    cfg = ScenarioConfig(
        scenario="two", graph=GraphSpec("chain", (6, 5)), n=20, K=5, card_A=0, seed=5
    )
    scn = gen_scenario(cfg)
    assert len(scn.auxiliaries) == 5
    assert not any(d.informative for d in scn.auxiliaries)
    assert all(d.samples.shape[0] == 100 for d in scn.auxiliaries)

    cfg2 = ScenarioConfig(
        scenario="two", graph=GraphSpec("chain", (6, 5)), n=20, K=5, card_A=2, seed=5
    )
    flags = [d.informative for d in gen_scenario(cfg2).auxiliaries]
    assert flags == [True, True, False, False, False]


def test_gen_scenario_deterministic():
    cfg = ScenarioConfig(scenario="one", graph=GraphSpec("chain", (5, 4)), n=10, K=2, seed=77)
    a, b = gen_scenario(cfg), gen_scenario(cfg)
    np.testing.assert_array_equal(a.target.samples, b.target.samples)
    for da, db in zip(a.auxiliaries, b.auxiliaries):
        np.testing.assert_array_equal(da.samples, db.samples)
        for m in range(2):
            np.testing.assert_array_equal(da.sigma[m], db.sigma[m])


def test_gen_scenario_config_validation():
    g = GraphSpec("chain", (5, 4))
    with pytest.raises(ValueError):
        gen_scenario(ScenarioConfig(scenario="three", graph=g))
    with pytest.raises(ValueError):
        gen_scenario(ScenarioConfig(scenario="two", graph=g, K=3, card_A=4))
    with pytest.raises(ValueError):
        gen_scenario(ScenarioConfig(scenario="two", graph=g, K=3))  # card_A missing
    with pytest.raises(ValueError):
        gen_scenario(ScenarioConfig(scenario="one", graph=g, n=3))


def test_rate_anchor_value():
    # sqrt(pbar ln pbar / (n p)) with pbar=10, p=100, n=50
    expected = np.sqrt(10 * np.log(10) / 5000)
    assert rate_anchor((10, 10), 50) == pytest.approx(expected, rel=1e-12)
