import numpy as np
import pytest

import ctbn


def test_simulate_is_deterministic():
    net = ctbn.glauber_network(3, [(0, 1), (1, 2)], a=1.0, b=0.6)
    a = ctbn.simulate(net, [0, 1, 0], 5.0, 11)
    assert a == ctbn.simulate(net, [0, 1, 0], 5.0, 11)
    assert all(0.0 < t <= 5.0 for t, _, _ in a)


def test_star_matches_exact_on_one_node():
    net = ctbn.glauber_network(1, [], a=1.5, b=0.0)
    obs = [(0.2, 0, 0.7), (0.6, 0, -1.1), (0.9, 0, 0.4)]
    star = ctbn.infer(net, 1.0, obs, sigma=0.5, method="star", tolerance=1e-10)
    exact = ctbn.infer(net, 1.0, obs, sigma=0.5, method="exact")
    assert star["converged"]
    assert star["marginals"].shape == exact["marginals"].shape
    np.testing.assert_allclose(star["marginals"].sum(axis=2), 1.0, atol=1e-9)
    assert np.max(np.abs(star["marginals"] - exact["marginals"])) < 2e-3
    assert abs(star["energy"] - exact["log_evidence"]) < 1e-3


def test_mean_field_energy_is_below_evidence():
    net = ctbn.glauber_network(3, [(0, 1), (1, 2)], a=2.0, b=0.8)
    obs = ctbn.observe(net, [1, 1, 0], 2.0, 6, 0.4, 3)
    mf = ctbn.infer(net, 2.0, obs, sigma=0.4, method="mf", grid_step=2e-3)
    exact = ctbn.infer(net, 2.0, obs, sigma=0.4, method="exact", grid_step=2e-3)
    assert mf["energy"] <= exact["log_evidence"] + 1e-6


def test_errors_surface_as_value_errors():
    net = ctbn.glauber_network(2, [(0, 1)])
    with pytest.raises(ValueError):
        ctbn.infer(net, 1.0, [], method="bogus")
    with pytest.raises(ctbn.CtbnError):
        ctbn.named_graph("lattice", 4)


def test_metrics_and_learning():
    assert ctbn.auroc_aupr([0.9, 0.1, 0.8, 0.3], [True, False, True, False]) == (1.0, 1.0)
    net = ctbn.glauber_network(2, [(0, 1)], a=1.0, b=1.5)
    data = [ctbn.observe(net, [d % 2, 0], 10.0, 40, 0.2, 100 + d) for d in range(4)]
    res = ctbn.learn(2, 10.0, data, sigma=0.2, k=1)
    p = np.asarray(res["edge_probability"])
    assert p.shape == (2, 2)
    assert np.all((p >= 0.0) & (p <= 1.0 + 1e-12))
