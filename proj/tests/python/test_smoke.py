import numpy as np
import pytest

import lscggm


def test_simulate_shapes_and_determinism():
    a = lscggm.simulate(p=4, n=50, d_z=1, d_h=1, seed=3)
    b = lscggm.simulate(p=4, n=50, d_z=1, d_h=1, seed=3)
    assert a["data_x"].shape == (50, 4)
    assert a["data_z"].shape == (50, 4)
    assert a["s_star"].shape == (8, 4)
    np.testing.assert_array_equal(a["data_x"], b["data_x"])


def test_unpenalised_sparse_fit_inverts_the_covariance():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((400, 3))
    res = lscggm.fit(x, lam=0.0, method="scggm", tol=1e-12, max_iter=20000)
    sigma = x.T @ x / x.shape[0]
    np.testing.assert_allclose(res["s_x"], np.linalg.inv(sigma), atol=1e-6)
    assert res["converged"]
    assert res["l_x"].shape == (3, 3)
    assert res["s_zx"].shape == (0, 3)


def test_all_methods_fit_conditional_blocks():
    d = lscggm.simulate(p=4, n=300, d_z=1, d_h=1, seed=5)
    for method in lscggm.METHODS:
        res = lscggm.fit(d["data_x"], d["data_z"], lam=0.1, method=method)
        assert res["s_x"].shape == (4, 4)
        assert res["s_zx"].shape == (4, 4)
        np.testing.assert_allclose(res["s_x"], res["s_x"].T)


def test_huge_lambda_gives_no_edges_and_auc_is_bounded():
    d = lscggm.simulate(p=4, n=300, d_z=1, d_h=1, seed=7)
    top = lscggm.lambda_max(d["data_x"], d["data_z"])
    empty = lscggm.fit(d["data_x"], d["data_z"], lam=2 * top)
    off = empty["s_x"] - np.diag(np.diag(empty["s_x"]))
    assert np.abs(off).max() <= 1e-6
    path = [lscggm.fit(d["data_x"], d["data_z"], lam=top * r)["s_x"] for r in (0.5, 0.2, 0.05)]
    auc = lscggm.pr_auc(path, d["s_star"][:4])
    assert 0.0 <= auc <= 1.0


def test_identifiability_helpers():
    l = np.zeros((4, 3))
    l[0, 0] = 2.0
    assert lscggm.xi(l) == pytest.approx(1.0)
    assert lscggm.mu(np.full((2, 2), 0.7)) == pytest.approx(2.0)
    low, high, feasible = lscggm.gamma_range(0.1, 1.0)
    assert (low, high, feasible) == (pytest.approx(0.3), pytest.approx(0.5), True)
    with pytest.raises(ValueError):
        lscggm.xi(np.zeros((2, 2)))


def test_sdp_text_has_header_and_blocks():
    rng = np.random.default_rng(1)
    text = lscggm.sdp_text(rng.standard_normal((40, 2)), rng.standard_normal((40, 1)), lam=0.2)
    body = [ln for ln in text.splitlines() if not ln.startswith(("*", '"'))]
    assert int(body[0].split()[0]) > 0
    assert int(body[1].split()[0]) == 8


def test_bad_arguments_raise():
    x = np.random.default_rng(2).standard_normal((20, 2))
    with pytest.raises(ValueError):
        lscggm.fit(x, method="pca")
    with pytest.raises(ValueError):
        lscggm.fit(x, parametrisation="other")
