import numpy as np
import pytest

import hsic


def unit_columns(m, k, seed):
    a = np.random.default_rng(seed).normal(size=(m, k))
    return a / np.linalg.norm(a, axis=0)


def test_omp_recovers_a_single_atom():
    d = unit_columns(8, 16, 1)
    idx, val, res = hsic.omp(d, 2.5 * d[:, 3], 2)
    assert idx == [3]
    assert val[0] == pytest.approx(2.5)
    assert res == pytest.approx(0.0, abs=1e-12)


def test_encode_shape_and_sparsity():
    d = unit_columns(8, 16, 2)
    x = np.random.default_rng(3).normal(size=(8, 20))
    codes = hsic.encode(d, x, 3)
    assert codes.shape == (16, 20)
    assert (np.count_nonzero(codes, axis=0) <= 3).all()


def test_train_keeps_atoms_in_unit_ball():
    x = np.random.default_rng(4).normal(size=(6, 50))
    atoms, trace = hsic.train(x, atoms=12, sparsity=2, iterations=100, seed=5)
    assert atoms.shape == (6, 12)
    assert len(trace) == 100
    assert np.linalg.norm(atoms, axis=0).max() <= 1 + 1e-12


def test_pca_full_rank_reconstructs():
    x = np.random.default_rng(6).normal(size=(5, 40))
    model = hsic.pca(x, 5)
    back = model["components"] @ model["scores"] + model["mean"][:, None]
    np.testing.assert_allclose(back, x, atol=1e-8)


def test_nmf_objective_is_monotone():
    x = np.random.default_rng(7).uniform(0.1, 1.0, size=(6, 30))
    w, h, trace = hsic.nmf(x, 2, iterations=50, seed=1)
    assert w.shape == (6, 2) and h.shape == (2, 30)
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))


def test_spectral_separates_rings_and_ami_scores_it():
    rng = np.random.default_rng(8)
    t = rng.uniform(0, 2 * np.pi, size=200)
    r = np.where(np.arange(200) < 100, 1.0, 5.0) + rng.normal(scale=0.05, size=200)
    pts = np.vstack([r * np.cos(t), r * np.sin(t)])
    truth = (np.arange(200) >= 100).astype(int)
    labels = hsic.spectral_cluster(pts, 2, seed=1, k_nn=10)
    assert hsic.ami(truth.tolist(), labels.tolist()) == pytest.approx(1.0, abs=1e-12)
    assert hsic.kmeans(pts, 2, seed=1).shape == (200,)


def test_ami_report_keys():
    report = hsic.ami_report([0, 0, 1, 1], [1, 1, 0, 0])
    assert report["ami"] == pytest.approx(1.0)
    assert {"mi", "emi", "entropy_g", "entropy_l", "n", "clusters_g", "clusters_l"} <= set(report)


def test_file_round_trips(tmp_path):
    cube = np.random.default_rng(9).uniform(size=(3, 4, 5))
    hsic.save_cube(cube, tmp_path / "c.npy")
    np.testing.assert_array_equal(hsic.load_cube(tmp_path / "c.npy"), cube)
    gt = np.arange(12, dtype=np.int32).reshape(3, 4)
    hsic.save_labels(gt, tmp_path / "gt.npy")
    np.testing.assert_array_equal(hsic.load_labels(tmp_path / "gt.npy"), gt)
    d = unit_columns(5, 10, 10)
    hsic.save_dictionary(d, tmp_path / "d.sdict", {"sparsity": "2"})
    atoms, meta = hsic.load_dictionary(tmp_path / "d.sdict")
    np.testing.assert_array_equal(atoms, d)
    assert meta["sparsity"] == "2"


def test_errors_map_to_exception_classes(tmp_path):
    d = unit_columns(8, 16, 11)
    with pytest.raises(hsic.ParameterError):
        hsic.omp(d, np.ones(8), 0)
    with pytest.raises(hsic.DataError):
        hsic.omp(d, np.ones(7), 2)
    with pytest.raises(hsic.DataError):
        hsic.load_cube(tmp_path / "absent.npy")
    assert issubclass(hsic.NumericError, hsic.HsicError)


def test_pipeline_train_and_cluster(tmp_path):
    rng = np.random.default_rng(12)
    cube = rng.uniform(0.1, 1.0, size=(6, 6, 8))
    gt = np.ones((6, 6), dtype=np.int32)
    gt[:, 3:] = 2
    cube[:, 3:, :4] += 2.0
    hsic.save_cube(cube, tmp_path / "c.npy")
    hsic.save_labels(gt, tmp_path / "gt.npy")
    cfg = {"data": str(tmp_path / "c.npy"), "labels": str(tmp_path / "gt.npy"),
           "atoms": "16", "sparsity": "2", "iterations": "50", "seed": "1",
           "out": str(tmp_path / "run")}
    out = hsic.run_train(cfg)
    assert out["atoms"] == 16
    summary = hsic.run_cluster({**cfg, "dictionary": str(out["dictionary"]), "knn": "5"})
    assert '"clusters": 2' in summary
