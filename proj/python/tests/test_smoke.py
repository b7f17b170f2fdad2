import math

import numpy as np
import pytest

import epsrank


def test_preset_catalog():
    names = epsrank.preset_names()
    assert "ex2.1a" in names
    assert "ex3.1-failed" in names
    text = epsrank.preset_text("ex2.1a")
    assert "[network]" in text and "width = 50" in text


def test_run_preset_records_and_determinism():
    a = epsrank.run_preset("ex2.1a", seed=0, steps=200)
    b = epsrank.run_preset("ex2.1a", seed=0, steps=200)
    assert not a["aborted"]
    recs = a["records"]
    assert recs[0]["iteration"] == 0
    assert recs[-1]["iteration"] == 200
    assert all(math.isfinite(r["loss"]) for r in recs)
    assert [r["loss"] for r in recs] == [r["loss"] for r in b["records"]]


def test_unknown_preset_raises():
    with pytest.raises(Exception, match="unknown preset"):
        epsrank.run_preset("nope", seed=0)


def test_gram_spectrum_constant_and_linear():
    x = np.linspace(-1.0, 1.0, 801)
    w = np.full_like(x, 2.0 / 800)
    w[0] = w[-1] = 1.0 / 800
    feats = np.stack([np.ones_like(x), x], axis=1)
    spec = epsrank.gram_spectrum(feats, x[:, None], w, epsilon=1e-6)
    assert spec["eps_rank"] == 2
    assert spec["eigenvalues"][0] == pytest.approx(2.0, abs=1e-4)
    assert spec["eigenvalues"][1] == pytest.approx(2.0 / 3.0, abs=1e-4)


def test_compress_duplicate_columns():
    x = np.linspace(-1.0, 1.0, 801)
    w = np.full_like(x, 2.0 / 800)
    w[0] = w[-1] = 1.0 / 800
    f1 = np.sin(np.pi * x)
    f2 = np.cos(np.pi * x)
    f = np.stack([f1, f2, f1], axis=1)
    res = epsrank.compress(f, np.array([1.0, 1.0, 1.0]), x[:, None], w, epsilon=1e-6)
    assert res["p"] == 2
    assert res["measured_error"] <= 1e-10
    assert res["measured_error"] <= res["certified_bound"] or res["certified_bound"] == 0.0


def test_probe_lemma_bound_holds():
    res = epsrank.probe_lemma(4, 2, trials=200, seed=0)
    assert res["worst_best_sigma"] >= res["paper_bound"] - 1e-10
    assert res["conjecture_bound"] == pytest.approx(0.5)
