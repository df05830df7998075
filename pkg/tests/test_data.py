"""Metrics, simulators and file formats."""

import numpy as np
import pytest

from hdphmm_lt.datagen import (CocktailParams, SynthHdpParams, gen_cocktail, gen_hdp_hmm,
                               reachable_states, stick_breaking)
from hdphmm_lt.dataio import (Dataset, load_dataset, read_matrix_csv, read_symbol_sequences,
                              write_matrix_csv, write_symbol_sequences)
from hdphmm_lt.errors import InputError, ParameterError
from hdphmm_lt.metrics import f1_binary, hamming_metric
from hdphmm_lt.rand import RandomStream

# -- metrics ------------------------------------------------------------------------------


def test_f1_perfect_and_zero():
    truth = np.array([[1, 0], [0, 1]])
    assert f1_binary(truth, truth) == 1.0
    assert f1_binary(np.zeros_like(truth), truth) == 0.0
    assert f1_binary(np.zeros((3, 2)), np.zeros((3, 2))) == 1.0


def test_f1_counts():
    truth = np.array([1, 1, 1, 0])
    pred = np.array([1, 1, 0, 1])  # TP=2, FP=1, FN=1
    assert np.isclose(f1_binary(pred, truth), 2 / 3)


def test_f1_thresholds_probabilities():
    assert f1_binary(np.array([0.5, 0.49]), np.array([1, 0])) == 1.0


def test_hamming_metric():
    truth = np.zeros((10, 4), dtype=int)
    assert hamming_metric(truth, truth) == (0, 0.0)
    assert hamming_metric(1 - truth, truth) == (40, 1.0)
    flipped = truth.copy()
    flipped[3, 2] = 1
    assert hamming_metric(flipped, truth) == (1, 0.025)
    with pytest.raises(InputError):
        hamming_metric(truth, truth[:5])


# -- cocktail simulator ---------------------------------------------------------------------


def test_cocktail_group_exclusivity_at_full_scale():
    d = gen_cocktail(CocktailParams(seed=0))
    assert d.observations.shape == (2000, 12) and d.truth.shape == (2000, 16) and d.W.shape == (17, 12)
    assert d.truth.reshape(2000, 4, 4).sum(axis=2).max() <= 1


def test_reachable_state_count():
    assert reachable_states([4, 4, 4, 4]) == 625


def test_noise_free_observations_are_exact():
    d = gen_cocktail(CocktailParams(speakers=4, groups=2, steps=200, noise_sd=0.0, seed=1))
    assert np.allclose(d.observations, d.signal @ d.W)
    assert np.all(d.signal[:, 0] == 1.0)


def test_activity_rates_are_interior():
    for seed in range(5):
        rate = gen_cocktail(CocktailParams(seed=seed)).truth.mean(axis=0)
        assert np.all((rate > 0) & (rate < 1))


def test_cocktail_is_deterministic():
    a = gen_cocktail(CocktailParams(speakers=4, groups=2, steps=100, seed=3))
    b = gen_cocktail(CocktailParams(speakers=4, groups=2, steps=100, seed=3))
    assert np.array_equal(a.observations, b.observations)


def test_cocktail_parameter_validation():
    with pytest.raises(ParameterError):
        CocktailParams(speakers=5, groups=2)


# -- HDP-HMM simulator -------------------------------------------------------------------------


def test_truncated_gem_sums_to_one():
    assert abs(stick_breaking(2.0, 10, RandomStream(0)).sum() - 1.0) < 1e-12


def test_transition_frequencies_converge():
    d = gen_hdp_hmm(SynthHdpParams(J=4, alpha=5.0, gamma_conc=5.0, T=100_000, seed=1))
    z = d.z[0]
    counts = np.zeros((4, 4))
    np.add.at(counts, (z[:-1], z[1:]), 1)
    visited = counts.sum(axis=1) > 5000
    freq = counts[visited] / counts[visited].sum(axis=1, keepdims=True)
    assert np.max(np.abs(freq - d.P[visited])) < 0.01


def test_large_alpha_rows_approach_beta():
    d = gen_hdp_hmm(SynthHdpParams(J=6, alpha=1e6, T=10, seed=2))
    assert np.max(np.abs(d.P - d.beta[None, :])) < 0.01


def test_no_rescaling_without_kernel():
    d = gen_hdp_hmm(SynthHdpParams(seed=3))
    assert np.allclose(d.P, d.extra["rows"])
    assert d.truth[0].shape == (300, 4) and d.sequences[0].shape == (300, 6)


def test_categorical_lt_draw():
    d = gen_hdp_hmm(SynthHdpParams(J=5, emission="categorical", V=7, kernel="gaussian_euclidean",
                                   n_sequences=3, T=40, seed=4))
    assert len(d.sequences) == 3 and d.sequences[0].max() < 7
    assert d.loc.shape == (5, 2) and d.truth is None


# -- file formats -------------------------------------------------------------------------------


def test_matrix_csv_round_trip(tmp_path):
    x = RandomStream(0).normal(size=(5, 3))
    write_matrix_csv(tmp_path / "x.csv", x)
    assert np.array_equal(read_matrix_csv(tmp_path / "x.csv"), x)
    text = (tmp_path / "x.csv").read_bytes()
    assert b"\r" not in text and text.startswith(b"c0,c1,c2\n")


def test_symbol_sequences_round_trip(tmp_path):
    seqs = [np.array([0, 3, 2]), np.array([1])]
    write_symbol_sequences(tmp_path / "s.txt", seqs)
    back = read_symbol_sequences(tmp_path / "s.txt")
    assert [s.tolist() for s in back] == [[0, 3, 2], [1]]


def test_bad_files(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b\n1,x\n")
    with pytest.raises(InputError):
        read_matrix_csv(tmp_path / "bad.csv")
    with pytest.raises(InputError):
        read_matrix_csv(tmp_path / "missing.csv")
    with pytest.raises(InputError):
        load_dataset({}, tmp_path)


def test_dataset_validation():
    with pytest.raises(InputError):
        Dataset([])
    with pytest.raises(InputError):
        Dataset([np.zeros((3, 2)), np.zeros((3, 4))])
    with pytest.raises(InputError):
        Dataset([np.zeros((3, 2))], truth=[np.zeros((4, 1))])
