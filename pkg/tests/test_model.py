import math
from unittest import mock

import numpy as np
import pytest

from conftest import small_gaussian, trace_equal
from hdphmm_lt import model, similarity
from hdphmm_lt.errors import InputError, ParameterError
from hdphmm_lt.model import ModelConfig
from hdphmm_lt.rand import RandomStream
from hdphmm_lt.transitions import HdpHyper


def config(variant="sticky-lt", **kw):
    kw.setdefault("hyper", HdpHyper(J=6))
    kw.setdefault("iterations", 20)
    kw.setdefault("burn_in", 5)
    kw.setdefault("thin", 5)
    kw.setdefault("chains", 1)
    return ModelConfig(variant=variant, **kw)


def test_config_validation():
    with pytest.raises(ParameterError):
        ModelConfig(variant="sticky-hsmm")
    with pytest.raises(ParameterError):
        ModelConfig(iterations=10, burn_in=10)
    with pytest.raises(ParameterError):
        ModelConfig(metrics=["accuracy"])


def test_variant_forces_kernel():
    assert ModelConfig(variant="vanilla", kernel={"variant": "laplacian_hamming"}).kernel.is_constant
    assert ModelConfig(variant="lt").kernel.variant == "laplacian_hamming"
    cat = ModelConfig(variant="lt", emission={"family": "categorical"})
    assert cat.kernel.variant == "gaussian_euclidean"
    assert ModelConfig(variant="lt").hyper.kappa == 0.0 and not ModelConfig(variant="lt").hyper.sticky


def test_config_json_round_trip():
    c = config(seed=7)
    assert ModelConfig.from_json(c.to_json()) == c
    assert c.with_variant("vanilla").kernel.is_constant


def test_sweep_preserves_invariants(gaussian_data):
    cfg = config()
    state = model.init_chain(cfg, gaussian_data, RandomStream(1))
    for _ in range(5):
        model.gibbs_sweep(state, gaussian_data)
        t = state.trans
        assert math.isclose(t.beta.sum(), 1.0)
        assert np.all(t.pi > 0) and np.all(t.pi0 > 0) and np.all(t.beta > 0)
        assert np.all(t.u >= 0) and np.all(t.Q >= 0) and np.all(t.M >= 0)
        assert np.all(t.M <= t.N + t.Q)
        assert np.all((t.N + t.Q > 0) <= (t.M > 0))
        assert t.N.sum() == sum(len(z) - 1 for z in state.z)
        assert np.all(state.trans.u[t.N.sum(axis=1) == 0] == 0)
        assert np.isfinite(model.log_joint(state, gaussian_data))
        assert 0 < state.kernel.lam and state.hyper.alpha > 0 and state.hyper.kappa >= 0


def test_constant_kernel_skips_similarity_updates(gaussian_data):
    cfg = config("vanilla")
    state = model.init_chain(cfg, gaussian_data, RandomStream(2))
    with mock.patch.object(similarity, "sample_lambda") as lam, \
            mock.patch.object(similarity, "hmc_update_locations") as hmc, \
            mock.patch.object(similarity, "eta_log_odds", wraps=similarity.eta_log_odds):
        for _ in range(3):
            model.gibbs_sweep(state, gaussian_data)
    lam.assert_not_called()
    hmc.assert_not_called()
    assert not state.trans.Q.any()


def test_one_iteration_gives_one_row(gaussian_data):
    result = model.run_chain(config(iterations=1, burn_in=0, thin=10), gaussian_data)
    assert len(result.trace) == 1 and result.trace[0]["iteration"] == 1
    assert set(result.trace[0]) == set(model.TRACE_COLUMNS)


def test_trace_is_deterministic(gaussian_data):
    a = model.run_chain(config(seed=3), gaussian_data).trace
    b = model.run_chain(config(seed=3), gaussian_data).trace
    c = model.run_chain(config(seed=4), gaussian_data).trace
    assert trace_equal(a, b) and not trace_equal(a, c)
    assert [r["iteration"] for r in a] == [5, 10, 15, 20]


def test_fixed_zero_kappa_matches_lt(gaussian_data):
    lt = config("lt", seed=5)
    slt = config("sticky-lt", seed=5, fix_kappa=True)
    slt.hyper.kappa = 0.0
    a = model.run_chain(lt, gaussian_data).trace
    b = model.run_chain(slt, gaussian_data).trace
    assert trace_equal(a, b)


def test_resume_continues_exactly(gaussian_data):
    cfg = config(seed=6)
    full = model.run_chain(cfg, gaussian_data)
    first = model.run_chain(cfg, gaussian_data, until=10)
    rest = model.run_chain(cfg, gaussian_data, state=first.state)
    assert trace_equal(full.trace, first.trace + rest.trace)


def test_categorical_lt_runs_with_test_surprisal(symbol_data):
    from conftest import small_symbols
    cfg = config("lt", emission={"family": "categorical"}, metrics=["train_loglik", "test_surprisal"])
    result = model.run_chain(cfg, symbol_data, test=small_symbols(seed=1, n=1))
    row = result.trace[-1]
    assert row["test_surprisal"] > 0 and row["train_loglik"] < 0 and row["f1"] is None
    assert result.state.locations is not None and result.state.binary is None


def test_averaged_state_matrix(gaussian_data):
    results = model.fit(config(chains=2, iterations=15, burn_in=5), gaussian_data)
    avg = model.averaged_state_matrix(results)
    assert avg[0].shape == gaussian_data.truth[0].shape
    assert np.all((avg[0] >= 0) & (avg[0] <= 1))
    assert math.isfinite(results[0].posterior_mean("f1"))


def test_missing_w_is_an_error():
    d = small_gaussian()
    d.W = None
    cfg = config(emission={"w_fixed": True})
    with pytest.raises(InputError):
        model.init_chain(cfg, d, RandomStream(0))
