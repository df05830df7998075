import struct

import numpy as np
import pytest

from conftest import small_symbols, trace_equal
from hdphmm_lt import checkpoint as ck
from hdphmm_lt import model
from hdphmm_lt.errors import CheckpointError, ChecksumError, MigrationError
from hdphmm_lt.model import ModelConfig
from hdphmm_lt.transitions import HdpHyper


def short_config(variant="sticky-lt", **kw):
    return ModelConfig(variant=variant, hyper=HdpHyper(J=5), iterations=16, burn_in=4, thin=4,
                       chains=1, seed=11, **kw)


@pytest.fixture
def paused(gaussian_data):
    cfg = short_config()
    return cfg, model.run_chain(cfg, gaussian_data, until=8)


def test_save_load_save_is_byte_identical(paused, tmp_path):
    cfg, result = paused
    ck.checkpoint_save(result.state, tmp_path / "a.bin", cfg)
    states, cfg2 = ck.checkpoint_load(tmp_path / "a.bin")
    ck.checkpoint_save(states, tmp_path / "b.bin", cfg2)
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
    assert cfg2 == cfg


def test_restored_fields_are_exact(paused):
    _, result = paused
    (back,), _ = ck.loads(ck.dumps(result.state))
    s = result.state
    assert np.array_equal(back.trans.pi, s.trans.pi) and np.array_equal(back.binary.eta, s.binary.eta)
    assert back.trans.pi.dtype == s.trans.pi.dtype
    assert all(np.array_equal(a, b) for a, b in zip(back.z, s.z))
    assert back.rng.uniform() == s.rng.uniform()
    assert back.hyper == s.hyper and back.iteration == s.iteration


@pytest.mark.parametrize("variant", ["vanilla", "sticky-lt"])
def test_resume_matches_uninterrupted_run(variant, gaussian_data):
    cfg = short_config(variant)
    full = model.run_chain(cfg, gaussian_data)
    first = model.run_chain(cfg, gaussian_data, until=8)
    (state,), _ = ck.loads(ck.dumps(first.state, cfg))
    rest = model.run_chain(cfg, gaussian_data, state=state)
    assert trace_equal(full.trace, first.trace + rest.trace)


def test_resume_categorical_lt():
    data = small_symbols()
    cfg = short_config("lt", emission={"family": "categorical"})
    full = model.run_chain(cfg, data)
    first = model.run_chain(cfg, data, until=8)
    (state,), _ = ck.loads(ck.dumps(first.state))
    assert trace_equal(full.trace, first.trace + model.run_chain(cfg, data, state=state).trace)


def test_corruption_is_detected(paused):
    blob = bytearray(ck.dumps(paused[1].state))
    blob[-3] ^= 0xFF
    with pytest.raises(ChecksumError):
        ck.loads(bytes(blob))


def test_version_mismatch_needs_migration(paused):
    blob = bytearray(ck.dumps(paused[1].state))
    blob[8:12] = struct.pack("<I", ck.SCHEMA_VERSION + 1)
    with pytest.raises(MigrationError):
        ck.loads(bytes(blob))


def test_not_a_checkpoint(tmp_path):
    with pytest.raises(CheckpointError):
        ck.loads(b"hello world")
    with pytest.raises(CheckpointError):
        ck.checkpoint_load(tmp_path / "nope.bin")
