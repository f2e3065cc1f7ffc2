"""GMCK checkpoint container round-trips and format validation."""

import struct

import numpy as np
import pytest

from gradmine.checkpoint import (MAGIC, apply_checkpoint, load_checkpoint,
                                 load_into, save_checkpoint)
from gradmine.errors import FormatError
from gradmine.network import TrainConfig, build_network, builtin_spec, train_step
from gradmine.tensor import Rng


def trained_micro(tmp_path, seed=1, steps=3):
    net, store = build_network(builtin_spec("toy-micro"), seed=seed)
    cfg = TrainConfig(nu=1e-3, lr=1e-3, batch=2)
    rng = Rng(5)
    x = rng.normal(0, 0.5, (2, 16, 16, 3)).astype(np.float32)
    y = np.array([0.0, 1.0])
    for _ in range(steps):
        train_step(net, store, x, y, cfg, rng)
    return net, store


class TestRoundTrip:
    def test_save_load_save_byte_identical(self, tmp_path):
        net, store = trained_micro(tmp_path)
        p1 = tmp_path / "a.gmck"
        p2 = tmp_path / "b.gmck"
        save_checkpoint(net, store, p1)
        net2, store2 = build_network(builtin_spec("toy-micro"), seed=99)
        load_into(net2, store2, p1)
        save_checkpoint(net2, store2, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_values_restored_exactly_f32(self, tmp_path):
        net, store = trained_micro(tmp_path)
        path = tmp_path / "c.gmck"
        save_checkpoint(net, store, path)
        net2, store2 = build_network(builtin_spec("toy-micro"), seed=99)
        load_into(net2, store2, path)
        for e1, e2 in zip(store.entries, store2.entries):
            assert np.array_equal(store.get(e1), store2.get(e2))
        assert store2.t == store.t

    def test_byte_length_matches_layout_arithmetic(self, tmp_path):
        net, store = trained_micro(tmp_path)
        path = tmp_path / "d.gmck"
        save_checkpoint(net, store, path)
        n_param_tensors = len(store.entries)
        payload = sum(store.get(e).size for e in store.entries)
        want = (4 + 8                       # magic, version + layer count
                + len(net.layers)           # kind tags
                + 3 * n_param_tensors * 16  # dims of params + both moments
                + 3 * payload * 4           # f32 payloads
                + 8)                        # step counter
        assert path.stat().st_size == want


class TestFormatErrors:
    def test_truncated_file(self, tmp_path):
        net, store = trained_micro(tmp_path)
        path = tmp_path / "e.gmck"
        save_checkpoint(net, store, path)
        raw = path.read_bytes()
        for cut in (2, 9, len(raw) // 2, len(raw) - 3):
            bad = tmp_path / f"cut{cut}.gmck"
            bad.write_bytes(raw[:cut])
            with pytest.raises(FormatError):
                load_checkpoint(bad)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.gmck"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(FormatError, match="magic"):
            load_checkpoint(path)

    def test_bad_version(self, tmp_path):
        net, store = trained_micro(tmp_path)
        path = tmp_path / "v.gmck"
        save_checkpoint(net, store, path)
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="version"):
            load_checkpoint(path)

    def test_dims_mismatch_rejected_on_apply(self, tmp_path):
        net, store = trained_micro(tmp_path)
        path = tmp_path / "w.gmck"
        save_checkpoint(net, store, path)
        other, other_store = build_network(builtin_spec("toy-ref"), seed=0)
        with pytest.raises(FormatError):
            load_into(other, other_store, path)

    def test_trailing_garbage(self, tmp_path):
        net, store = trained_micro(tmp_path)
        path = tmp_path / "t.gmck"
        save_checkpoint(net, store, path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FormatError, match="trailing"):
            load_checkpoint(path)

    def test_magic_constant(self):
        assert MAGIC == b"GMCK"
