"""Entropy stage, varint/zigzag serialization, and kernel backend parity."""

import numpy as np
import pytest

from tmcodec import kernels
from tmcodec.entropy import (
    TAG_RANGE,
    TAG_STORED,
    decode_ints,
    encode_ints,
    entropy_stage,
    varint_decode,
    varint_encode,
    zigzag_decode,
    zigzag_encode,
)


class TestEntropyStage:
    def test_stored_identity(self):
        data = bytes(range(256))
        assert entropy_stage(data, TAG_STORED, "encode") == data
        assert entropy_stage(data, TAG_STORED, "decode") == data

    def test_empty_input_zero_length_marker(self):
        assert entropy_stage(b"", TAG_STORED, "encode") == b""
        coded = entropy_stage(b"", TAG_RANGE, "encode")
        assert coded == b"\x00\x00\x00\x00"
        assert entropy_stage(coded, TAG_RANGE, "decode") == b""

    def test_roundtrip_random(self):
        rng = np.random.default_rng(0)
        data = rng.integers(0, 256, size=50_000, dtype=np.uint8).tobytes()
        coded = entropy_stage(data, TAG_RANGE, "encode")
        assert entropy_stage(coded, TAG_RANGE, "decode") == data
        # random bytes do not compress
        assert len(coded) >= len(data) - 16

    def test_constant_input_compresses(self):
        data = bytes(4096)
        coded = entropy_stage(data, TAG_RANGE, "encode")
        assert entropy_stage(coded, TAG_RANGE, "decode") == data
        assert len(coded) < len(data) // 10

    def test_roundtrip_structured(self):
        rng = np.random.default_rng(1)
        # skewed distribution: should both round-trip and shrink
        data = rng.choice(
            np.arange(8, dtype=np.uint8), p=[0.6, 0.2, 0.1, 0.05, 0.02, 0.01, 0.01, 0.01],
            size=20_000,
        ).tobytes()
        coded = entropy_stage(data, TAG_RANGE, "encode")
        assert entropy_stage(coded, TAG_RANGE, "decode") == data
        assert len(coded) < len(data) // 2

    def test_many_sizes_roundtrip(self):
        rng = np.random.default_rng(2)
        for n in [1, 2, 3, 5, 17, 255, 256, 257, 1000, 65535, 65536, 70000]:
            data = rng.integers(0, 256, size=n, dtype=np.uint8).tobytes()
            coded = entropy_stage(data, TAG_RANGE, "encode")
            assert entropy_stage(coded, TAG_RANGE, "decode") == data

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            entropy_stage(b"x", 7, "encode")

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            entropy_stage(b"x", TAG_STORED, "both")

    def test_truncated_marker(self):
        with pytest.raises(ValueError):
            entropy_stage(b"\x01\x00", TAG_RANGE, "decode")


class TestVarint:
    def test_zigzag_mapping(self):
        v = np.array([0, -1, 1, -2, 2], dtype=np.int64)
        assert np.array_equal(zigzag_encode(v), [0, 1, 2, 3, 4])
        assert np.array_equal(zigzag_decode(zigzag_encode(v)), v)

    def test_single_byte_values(self):
        u = np.array([0, 1, 127], dtype=np.uint64)
        assert varint_encode(u) == bytes([0, 1, 127])

    def test_continuation(self):
        assert varint_encode(np.array([128], dtype=np.uint64)) == bytes([0x80, 0x01])
        assert varint_encode(np.array([300], dtype=np.uint64)) == bytes([0xAC, 0x02])

    def test_roundtrip_wide_range(self):
        rng = np.random.default_rng(3)
        v = np.concatenate(
            [
                np.array([0, 1, -1, 2**40, -(2**40), 2**62 - 1, -(2**62)], dtype=np.int64),
                rng.integers(-(2**31), 2**31, size=5000).astype(np.int64),
            ]
        )
        buf = encode_ints(v)
        back, used = decode_ints(buf, v.size)
        assert used == len(buf)
        assert np.array_equal(back, v)

    def test_empty(self):
        assert varint_encode(np.zeros(0, dtype=np.uint64)) == b""
        vals, used = varint_decode(b"", 0)
        assert vals.size == 0 and used == 0

    def test_truncated_stream(self):
        buf = varint_encode(np.array([1, 2], dtype=np.uint64))
        with pytest.raises(ValueError):
            varint_decode(buf, 3)
        with pytest.raises(ValueError):
            varint_decode(bytes([0x80]), 1)  # dangling continuation


class TestKernelParity:
    """Compiled and pure backends must agree bit-for-bit."""

    @pytest.fixture(autouse=True)
    def _needs_compiled(self):
        if "c" not in kernels.available_backends():
            pytest.skip("compiled kernels not built")

    def test_rc_parity(self):
        rng = np.random.default_rng(4)
        c = kernels.get_module("c")
        py = kernels.get_module("python")
        for n in [0, 1, 17, 1000, 70000]:
            data = rng.integers(0, 256, size=n, dtype=np.uint8).tobytes()
            coded_c = c.rc_encode(data)
            coded_py = py.rc_encode(data)
            assert coded_c == coded_py
            assert c.rc_decode(coded_py, n) == data
            assert py.rc_decode(coded_c, n) == data

    def test_med_parity(self):
        rng = np.random.default_rng(5)
        c = kernels.get_module("c")
        py = kernels.get_module("python")
        for shape in [(1, 1), (1, 20), (20, 1), (13, 17), (64, 64)]:
            res = rng.integers(-300, 300, size=shape).astype(np.int64)
            assert np.array_equal(c.med_unpredict(res), py.med_unpredict(res))

    def test_set_backend_switch(self):
        kernels.set_backend("python")
        try:
            assert kernels.active_backend() == "python"
            data = b"backend switch probe"
            coded = kernels.rc_encode(data)
        finally:
            kernels.set_backend("c")
        assert kernels.active_backend() == "c"
        assert kernels.rc_decode(coded, len(data)) == data
