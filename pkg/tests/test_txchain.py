"""Transmit chain: splitting, spreading, modulation, frame bookkeeping."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcmccdma.codes import generate_msequence, generate_walsh
from mcmccdma.txchain import (
    LinkConfig,
    UserSymbols,
    modulate_user,
    multicode_spread,
    parallel_to_serial,
    serial_to_parallel,
    slot_signatures,
    subcarrier_frequency,
    walsh_chip_indices,
)


class TestLinkConfig:
    def test_derived_quantities(self):
        cfg = LinkConfig(substreams=2, carriers=2, walsh_order=4,
                         pn_length=15, oversampling=4, symbol_duration=2.0)
        assert cfg.samples_per_symbol == 60
        assert cfg.sample_rate == 30.0
        assert cfg.bits_per_symbol == 4
        assert cfg.walsh_aligned

    def test_unaligned_flag(self):
        cfg = LinkConfig(substreams=8, carriers=1, walsh_order=8,
                         pn_length=63, oversampling=4)
        assert not cfg.walsh_aligned        # 252 % 8 != 0

    @pytest.mark.parametrize("kwargs", [
        dict(users=0),
        dict(substreams=0),
        dict(walsh_order=3),
        dict(walsh_order=2, substreams=3),
        dict(oversampling=1),
        dict(power=0.0),
        dict(symbol_duration=-1.0),
        dict(walsh_order=64, pn_length=7, oversampling=4),     # 64 > 28
        dict(carriers=8, walsh_order=8, pn_length=7, oversampling=2),  # 64 > 14
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            LinkConfig(**kwargs)


class TestSerialParallel:
    def test_round_robin_order(self):
        out = serial_to_parallel(np.arange(6), 3)
        assert (out == [[0, 3], [1, 4], [2, 5]]).all()

    def test_round_trip(self):
        bits = np.array([1, -1, -1, 1, 1, 1, -1, -1])
        assert (parallel_to_serial(serial_to_parallel(bits, 4)) == bits).all()

    def test_indivisible_rejected(self):
        with pytest.raises(ValueError):
            serial_to_parallel(np.arange(7), 2)

    @given(st.integers(1, 6), st.integers(1, 5))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_property(self, lanes, blocks):
        bits = np.arange(lanes * blocks)
        assert (parallel_to_serial(serial_to_parallel(bits, lanes)) == bits).all()


class TestMulticodeSpread:
    def test_two_substreams(self):
        w = generate_walsh(2)
        chips = multicode_spread(np.array([1, -1]), w)
        assert (chips == [0, 2]).all()

    def test_single_substream_is_code_row(self):
        w = generate_walsh(4)
        assert (multicode_spread(np.array([1]), w) == w.row(0)).all()

    def test_all_ones_order8(self):
        w = generate_walsh(8)
        chips = multicode_spread(np.ones(8, dtype=int), w)
        assert (chips == [8, 0, 0, 0, 0, 0, 0, 0]).all()

    def test_parity_and_bound(self):
        w = generate_walsh(8)
        rng = np.random.default_rng(0)
        for _ in range(20):
            d = rng.choice([-1, 1], size=5)
            chips = multicode_spread(d, w)
            assert np.abs(chips).max() <= 5
            assert ((chips - 5) % 2 == 0).all()

    def test_too_many_substreams(self):
        with pytest.raises(ValueError):
            multicode_spread(np.ones(3), generate_walsh(2))


class TestSubcarriers:
    def test_frequencies_and_spacing(self):
        cfg = LinkConfig(carriers=4, walsh_order=8, substreams=8,
                         pn_length=63, oversampling=4, symbol_duration=2.0)
        freqs = [subcarrier_frequency(m, cfg) for m in range(1, 5)]
        assert freqs == [4.0, 8.0, 12.0, 16.0]
        spacing = np.diff(freqs)
        assert np.allclose(spacing, cfg.walsh_order / cfg.symbol_duration)

    def test_index_range(self):
        cfg = LinkConfig(carriers=2, pn_length=15)
        with pytest.raises(IndexError):
            subcarrier_frequency(0, cfg)
        with pytest.raises(IndexError):
            subcarrier_frequency(3, cfg)

    def test_carrier_orthogonality_discrete(self):
        cfg = LinkConfig(carriers=6, walsh_order=8, substreams=1,
                         pn_length=31, oversampling=4)
        n = cfg.samples_per_symbol
        i = np.arange(n)
        t = i * cfg.symbol_duration / n
        for m in range(1, 7):
            for mp in range(1, 7):
                if m == mp:
                    continue
                df = subcarrier_frequency(m, cfg) - subcarrier_frequency(mp, cfg)
                s = np.exp(2j * np.pi * df * t).sum() / n
                assert abs(s) < 1e-10


class TestWalshGrid:
    def test_aligned_grid_uniform(self):
        cfg = LinkConfig(substreams=2, carriers=2, walsh_order=4,
                         pn_length=15, oversampling=4)
        idx = walsh_chip_indices(cfg)
        lengths = np.bincount(idx)
        assert (lengths == 15).all()

    def test_unaligned_grid_near_uniform(self):
        cfg = LinkConfig(substreams=8, carriers=8, walsh_order=8,
                         pn_length=63, oversampling=4)
        idx = walsh_chip_indices(cfg)
        lengths = np.bincount(idx)
        assert lengths.sum() == cfg.samples_per_symbol
        assert lengths.max() - lengths.min() <= 1
        assert (np.diff(idx) >= 0).all()


class TestModulateUser:
    def test_degenerate_tone(self):
        from mcmccdma.codes import PnSequence
        cfg = LinkConfig(pn_length=7, oversampling=4, power=2.0)
        walsh = generate_walsh(1)
        flat_pn = PnSequence(degree=3, taps=(3, 1), chips=np.ones(7, dtype=np.int8))
        d = np.ones((1, 1, 1), dtype=np.int8)
        frame = modulate_user(d, walsh, flat_pn, cfg)
        n = cfg.samples_per_symbol
        i = np.arange(n)
        expected = np.sqrt(2 * cfg.power) * np.exp(
            2j * np.pi * subcarrier_frequency(1, cfg) * i * cfg.symbol_duration / n)
        assert np.allclose(frame.samples, expected, atol=1e-12)

    def test_mean_power(self):
        cfg = LinkConfig(substreams=4, carriers=4, walsh_order=4,
                         pn_length=63, oversampling=4, power=0.5)
        walsh = generate_walsh(4)
        pn = generate_msequence(6)
        rng = np.random.default_rng(5)
        d = rng.choice([-1, 1], size=(40, 4, 4)).astype(np.int8)
        frame = modulate_user(d, walsh, pn, cfg)
        expected = 2 * cfg.power * cfg.substreams * cfg.carriers
        assert frame.mean_power == pytest.approx(expected, rel=1e-2)

    def test_slot_signatures_orthonormal_when_aligned(self):
        cfg = LinkConfig(substreams=4, carriers=4, walsh_order=4,
                         pn_length=63, oversampling=4)
        walsh = generate_walsh(4)
        pn = generate_msequence(6)
        sig = slot_signatures(walsh, pn, cfg).reshape(16, -1)
        gram = (sig @ sig.conj().T) / sig.shape[1]
        assert np.abs(gram - np.eye(16)).max() < 1e-10

    def test_accepts_usersymbols_wrapper(self):
        cfg = LinkConfig(substreams=2, carriers=1, walsh_order=2,
                         pn_length=7, oversampling=4)
        walsh = generate_walsh(2)
        pn = generate_msequence(3)
        d = np.ones((3, 2, 1), dtype=np.int8)
        a = modulate_user(UserSymbols(user=0, symbols=d), walsh, pn, cfg)
        b = modulate_user(d, walsh, pn, cfg)
        assert np.array_equal(a.samples, b.samples)

    def test_frame_length(self):
        cfg = LinkConfig(substreams=2, carriers=2, walsh_order=2,
                         pn_length=15, oversampling=4)
        d = np.ones((7, 2, 2), dtype=np.int8)
        frame = modulate_user(d, generate_walsh(2), generate_msequence(4), cfg)
        assert len(frame) == 7 * cfg.samples_per_symbol
