import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from vra.errors import TooFewFrames
from vra.featurestore import FrameFeatureMatrix
from vra.sampler import RngStream, fnv1a64, make_rng, sample_sequence

MASK = (1 << 64) - 1


def _ref_splitmix(state, count):
    # straight from the published SplitMix64 reference
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return out


def test_splitmix_reference_vector():
    r = RngStream(1234567)
    assert [r.next_u64() for _ in range(5)] == [
        6457827717110365317, 3203168211198807973, 9817491932198370423,
        4593380528125082431, 16408922859458223821,
    ]


def test_fnv1a_reference_vectors():
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C
    assert fnv1a64("foobar") == 0x85944171F73967E8


def test_make_rng_determinism():
    a, b = make_rng(42, 3, "clip"), make_rng(42, 3, "clip")
    assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]
    assert make_rng(42, 3, "clip").provenance == (42, 3, "clip")


def test_make_rng_matches_reference_stream():
    r = make_rng(5, 1, "x")
    assert [r.next_u64() for _ in range(4)] == _ref_splitmix(make_rng(5, 1, "x").state, 4)


@pytest.mark.parametrize("seed", [0, 1, 2**63, MASK])
def test_provenance_components_change_first_draw(seed):
    base = make_rng(seed, 0, "a").next_u64()
    assert make_rng(seed, 1, "a").next_u64() != base
    assert make_rng(seed, 0, "b").next_u64() != base


def _video(n, d=3, vid="v"):
    return FrameFeatureMatrix(vid, np.arange(n * d, dtype=np.float32).reshape(n, d))


def test_forced_start():
    for r in range(20):
        assert sample_sequence(_video(5), 5, make_rng(r, r, "v")).start == 0


def test_too_few_frames_names_video():
    with pytest.raises(TooFewFrames, match="short"):
        sample_sequence(_video(3, vid="short"), 5, make_rng(0, 0, "short"))


@given(st.integers(1, 60), st.integers(1, 60), st.integers(0, MASK), st.integers(0, 1000))
def test_window_bounds_and_fidelity(n, length, seed, rep):
    if length > n:
        return
    v = _video(n)
    s = sample_sequence(v, length, make_rng(seed, rep, "v"))
    assert 0 <= s.start <= n - length
    assert np.array_equal(s.features, v.values[s.start:s.start + length])
    again = sample_sequence(v, length, make_rng(seed, rep, "v"))
    assert again.start == s.start


def test_start_uniformity_chi_square():
    v = _video(10)
    r = make_rng(2024, 0, "uniform")
    counts = np.bincount([sample_sequence(v, 5, r).start for _ in range(100_000)], minlength=6)
    assert counts.shape == (6,)
    assert chisquare(counts).pvalue > 0.001


def test_integers_rejection_no_modulo_bias():
    # n just above 2**63: plain modulo would favour the low half ~2:1
    r = RngStream(99)
    n = (1 << 63) + (1 << 62)
    low = sum(r.integers(n) < n // 2 for _ in range(20_000))
    assert abs(low / 20_000 - 0.5) < 0.02
