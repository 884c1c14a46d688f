import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdrsteg.errors import CapacityExceededError, MalformedCoverError, UnsuitableCoverError
from hdrsteg.float_plane import (
    CapacityMap,
    PlaneStack,
    capacity,
    decompose,
    extract_planes,
    join_fields,
    plane_bit_index,
    recompose,
    split_fields,
    write_planes,
)

REFERENCE_WORDS = {
    0.3167254: "00111110101000100010100111010101",
    1.2325828: "00111111100111011100010101000110",
}


def bits_of(x):
    return format(struct.unpack(">I", struct.pack(">f", x))[0], "032b")


def float_of(bits):
    return struct.unpack(">f", struct.pack(">I", int(bits, 2)))[0]


def flip_mantissa_bit(x, b):
    w = struct.unpack(">I", struct.pack(">f", x))[0] ^ (1 << (23 - b))
    return struct.unpack(">f", struct.pack(">I", w))[0]


@pytest.mark.parametrize("value,pattern", REFERENCE_WORDS.items())
def test_reference_bit_patterns(value, pattern):
    f = decompose(value)
    assert f.bits == pattern
    assert f.sign == 0
    assert f.exponent == int(pattern[1:9], 2)


def test_reference_exponents():
    assert decompose(0.3167254).exponent == 125
    assert decompose(1.2325828).exponent == 127


def test_one():
    f = decompose(1.0)
    assert (f.sign, f.exponent, f.mantissa) == (0, 127, 0)


def test_value_formula():
    f = decompose(1.2325828)
    assert (1 + f.fraction) * 2.0 ** (f.exponent - 127) == np.float32(1.2325828)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(MalformedCoverError):
        decompose(bad)


@given(st.floats(width=32, allow_nan=False, allow_infinity=False))
def test_recompose_inverts(x):
    y = recompose(decompose(x))
    assert bits_of(float(y)) == bits_of(x)


def test_vector_fields_match_scalar(rng):
    w = rng.integers(0, 0x7F800000, 1000, dtype=np.uint32)
    x = w.view(np.float32)
    s, e, m = split_fields(x)
    for i in range(0, 1000, 97):
        f = decompose(x[i])
        assert (f.sign, f.exponent, f.mantissa) == (s[i], e[i], m[i])
    assert np.array_equal(join_fields(s, e, m).view(np.uint32), w)


def significance_capacity(e):
    """Count mantissa bits 8..23 whose flip moves the value by more than 1e-7."""
    return sum(1 for b in range(8, 24) if 2.0 ** (e - 127 - b) > 1e-7)


def test_capacity_examples():
    img = np.array([[1.2325828, 0.3167254, 0.0, 1.0]], dtype=np.float32)
    assert capacity(img).n.tolist() == [[16, 14, 0, 16]]
    assert capacity(img).n_x == 0


@pytest.mark.parametrize("e", range(100, 160))
def test_capacity_matches_significance(e):
    x = float_of("0" + format(e, "08b") + "0" * 23)
    assert capacity(np.array([[x]], dtype=np.float32)).n[0, 0] == significance_capacity(e)


def test_denormal_capacity_zero():
    img = np.array([[1e-40, 1e-45]], dtype=np.float32)
    assert capacity(img).n.tolist() == [[0, 0]]


def test_capacity_rejects_negative():
    with pytest.raises(UnsuitableCoverError):
        capacity(np.array([[1.0, -0.5]], dtype=np.float32))


def test_capacity_rejects_nan():
    with pytest.raises(MalformedCoverError):
        capacity(np.array([[1.0, np.nan]], dtype=np.float32))


def test_plane_one_is_effective_lsb():
    assert plane_bit_index(16, 1) == 23
    assert plane_bit_index(15, 1) == 22  # E = 126, i.e. x in [0.5, 1)
    assert plane_bit_index(14, 14) == 8


def test_extract_planes_examples():
    img = np.array([[1.0, 1.2325828, 0.75]], dtype=np.float32)
    cap = capacity(img)
    stack = extract_planes(img, cap, 10)
    assert stack.planes[:, 0, 0].tolist() == [0] * 10
    assert stack.planes[0, 0, 1] == int(REFERENCE_WORDS[1.2325828][-1])
    assert stack.bitpos[0, 0, 2] == 22
    f = decompose(0.75)
    for k in range(1, 11):
        assert stack.planes[k - 1, 0, 2] == f.mantissa_bit(23 - k)


def test_extract_planes_never_touches_frozen_bits(small_scene):
    cap = capacity(small_scene)
    stack = extract_planes(small_scene, cap, cap.n_x)
    assert stack.bitpos.min() >= 8 and stack.bitpos.max() <= 23


def test_extract_planes_capacity_exceeded():
    img = np.array([[0.3167254, 2.0]], dtype=np.float32)
    with pytest.raises(CapacityExceededError):
        extract_planes(img, capacity(img), 15)


def test_write_planes_unchanged_is_identity(small_scene):
    stack = extract_planes(small_scene, capacity(small_scene), 6)
    out = write_planes(small_scene, stack)
    assert np.array_equal(out.view(np.uint32), small_scene.view(np.uint32))


def test_write_planes_flip_lsb_of_one():
    img = np.array([[1.0]], dtype=np.float32)
    stack = extract_planes(img, capacity(img), 1)
    stack.planes ^= 1
    out = write_planes(img, stack)
    assert float(out[0, 0]) == 1.0000001192092896
    assert float(out[0, 0]) - 1.0 == 2.0**-23


def test_write_planes_flip_bit22_exponent_126():
    x = 0.8125
    assert decompose(x).exponent == 126
    img = np.array([[x]], dtype=np.float32)
    stack = extract_planes(img, capacity(img), 1)
    assert stack.bitpos[0, 0, 0] == 22
    stack.planes ^= 1
    out = float(write_planes(img, stack)[0, 0])
    oracle = flip_mantissa_bit(x, 22)
    assert out == oracle
    # weight of mantissa bit b is 2**(E - 127 - b) = 2**-23 here
    assert abs(oracle - x) == 2.0**-23


def test_write_planes_change_magnitude(rng, small_scene):
    cap = capacity(small_scene)
    stack = extract_planes(small_scene, cap, 4)
    k = 3
    stack.planes[k - 1] ^= 1
    out = write_planes(small_scene, stack).astype(np.float64)
    e = decompose(small_scene[5, 9]).exponent
    b = int(plane_bit_index(int(cap.n[5, 9]), k))
    assert abs(out[5, 9] - small_scene[5, 9]) == 2.0 ** (e - 127 - b)


def test_write_planes_rejects_frozen_bit_positions():
    img = np.array([[1.0]], dtype=np.float32)
    stack = PlaneStack(np.ones((1, 1, 1), np.uint8), np.full((1, 1, 1), 7, np.uint8))
    with pytest.raises(ValueError):
        write_planes(img, stack)


@given(st.integers(0, 2**32 - 1), st.integers(1, 16))
def test_random_flips_keep_sign_exponent_and_fidelity(seed, k):
    r = np.random.default_rng(seed)
    e = r.integers(111 + k, 140, size=(4, 4))
    m = r.integers(0, 2**23, size=(4, 4))
    img = join_fields(0, e, m).astype(np.float32)
    cap = capacity(img)
    stack = extract_planes(img, cap, k)
    stack.planes ^= r.integers(0, 2, stack.planes.shape, dtype=np.uint8)
    out = write_planes(img, stack)
    s0, e0, _ = split_fields(img)
    s1, e1, _ = split_fields(out)
    assert np.array_equal(s0, s1) and np.array_equal(e0, e1)
    rel = np.abs(out.astype(np.float64) - img) / img
    assert (rel < 2.0**-7).all()
    assert capacity(out) == cap


def test_capacity_map_equality():
    a = CapacityMap(np.array([[1, 2]], np.uint8))
    assert a == CapacityMap(np.array([[1, 2]], np.uint8))
    assert a != CapacityMap(np.array([[1, 3]], np.uint8))
