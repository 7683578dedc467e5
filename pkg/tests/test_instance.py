import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iwcea.instance import (ITEM_EXCEEDS_CAPACITY, NONPOSITIVE_PROFIT, SLACK_CONSTRAINT,
                            InstanceFormatError, MkpInstance, generate_random, load,
                            parse_orlib, preprocess, serialize_orlib, validate)


def test_parse_minimal():
    (inst,) = parse_orlib("1  2 1 0  10 7  3 4  5")
    assert inst.n == 2 and inst.m == 1
    assert inst.p.tolist() == [10, 7]
    assert inst.r.tolist() == [[3, 4]]
    assert inst.b.tolist() == [5]
    assert inst.known_best is None


def test_parse_five_item_example(vh5):
    (inst,) = parse_orlib("1 5 1 0 12 12 9 8 8 11 12 10 10 10 30")
    assert inst.p.tolist() == [12, 12, 9, 8, 8]
    assert inst.r.tolist() == [[11, 12, 10, 10, 10]]
    assert inst.b.tolist() == [30]
    assert np.array_equal(inst.r, vh5.r)


def test_parse_known_best_and_order():
    text = "2\n2 1 17\n10 7\n3 4\n5\n1 2 0\n4\n1\n2\n3 3\n"
    a, b = parse_orlib(text, name="f")
    assert a.known_best == 17 and a.name == "f.00"
    assert b.known_best is None and b.m == 2 and b.r.tolist() == [[1], [2]]


@pytest.mark.parametrize("text, msg, pos", [
    ("1 2 1 0 10 7 3 4", "truncated", 8),
    ("1 2 1 0 10 x 3 4 5", "non-numeric", 5),
    ("1 0 1 0", "positive integer", 1),
    ("1 2 -1 0 1 1 1 1 1", "positive integer", 2),
    ("1 2 1 0 10 7 3 4 5 6", "unconsumed", 9),
])
def test_parse_errors(text, msg, pos):
    with pytest.raises(InstanceFormatError, match=msg) as err:
        parse_orlib(text)
    assert err.value.position == pos


def test_real_cb_file(data_dir):
    (inst,) = load(data_dir / "mknapcb5-01.txt")
    assert (inst.n, inst.m) == (250, 10)
    assert validate(inst).ok
    assert inst.p[:3].tolist() == [992, 612, 582]


def test_validate_five_item(vh5):
    assert validate(vh5).violations == []


def test_validate_nonpositive_profit():
    rep = validate(MkpInstance([0, 5], [[1, 1]], [1.5]))
    assert (NONPOSITIVE_PROFIT, None, 1) in rep.violations


def test_validate_item_exceeds():
    rep = validate(MkpInstance([1], [[6]], [5]))
    assert (ITEM_EXCEEDS_CAPACITY, 1, 1) in rep.violations


def test_validate_slack_constraint():
    rep = validate(MkpInstance([1, 1], [[1, 1], [2, 2]], [5, 3]))
    assert rep.violations == [(SLACK_CONSTRAINT, 1, None)]


def test_validate_does_not_mutate(vh5):
    before = vh5.r.copy()
    validate(vh5)
    assert np.array_equal(before, vh5.r)
    with pytest.raises(ValueError):
        vh5.r[0, 0] = 1


def test_preprocess_fixes_and_drops():
    inst = MkpInstance([3, 4, 5], [[1, 9, 1], [1, 1, 1]], [5, 10])
    pre = preprocess(inst)
    assert pre.fixed_zero == (1,)
    assert pre.dropped_constraints == (0, 1)
    assert pre.instance.n == 2
    assert pre.lift(np.array([1, 1]), 3).tolist() == [1, 0, 1]


def test_generate_tightness_and_determinism():
    a = generate_random(40, 3, 0.3, seed=5)
    b = generate_random(40, 3, 0.3, seed=5)
    assert a == b
    assert np.allclose(a.b / a.r.sum(axis=1), 0.3, rtol=0, atol=1e-12)
    assert generate_random(40, 3, 0.3, seed=6) != a


@pytest.mark.parametrize("seed", range(20))
def test_generated_instances_are_well_stated(seed):
    inst = generate_random(100, 5, 0.5, seed)
    assert validate(inst).ok
    assert np.all(inst.r <= inst.b[:, None])


def test_generate_correlated_profiles():
    inst = generate_random(100, 5, 0.5, 1, correlated=True)
    base = inst.r.sum(axis=0) / 5
    assert np.all(inst.p >= np.floor(base)) and np.all(inst.p <= base + 500)


@pytest.mark.parametrize("alpha", [0, 1, -0.2, 1.5])
def test_generate_rejects_alpha(alpha):
    with pytest.raises(ValueError, match="alpha"):
        generate_random(5, 2, alpha, 0)


def test_generate_rejects_empty_range():
    with pytest.raises(ValueError, match="range"):
        generate_random(5, 2, 0.5, 0, profit_range=(10, 1))


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 12),
    m=st.integers(1, 4),
    seed=st.integers(0, 2**32 - 1),
    known=st.sampled_from([None, 123, 4567]),
    integral=st.booleans(),
)
def test_serialize_roundtrip(n, m, seed, known, integral):
    rng = np.random.default_rng(seed)
    if integral:
        p, r = rng.integers(1, 1000, n), rng.integers(0, 1000, (m, n))
    else:
        p, r = rng.uniform(0.1, 10, n), rng.uniform(0, 10, (m, n))
    inst = MkpInstance(p, r, r.sum(axis=1) * 0.5 + 1, name="x", known_best=known)
    for header in ("count", "single"):
        (back,) = parse_orlib(serialize_orlib([inst], header=header), name="x", header=header)
        assert back == inst


def test_multi_instance_roundtrip():
    insts = [generate_random(7, 2, 0.5, s, name=f"f.{s:02d}") for s in range(3)]
    back = parse_orlib(serialize_orlib(insts), name="f")
    assert back == insts
