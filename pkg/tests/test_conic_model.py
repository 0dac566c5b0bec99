import numpy as np
import pytest

from persagg.conic_model import (
    EQ,
    LE,
    ConicModel,
    emit_conic_text,
    emit_json,
    parse_conic_text,
    parse_json,
)


def small_model():
    m = ConicModel(name="demo")
    x = m.add_var(0.0, 2.0, tag="x")
    y = m.add_var(0.0, 1.0, integer=True, tag="y")
    t = m.add_var(0.0, 4.0, tag="t")
    m.add_row([(x, 1.0), (y, -2.0)], LE, 0.5)
    m.add_row([(t, 1.0), (x, -1.0)], EQ, 0.0)
    m.add_rsoc(y, t, [x])
    m.add_objective(x, 1.5)
    m.add_objective(y, 3.0)
    m.obj_const = -1.0
    return m


def random_model(rng):
    m = ConicModel(name=f"rnd{rng.integers(1000)}")
    n = int(rng.integers(2, 9))
    for i in range(n):
        lo = float(rng.uniform(-5, 0))
        up = lo + float(rng.uniform(0, 5))
        m.add_var(lo, up, integer=bool(rng.random() < 0.3), tag=f"v{i}")
    for _ in range(int(rng.integers(1, 5))):
        idx = rng.choice(n, size=min(n, 3), replace=False)
        m.add_row(
            [(int(i), float(rng.standard_normal())) for i in idx],
            LE if rng.random() < 0.7 else EQ,
            float(rng.standard_normal()),
        )
    if n >= 3:
        m.add_rsoc(0, 1, [2])
    for i in range(n):
        m.add_objective(i, float(np.round(rng.standard_normal(), 6)))
    return m


def test_text_round_trip_exact():
    m = small_model()
    data = emit_conic_text(m)
    again = emit_conic_text(parse_conic_text(data))
    assert data == again


def test_json_round_trip_exact():
    m = small_model()
    data = emit_json(m)
    again = emit_json(parse_json(data))
    assert data == again


def test_round_trip_many_random_models():
    rng = np.random.default_rng(123)
    for _ in range(50):
        m = random_model(rng)
        data = emit_conic_text(m)
        m2 = parse_conic_text(data)
        assert emit_conic_text(m2) == data
        assert m.structurally_equal(m2)


def test_smallest_model_is_four_lines():
    m = ConicModel()
    text = emit_conic_text(m).decode()
    # header, OBJ, END plus trailing newline
    assert text == "CONICTEXT 1\nOBJ 0\nEND\n"


def test_parse_rejects_bad_header():
    with pytest.raises(ValueError):
        parse_conic_text(b"NOPE\nEND\n")


def test_parse_rejects_missing_end():
    with pytest.raises(ValueError):
        parse_conic_text(b"CONICTEXT 1\nOBJ 0\n")


def test_parse_rejects_cone_count_mismatch():
    data = b"CONICTEXT 1\nVAR 0 0 1 C x\nVAR 1 0 1 C y\nRSOC 3: 0 1\nOBJ 0\nEND\n"
    with pytest.raises(ValueError):
        parse_conic_text(data)


def test_infinite_bounds_survive():
    m = ConicModel()
    m.add_var(float("-inf"), float("inf"), tag="free")
    m2 = parse_conic_text(emit_conic_text(m))
    assert m2.lower[0] == float("-inf") and m2.upper[0] == float("inf")


def test_copy_with_bounds_shares_rows():
    m = small_model()
    c = m.copy_with_bounds([0.0, 1.0, 0.0], [1.0, 1.0, 2.0])
    assert c.rows is m.rows and c.cones is m.cones
    assert c.upper[0] == 1.0 and m.upper[0] == 2.0


def test_objective_value_and_activity():
    m = small_model()
    x = [1.0, 1.0, 1.0]
    assert m.objective_value(x) == pytest.approx(1.5 + 3.0 - 1.0)
    assert m.rows[0].activity(x) == pytest.approx(-1.0)
