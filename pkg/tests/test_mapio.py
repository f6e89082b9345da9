import pytest

from bpmstar.domain import GridMap, Instance, generate_instance
from bpmstar.mapio import (
    ParseError,
    load_instance,
    load_internal,
    parse_map,
    write_instance,
    write_movingai,
)

MINI_MAP = b"type octile\nheight 2\nwidth 2\nmap\n..\n..\n"
MINI_SCEN = b"version 1\n0\tmini\t2\t2\t0\t0\t1\t1\t2\n"


def test_minimal_pair():
    inst = load_instance(MINI_MAP, MINI_SCEN, 1)
    assert inst.n_agents == 1
    # scen fields are col,row ordered
    assert inst.starts == ((0, 0),)
    assert inst.goals == ((1, 1),)


def test_height_mismatch_is_error():
    bad = b"type octile\nheight 2\nwidth 2\nmap\n..\n..\n..\n"
    with pytest.raises(ParseError):
        parse_map(bad)


def test_row_width_mismatch_names_line():
    bad = b"type octile\nheight 2\nwidth 3\nmap\n...\n..\n"
    with pytest.raises(ParseError) as err:
        parse_map(bad)
    assert "line 6" in str(err.value)


def test_obstacle_chars():
    text = b"type octile\nheight 2\nwidth 3\nmap\n.@T\n...\n"
    g = parse_map(text)
    assert g.obstacles == {(0, 1), (0, 2)}


def test_scen_takes_first_n_rows_in_order():
    # 8x8 open map with 12 scenario rows; ask for 5
    rows = ["type octile", "height 8", "width 8", "map"] + ["." * 8] * 8
    map_text = "\n".join(rows).encode()
    scen_rows = ["version 1"]
    expected_starts = []
    expected_goals = []
    for k in range(12):
        s_col, s_row, g_col, g_row = k % 8, k // 8, (k + 3) % 8, 7 - k % 8
        scen_rows.append(f"0\tbig\t8\t8\t{s_col}\t{s_row}\t{g_col}\t{g_row}\t1")
        if k < 5:
            expected_starts.append((s_row, s_col))
            expected_goals.append((g_row, g_col))
    inst = load_instance(map_text, "\n".join(scen_rows).encode(), 5)
    assert list(inst.starts) == expected_starts
    assert list(inst.goals) == expected_goals


def test_scen_with_too_few_rows():
    with pytest.raises(ParseError):
        load_instance(MINI_MAP, MINI_SCEN, 3)


def test_start_on_obstacle_rejected():
    map_text = b"type octile\nheight 2\nwidth 2\nmap\n@.\n..\n"
    with pytest.raises(ParseError):
        load_instance(map_text, MINI_SCEN, 1)


class TestInternalFormat:
    def test_round_trip_simple(self):
        g = GridMap(width=3, height=2, obstacles=frozenset([(1, 2)]))
        inst = Instance(grid=g, starts=((0, 0), (1, 0)), goals=((0, 2), (1, 1)))
        assert load_internal(write_instance(inst)) == inst

    def test_empty_obstacles_renders_dots(self):
        g = GridMap(width=3, height=2)
        inst = Instance(grid=g, starts=((0, 0),), goals=((1, 2),))
        body = write_instance(inst).decode()
        assert body.splitlines()[1:3] == ["...", "..."]

    def test_fuzz_round_trip_byte_identical(self):
        # second serialization must be byte-identical to the first
        for seed in range(100):
            inst = generate_instance(2, seed=seed, density=0.05)
            data = write_instance(inst)
            again = load_internal(data)
            assert again == inst
            assert write_instance(again) == data

    def test_malformed_agent_line(self):
        with pytest.raises(ParseError):
            load_internal(b"1 2\n..\n0 0 0\n")


class TestMovingAIRoundTrip:
    def test_round_trip(self):
        for seed in range(25):
            inst = generate_instance(3, seed=seed, density=0.05)
            map_b, scen_b = write_movingai(inst)
            again = load_instance(map_b, scen_b, inst.n_agents)
            assert again == inst

    def test_movingai_bytes_stable(self):
        inst = generate_instance(2, seed=9, density=0.05)
        assert write_movingai(inst) == write_movingai(inst)
