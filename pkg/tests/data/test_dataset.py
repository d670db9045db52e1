import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hafpn.core.tensor import FormatError
from hafpn.data.dataset import (
    load_ground_truth,
    parse_annotation_file,
    parse_annotations,
    parse_detections,
    read_class_table,
    read_detections,
    read_index,
    split_dataset,
    write_detections,
    write_split,
)
from hafpn.data.typing import SplitSpec


def test_annotation_to_pixel_box(tmp_path):
    path = tmp_path / "img7.txt"
    path.write_text("0 0.5 0.5 0.25 0.5\n\n1 0.25 0.75 0.5 0.5\n")
    boxes = parse_annotation_file(path, width=32, height=16)
    assert [b.image_id for b in boxes] == ["img7", "img7"]
    assert boxes[0].box == (12.0, 4.0, 20.0, 12.0)
    assert boxes[1].class_id == 1
    assert boxes[1].box == (0.0, 8.0, 16.0, 16.0)


@pytest.mark.parametrize(
    "line,width,height,box",
    [
        ("0 0.5 0.5 1.0 1.0", 100, 100, (0.0, 0.0, 100.0, 100.0)),
        ("1 0.25 0.25 0.5 0.5", 200, 100, (0.0, 0.0, 100.0, 50.0)),
    ],
)
def test_annotation_examples(tmp_path, line, width, height, box):
    path = tmp_path / "img.txt"
    path.write_text(line + "\n")
    (parsed,) = parse_annotation_file(path, width=width, height=height)
    assert parsed.box == box


@pytest.mark.parametrize(
    "line,message",
    [
        ("0 0.5 0.5 0.25", "expected 5 fields"),
        ("0 0.5 1.5 0.25 0.5", "outside"),
        ("0 0.5 0.5 0 0.5", "zero extent"),
        ("-1 0.5 0.5 0.25 0.5", "non-negative"),
        ("0 nan 0.5 0.25 0.5", "finite"),
        ("x 0.5 0.5 0.25 0.5", ""),
    ],
)
def test_annotation_errors_name_the_line(line, message):
    with pytest.raises(FormatError, match=rf"labels.txt:2: .*{message}"):
        parse_annotations(f"0 0.1 0.1 0.1 0.1\n{line}\n", "labels.txt")


def test_class_table_aliases(tmp_path):
    path = tmp_path / "classes.txt"
    path.write_text("0 Ineffective\n1 foot_shifting\n")
    assert read_class_table(path) == {0: "insufficient", 1: "shifting"}
    path.write_text("0 a\n0 b\n")
    with pytest.raises(FormatError, match="twice"):
        read_class_table(path)


def test_read_index(tmp_path):
    (tmp_path / "labels").mkdir()
    (tmp_path / "labels" / "a.txt").write_text("1 0.5 0.5 0.5 0.5\n")
    (tmp_path / "index.txt").write_text("a 8 8 labels/a.txt\n")
    index = read_index(tmp_path / "index.txt")
    assert index.ids == ["a"]
    assert index.classes == {0: "insufficient", 1: "shifting"}
    (box,) = load_ground_truth(index)
    assert box.box == (2.0, 2.0, 6.0, 6.0)


@pytest.mark.parametrize(
    "text,message",
    [
        ("a 8 8 a.txt\nb 8\n", "index.txt:2: expected 4 fields"),
        ("a 8 8 a.txt\nb 0 8 b.txt\n", "index.txt:2: dimensions"),
        ("a 8 8 a.txt\na 8 8 b.txt\n", "duplicate image id"),
    ],
)
def test_index_errors(tmp_path, text, message):
    (tmp_path / "index.txt").write_text(text)
    with pytest.raises(FormatError, match=message):
        read_index(tmp_path / "index.txt")


def test_unknown_class_in_annotations(tmp_path):
    (tmp_path / "a.txt").write_text("5 0.5 0.5 0.5 0.5\n")
    (tmp_path / "index.txt").write_text("a 8 8 a.txt\n")
    with pytest.raises(FormatError, match="unknown class 5"):
        load_ground_truth(read_index(tmp_path / "index.txt"))


def test_detections(tmp_path, two_class_fixture, caplog):
    dets, _ = two_class_fixture
    path = tmp_path / "dets.txt"
    write_detections(path, dets)
    assert read_detections(path) == dets
    with pytest.raises(FormatError, match="dets:1: score"):
        parse_detections("a 0 1.5 0 0 1 1\n", "dets")
    with pytest.raises(FormatError, match="degenerate"):
        parse_detections("a 0 0.5 2 0 1 1\n", "dets")
    path.write_text("")
    with caplog.at_level(logging.WARNING, logger="hafpn"):
        assert read_detections(path) == []
    assert "no detections" in caplog.text


@pytest.mark.parametrize("n,sizes", [(3154, (2524, 315, 315)), (10, (8, 1, 1))])
def test_split_sizes(n, sizes):
    split = split_dataset([f"img{i}" for i in range(n)], SplitSpec())
    assert tuple(len(part) for part in split) == sizes


def test_split_seed_changes_order_not_sizes():
    ids = [f"img{i}" for i in range(50)]
    a = split_dataset(ids, SplitSpec(seed=0))
    b = split_dataset(ids, SplitSpec(seed=1))
    assert [len(part) for part in a] == [len(part) for part in b]
    assert a.train != b.train
    assert sorted(a.train + a.val + a.test) == sorted(b.train + b.val + b.test)


def test_split_remainder_round_robin():
    split = split_dataset(list("abcde"), SplitSpec(0.5, 0.25, 0.25))
    # floor sizes 2/1/1, the one leftover goes to train
    assert tuple(len(part) for part in split) == (3, 1, 1)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 200),
    st.integers(0, 2**31),
    st.sampled_from(
        [(0.8, 0.1, 0.1), (0.7, 0.2, 0.1), (1.0, 0.0, 0.0), (0.6, 0.2, 0.2)]
    ),
)
def test_split_is_a_seeded_partition(n, seed, fractions):
    ids = [f"id{i}" for i in range(n)]
    spec = SplitSpec(*fractions, seed=seed)
    split = split_dataset(ids, spec)
    merged = split.train + split.val + split.test
    assert sorted(merged) == sorted(ids)
    assert len(set(merged)) == n
    assert split == split_dataset(ids, spec)


@pytest.mark.parametrize(
    "spec",
    [SplitSpec(0.5, 0.2, 0.2), SplitSpec(1.2, -0.1, -0.1), SplitSpec(0.7, 0.2, 0.2)],
)
def test_split_rejects_bad_fractions(spec):
    with pytest.raises(ValueError):
        split_dataset(["a", "b"], spec)


def test_split_rejects_bad_ids():
    with pytest.raises(ValueError):
        split_dataset([], SplitSpec())
    with pytest.raises(ValueError):
        split_dataset(["a", "a"], SplitSpec())


def test_write_split_is_reproducible(tmp_path, synthetic_dataset):
    index = read_index(synthetic_dataset / "index.txt")
    first = write_split(split_dataset(index, SplitSpec(seed=9)), tmp_path / "one")
    second = write_split(split_dataset(index, SplitSpec(seed=9)), tmp_path / "two")
    assert [p.name for p in first] == ["train.txt", "val.txt", "test.txt"]
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
    ids = sum((p.read_text().split() for p in first), [])
    assert sorted(ids) == index.ids
