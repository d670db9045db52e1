import numpy as np
import pytest

from hafpn.core.tensor import ShapeError
from hafpn.evaluation.decode import decode_boxes


def test_square_blob_decodes_to_scaled_box():
    magnitude = np.zeros((8, 8))
    magnitude[2:5, 2:5] = 1.0
    (det,) = decode_boxes(magnitude, (32, 32), "img")
    assert det.image_id == "img"
    assert det.class_id == 0
    assert det.score == 1.0
    assert det.box == (8.0, 8.0, 20.0, 20.0)


def test_elongated_blob_is_shifting():
    magnitude = np.zeros((8, 8))
    magnitude[1, 0:6] = 2.0
    magnitude[6:8, 6:8] = 1.5
    dets = sorted(decode_boxes(magnitude, (16, 16), "img"), key=lambda d: d.y1)
    assert [d.class_id for d in dets] == [1, 0]
    assert dets[1].score == pytest.approx(0.75)


def test_threshold_splits_regions():
    magnitude = np.array([[1.0, 0.4, 1.0, 0.0]])
    assert len(decode_boxes(magnitude, (8, 32), "img", threshold=0.5)) == 2
    assert len(decode_boxes(magnitude, (8, 32), "img", threshold=0.3)) == 1


def test_constant_map_has_no_boxes():
    assert decode_boxes(np.ones((4, 4)), (16, 16), "img") == []


def test_decode_needs_2d_map():
    with pytest.raises(ShapeError):
        decode_boxes(np.zeros((1, 4, 4)), (16, 16), "img")
