# Copyright 2026 The SDM Engine Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

import sdm_engine as sdm

TOOLS = Path(os.environ.get("SDM_TOOLS_DIR", ""))


def rect(h, w, x, y, rw, rh):
    m = np.zeros((h, w), dtype=bool)
    m[y : y + rh, x : x + rw] = True
    return m


def test_rle_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = rng.random((7, 5)) < 0.4
        rle = sdm.encode_rle(m)
        assert rle["size"] == [7, 5]
        assert sum(rle["counts"]) == 35
        assert (sdm.decode_rle(rle["size"], rle["counts"]) == m).all()
    assert sdm.encode_rle(rect(3, 3, 1, 1, 1, 1))["counts"] == [4, 1, 4]


def test_malformed_rle_raises_with_code():
    with pytest.raises(sdm.SdmError) as info:
        sdm.decode_rle([2, 2], [1, 1])
    assert info.value.code == "MalformedRle"


def test_mask_nms_keeps_higher_stability():
    a = rect(10, 10, 0, 0, 6, 6)
    b = rect(10, 10, 0, 0, 5, 5)
    c = rect(10, 10, 5, 5, 1, 1)
    out = sdm.mask_nms([a, b, c], [0.8, 0.9, 0.7])
    assert out["kept"] == [1]
    assert [s["index"] for s in out["suppressed"]] == [0, 2]
    assert sdm.mask_nms([a, b, c], [0.8, 0.9, 0.7], break_on_suppress=True)["kept"] == [1, 2]


def test_match_argmax_and_runner_up():
    seg = np.array([[1.0, 0.1], [0.0, 3.0]], dtype=np.float32)
    txt = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=np.float32)
    rows = sdm.match(seg, txt)
    assert [r["class_index"] for r in rows] == [0, 1]
    assert rows[1]["similarity"] == pytest.approx(1.0)
    assert rows[0]["runner_up"]["class_index"] == 1


def test_polygons_and_prompt():
    polys = sdm.mask_to_polygons(rect(10, 12, 1, 1, 4, 3))
    assert len(polys) == 1 and len(polys[0]) == 4
    assert sdm.bbox(rect(10, 12, 1, 1, 4, 3)) == [1, 1, 4, 3]
    assert sdm.render_prompt("strawberry", color="red", shape="conical", feature="a green calyx") == (
        "a red conical strawberry with a green calyx"
    )


def test_voc_eval_hand_case():
    gt = np.ones((4, 4), dtype=np.uint8)
    gt[2:] = 2
    pred = np.ones((4, 4), dtype=np.uint8)
    r = sdm.voc_eval([gt], [pred], 2)
    assert r["mIoU"] == pytest.approx(0.25)
    assert r["FWIoU"] == pytest.approx(0.25)


@pytest.mark.skipif(not (TOOLS / "sdm_synth").exists(), reason="tools not built")
def test_pipeline_on_synthetic_corpus(tmp_path):
    subprocess.run([str(TOOLS / "sdm_synth"), "--out", str(tmp_path / "c"), "--count", "3", "--seed", "5"], check=True)
    cfg = {
        "images_dir": "c/images",
        "prompts": "c/prompts.json",
        "segments": {"adapter": str(TOOLS / "sdm_stub_segmenter")},
        "embeddings": {"adapter": str(TOOLS / "sdm_stub_embedder")},
        "export": {"formats": ["coco", "yolo-det"], "out_dir": "out"},
        "gt": "c/gt.json",
    }
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    record = sdm.run_pipeline(str(tmp_path / "cfg.json"))
    assert all(img["ok"] for img in record["images"]) and len(record["images"]) == 3
    coco = tmp_path / "out" / "coco" / "instances.json"
    report = sdm.coco_eval(str(tmp_path / "c" / "gt.json"), str(coco), kind="mask")
    assert report["mAP50"] >= 0.95
    assert "properties" in sdm.config_schema()
