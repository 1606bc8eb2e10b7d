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

"""Python bindings for the SDM engine."""

from ._sdm_core import (
    SdmError,
    __version__,
    bbox,
    coco_eval,
    config_schema,
    decode_rle,
    encode_rle,
    mask_nms,
    mask_to_polygons,
    match,
    render_prompt,
    run_pipeline,
    voc_eval,
)

__all__ = [
    "SdmError",
    "__version__",
    "bbox",
    "coco_eval",
    "config_schema",
    "decode_rle",
    "encode_rle",
    "mask_nms",
    "mask_to_polygons",
    "match",
    "render_prompt",
    "run_pipeline",
    "voc_eval",
]
