"""Center-preserving crops and the tiling planner.

An object survives a crop only if its center lies in the closed window; a
fragment whose center was cut away is dropped rather than kept as a partial
box. Surviving annotations move into the window frame, and their boxes can be
clipped to the window (the center is kept exactly either way).
"""

from typing import Optional

from app.augment.schemas import CropManifest, CropTile, CropWindow
from app.core.config import LOGGER
from app.core.errors import InputContractError
from app.dataset.schemas import GroundTruth, GroundTruthDataset
from app.geometry.schemas import BBox, CenterPoint


def _translate(gt: GroundTruth, window: CropWindow, clip_boxes: bool) -> GroundTruth:
    box = gt.box
    x_min, y_min = box.x_min - window.x_min, box.y_min - window.y_min
    x_max, y_max = x_min + box.width, y_min + box.height
    if clip_boxes:
        cx_min, cy_min = max(x_min, 0.0), max(y_min, 0.0)
        cx_max, cy_max = min(x_max, window.width), min(y_max, window.height)
        if cx_max > cx_min and cy_max > cy_min:
            x_min, y_min, x_max, y_max = cx_min, cy_min, cx_max, cy_max
        else:
            # an explicit bbox that does not contain its center can clip to nothing
            LOGGER.debug(f"annotation {gt.id} on image {gt.image_id} clips to an empty box, kept unclipped")
    return gt.model_copy(update={
        "center": CenterPoint(x=gt.center.x - window.x_min, y=gt.center.y - window.y_min),
        "bbox": BBox(x_min=x_min, y_min=y_min, width=x_max - x_min, height=y_max - y_min),
    })


def crop_annotations(gts: list[GroundTruth], window: CropWindow, clip_boxes: bool = True) -> list[GroundTruth]:
    kept: list[GroundTruth] = []
    for gt in gts:
        if not window.contains(gt.center.x, gt.center.y):
            continue
        kept.append(_translate(gt, window, clip_boxes))
    return kept


def _axis_starts(length: float, tile: float, stride: float) -> list[float]:
    starts = [0.0]
    while starts[-1] + tile < length:
        nxt = starts[-1] + stride
        if nxt + tile > length:
            nxt = length - tile
        starts.append(nxt)
    return starts


def plan_tiles(
        image_extent: tuple[float, float],
        tile: tuple[float, float],
        overlap: float) -> list[CropWindow]:
    """Row-major windows covering the image; the last row/column is shifted inward."""
    image_w, image_h = image_extent
    tile_w, tile_h = tile
    if tile_w <= 0 or tile_h <= 0 or tile_w > image_w or tile_h > image_h:
        raise InputContractError(
            f"tile {tile_w}x{tile_h} must be positive and fit inside image {image_w}x{image_h}")
    if not 0 <= overlap < min(tile_w, tile_h):
        raise InputContractError(f"overlap must be in [0, {min(tile_w, tile_h)}), got {overlap}")

    xs = _axis_starts(image_w, tile_w, tile_w - overlap)
    ys = _axis_starts(image_h, tile_h, tile_h - overlap)
    return [
        CropWindow(x_min=x, x_max=x + tile_w, y_min=y, y_max=y + tile_h)
        for y in ys
        for x in xs
    ]


def build_crop_manifest(
        dataset: GroundTruthDataset,
        windows: Optional[list[CropWindow]] = None,
        tile: Optional[tuple[float, float]] = None,
        overlap: Optional[float] = None,
        clip_boxes: bool = True) -> CropManifest:
    """Crop every image either with explicit windows or with a tile plan."""
    if (windows is None) == (tile is None):
        raise InputContractError("give either explicit windows or a tile size, not both")
    if tile is not None and overlap is None:
        overlap = dataset_default_overlap(dataset)

    grouped = dataset.by_image()
    tiles: list[CropTile] = []
    for image in sorted(dataset.images, key=lambda im: im.id):
        image_windows = windows if windows is not None else plan_tiles((image.width, image.height), tile, overlap)
        for index, window in enumerate(image_windows):
            tiles.append(CropTile(
                image_id=image.id,
                tile_index=index,
                window=window,
                annotations=crop_annotations(grouped.get(image.id, []), window, clip_boxes),
            ))
    LOGGER.info(f"crop manifest: {len(tiles)} windows over {len(dataset.images)} images")
    return CropManifest(clip_boxes=clip_boxes, tiles=tiles)


def dataset_default_overlap(dataset: GroundTruthDataset) -> float:
    """Recommended overlap is one GT side so every box fits whole in some tile."""
    sides = {gt.gt_side for gt in dataset.annotations}
    return float(max(sides)) if sides else 0.0

