"""Top-down raster of the scene for the vision-language planner.

Pixels are drawn with plain array math (no plotting library), so identical
worlds render to identical bytes.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass

import numpy as np

from ..sim import VehicleGeometry
from ..world import WorldState

ROAD_COLOR = (60, 60, 60)
LANE_LINE_COLOR = (200, 200, 200)
EGO_COLOR = (40, 220, 40)
VEHICLE_COLOR = (70, 130, 230)
ID_COLOR = (255, 255, 255)

# 3x5 bitmap digits for vehicle ids.
_DIGITS = {
    "0": ("111", "101", "101", "101", "111"),
    "1": ("010", "110", "010", "010", "111"),
    "2": ("111", "001", "111", "100", "111"),
    "3": ("111", "001", "111", "001", "111"),
    "4": ("101", "101", "111", "001", "001"),
    "5": ("111", "100", "111", "001", "111"),
    "6": ("111", "100", "111", "101", "111"),
    "7": ("111", "001", "010", "010", "010"),
    "8": ("111", "101", "111", "101", "111"),
    "9": ("111", "101", "111", "001", "111"),
}


@dataclass(frozen=True)
class BevConfig:
    width_px: int = 400
    height_px: int = 120
    ahead_m: float = 100.0  # view window relative to the ego [m]
    behind_m: float = 20.0
    show_ids: bool = True
    margin_m: float = 2.0  # padding beyond the road edges [m]


def render_bev(
    world: WorldState, cfg: BevConfig = BevConfig(), geometry: VehicleGeometry = VehicleGeometry()
) -> np.ndarray:
    """Render an (H, W, 3) uint8 image; ego-relative window, north-up lanes."""
    img = np.zeros((cfg.height_px, cfg.width_px, 3), dtype=np.uint8)
    img[:, :] = ROAD_COLOR

    x0 = world.ego.x - cfg.behind_m
    sx = cfg.width_px / (cfg.ahead_m + cfg.behind_m)
    lanes = world.lanes
    y_top = lanes.y_min - cfg.margin_m
    sy = cfg.height_px / ((lanes.y_max + cfg.margin_m) - y_top)

    def to_px(x: float, y: float) -> tuple[float, float]:
        return (x - x0) * sx, (y - y_top) * sy

    # Lane boundary lines.
    for i in range(lanes.count + 1):
        y_line = lanes.y_min + i * lanes.width
        _, py = to_px(0.0, y_line)
        row = int(py)
        if 0 <= row < cfg.height_px:
            img[row, :] = LANE_LINE_COLOR

    cols, rows = np.meshgrid(np.arange(cfg.width_px), np.arange(cfg.height_px))
    px_x = cols + 0.5
    px_y = rows + 0.5

    def fill_rect(cx: float, cy: float, heading: float, color) -> None:
        pcx, pcy = to_px(cx, cy)
        dx = (px_x - pcx) / sx
        dy = (px_y - pcy) / sy
        c, s = np.cos(heading), np.sin(heading)
        longi = dx * c + dy * s
        lat = -dx * s + dy * c
        mask = (np.abs(longi) <= geometry.length / 2) & (np.abs(lat) <= geometry.width / 2)
        img[mask] = color

    def draw_id(cx: float, cy: float, vid: int) -> None:
        pcx, pcy = to_px(cx, cy)
        text = str(vid)
        total_w = 4 * len(text) - 1
        left = int(round(pcx - total_w / 2))
        top = int(round(pcy - 2.5))
        for ch in text:
            glyph = _DIGITS.get(ch)
            if glyph is None:
                continue
            for r, line in enumerate(glyph):
                for col, bit in enumerate(line):
                    if bit == "1":
                        rr, cc = top + r, left + col
                        if 0 <= rr < cfg.height_px and 0 <= cc < cfg.width_px:
                            img[rr, cc] = ID_COLOR
            left += 4

    for veh in world.vehicles:
        fill_rect(veh.state.x, veh.state.y, 0.0, VEHICLE_COLOR)
    fill_rect(world.ego.x, world.ego.y, world.ego.theta, EGO_COLOR)
    if cfg.show_ids:
        for veh in world.vehicles:
            draw_id(veh.state.x, veh.state.y, veh.vid)
    return img


def png_bytes(img: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(img, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def image_sha256(img: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(img).tobytes()).hexdigest()
