"""Trace overlays drawn over a downscaled canvas of the searched image."""
import logging

from PIL import Image, ImageDraw

from .exceptions import DataError
from .heatmap import save_image

logger = logging.getLogger(__name__)

BACKGROUND = (40, 40, 40)
PATCH_COLOR = (255, 196, 0)
FOUND_COLOR = (0, 220, 90)


def _scaler(root, canvas_side):
    scale = canvas_side / max(root.w, root.h)

    def to_canvas(r):
        x1, y1 = (r.x - root.x) * scale, (r.y - root.y) * scale
        x2, y2 = (r.x2 - root.x) * scale - 1, (r.y2 - root.y) * scale - 1
        return [x1, y1, max(x1, x2), max(y1, y2)]

    size = (max(1, round(root.w * scale)), max(1, round(root.h * scale)))
    return size, to_canvas


def render_trace(trace, image_path=None, canvas_side=512):
    """Overlay of `trace` as a Pillow RGB image."""
    if not trace.steps:
        raise DataError('trace has no steps to draw')
    root = trace.steps[0].node.patch
    size, to_canvas = _scaler(root, canvas_side)

    if image_path is not None:
        with Image.open(image_path) as img:
            canvas = img.convert('RGB').crop((root.x, root.y, root.x2, root.y2)).resize(size)
    else:
        canvas = Image.new('RGB', size, BACKGROUND)

    draw = ImageDraw.Draw(canvas)
    for step in trace.steps:
        box = to_canvas(step.node.patch)
        draw.rectangle(box, outline=PATCH_COLOR, width=2)
        draw.text((box[0] + 4, box[1] + 2), str(step.index), fill=PATCH_COLOR)

    outcome = trace.outcome
    if outcome is not None and outcome.box is not None:
        draw.rectangle(to_canvas(outcome.box), outline=FOUND_COLOR, width=3)
    return canvas


def write_trace_overlay(trace, path, image_path=None, canvas_side=512):
    written = save_image(render_trace(trace, image_path, canvas_side), path)
    logger.info('wrote %d-step overlay for %r to %s', len(trace.steps), trace.target, written)
    return written
