from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .exceptions import HeatmapError
from .geometry import Rect


@dataclass(frozen=True, eq=False)
class Heatmap:
    values: np.ndarray
    frame: Rect

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise HeatmapError(f'heatmap values must be a 2D grid, got shape {values.shape}')
        if values.size == 0:
            raise HeatmapError('heatmap grid must have at least one cell')
        if not np.all(np.isfinite(values)):
            raise HeatmapError('heatmap values must all be finite')
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, frame, grid=(16, 16)):
        width, height = grid
        return cls(np.zeros((height, width)), frame)

    @classmethod
    def from_list(cls, width, height, values, frame):
        if width * height != len(values):
            raise HeatmapError(
                f'{width}x{height} heatmap needs {width * height} values, got {len(values)}'
            )
        return cls(np.asarray(values, dtype=np.float64).reshape(height, width), frame)

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def height(self):
        return self.values.shape[0]

    def cell_centers(self):
        """Pixel x coordinates of the column centers and y coordinates of the row centers."""
        xs = self.frame.x + (np.arange(self.width) + 0.5) * (self.frame.w / self.width)
        ys = self.frame.y + (np.arange(self.height) + 0.5) * (self.frame.h / self.height)
        return xs, ys

    def scaled(self, k):
        return Heatmap(self.values * k, self.frame)

    def to_list(self):
        return [float(v) for v in self.values.ravel()]


@dataclass(frozen=True)
class FixationSequence:
    points: tuple
    image_extent: Rect

    def __post_init__(self):
        points = tuple((float(x), float(y)) for x, y in self.points)
        extent = self.image_extent
        for x, y in points:
            if not (extent.x <= x <= extent.x2 and extent.y <= y <= extent.y2):
                raise HeatmapError(f'fixation ({x}, {y}) lies outside {extent.corners()}')
        object.__setattr__(self, 'points', points)


def max_value(h):
    return float(h.values.max())


def patch_priority(h, patch):
    """
    Search priority of `patch`: the largest score among the cells whose
    centers fall inside it, or the score of the cell nearest to the patch
    center when the patch is smaller than a cell.
    """
    if not h.frame.contains(patch):
        raise HeatmapError(f'patch {patch.corners()} is not inside frame {h.frame.corners()}')
    xs, ys = h.cell_centers()
    cols = (xs >= patch.x) & (xs < patch.x2)
    rows = (ys >= patch.y) & (ys < patch.y2)
    if cols.any() and rows.any():
        return float(h.values[np.ix_(rows, cols)].max())

    px, py = patch.center
    dist = (xs[np.newaxis, :] - px) ** 2 + (ys[:, np.newaxis] - py) ** 2
    row, col = np.unravel_index(np.argmin(dist), dist.shape)
    return float(h.values[row, col])


def _validate_fixation_args(gamma, sigma):
    if not 0 < gamma < 1:
        raise HeatmapError(f'gamma must lie in (0, 1), got {gamma}')
    if sigma <= 0:
        raise HeatmapError(f'sigma must be positive, got {sigma}')


def default_sigma(extent):
    return max(extent.w, extent.h) / 16


def fixation_density(f, gamma, sigma, frame, grid):
    """Unscaled sum of gamma**i weighted Gaussians, sampled on a grid over `frame`."""
    _validate_fixation_args(gamma, sigma)
    canvas = Heatmap.zeros(frame, grid)
    xs, ys = canvas.cell_centers()
    values = np.zeros((canvas.height, canvas.width))
    for i, (fx, fy) in enumerate(f.points):
        d2 = (xs[np.newaxis, :] - fx) ** 2 + (ys[:, np.newaxis] - fy) ** 2
        values += gamma ** i * np.exp(-d2 / (2 * sigma ** 2))
    return values


def fixation_scale(f, gamma, sigma, grid, amplitude=6.0):
    """Factor that brings the global maximum of the fixation heatmap to `amplitude`."""
    if not f.points:
        return 0.0
    peak = fixation_density(f, gamma, sigma, f.image_extent, grid).max()
    return amplitude / peak if peak > 0 else 0.0


def fixations_to_heatmap(f, gamma, sigma=None, grid=(64, 64), amplitude=6.0):
    sigma = default_sigma(f.image_extent) if sigma is None else sigma
    values = fixation_density(f, gamma, sigma, f.image_extent, grid)
    return Heatmap(values * fixation_scale(f, gamma, sigma, grid, amplitude), f.image_extent)


def render_heatmap(h):
    """Grayscale buffer (height x width, uint8), min mapped to 0 and max to 255."""
    lo, hi = h.values.min(), h.values.max()
    if hi == lo:
        return np.zeros(h.values.shape, dtype=np.uint8)
    return np.rint((h.values - lo) / (hi - lo) * 255).astype(np.uint8)


_PNM_SUFFIXES = {'.pgm', '.ppm', '.pnm'}


def save_image(image, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    image_format = 'PPM' if path.suffix.lower() in _PNM_SUFFIXES else 'PNG'
    image.save(path, format=image_format)
    return path


def write_heatmap_image(h, path, cell_px=16):
    """Write the rendered heatmap as PNG, or as binary PGM (P5) for .pgm/.ppm paths."""
    image = Image.fromarray(render_heatmap(h))
    image = image.resize((h.width * cell_px, h.height * cell_px), Image.Resampling.NEAREST)
    return save_image(image, path)
