"""Integer pixel rectangles; the far corner (x + w, y + h) is exclusive."""
from dataclasses import dataclass
from enum import Enum

from .exceptions import GeometryError


class Orientation(str, Enum):
    LANDSCAPE = 'landscape'
    PORTRAIT = 'portrait'
    BALANCED = 'balanced'


@dataclass(frozen=True, slots=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        for name in ('x', 'y', 'w', 'h'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise GeometryError(f'Rect.{name} must be an integer, got {value!r}')
        if self.x < 0 or self.y < 0:
            raise GeometryError(f'Rect origin must be non-negative, got ({self.x}, {self.y})')
        if self.w < 1 or self.h < 1:
            raise GeometryError(f'Rect sides must be >= 1, got {self.w}x{self.h}')

    @classmethod
    def from_corners(cls, x1, y1, x2, y2):
        return cls(int(x1), int(y1), int(x2) - int(x1), int(y2) - int(y1))

    @property
    def x2(self):
        return self.x + self.w

    @property
    def y2(self):
        return self.y + self.h

    @property
    def area(self):
        return self.w * self.h

    @property
    def center(self):
        return (self.x + self.w / 2, self.y + self.h / 2)

    @property
    def shorter_side(self):
        return min(self.w, self.h)

    def corners(self):
        return [self.x, self.y, self.x2, self.y2]

    def contains_point(self, px, py):
        # Half-open, so a partition assigns every point to exactly one child.
        return self.x <= px < self.x2 and self.y <= py < self.y2

    def contains(self, other):
        return (self.x <= other.x and self.y <= other.y
                and other.x2 <= self.x2 and other.y2 <= self.y2)

    def intersects(self, other):
        return (self.x < other.x2 and other.x < self.x2
                and self.y < other.y2 and other.y < self.y2)

    def intersection(self, other):
        if not self.intersects(other):
            return None
        return Rect.from_corners(
            max(self.x, other.x), max(self.y, other.y),
            min(self.x2, other.x2), min(self.y2, other.y2),
        )

    def expand(self, dx, dy):
        """Grow by dx on the left and right and dy on top and bottom, stopping at 0."""
        x1 = max(0, self.x - dx)
        y1 = max(0, self.y - dy)
        return Rect.from_corners(x1, y1, self.x2 + dx, self.y2 + dy)

    def clip(self, bounds):
        clipped = self.intersection(bounds)
        if clipped is None:
            raise GeometryError(f'{self} lies outside {bounds}')
        return clipped

    def union(self, other):
        return Rect.from_corners(
            min(self.x, other.x), min(self.y, other.y),
            max(self.x2, other.x2), max(self.y2, other.y2),
        )


def orientation(r):
    if r.w > 2 * r.h:
        return Orientation.LANDSCAPE
    if r.h > 2 * r.w:
        return Orientation.PORTRAIT
    return Orientation.BALANCED


_LAYOUTS = {
    Orientation.BALANCED: (2, 2),
    Orientation.LANDSCAPE: (4, 1),
    Orientation.PORTRAIT: (1, 4),
}


def _split(total, parts):
    base, extra = divmod(total, parts)
    return [base + 1 if i < extra else base for i in range(parts)]


def _tile(r, widths, heights):
    children = []
    y = r.y
    for h in heights:
        x = r.x
        for w in widths:
            children.append(Rect(x, y, w, h))
            x += w
        y += h
    return children


def subdivide(r, min_side=224):
    """
    Split `r` into 4 children in raster order, or return [] when `r` is a leaf.

    Balanced patches become a 2x2 grid, landscape patches 4 columns and
    portrait patches 4 rows. Remainder pixels go to the earlier children.
    """
    if min_side < 1:
        raise GeometryError(f'min_side must be >= 1, got {min_side}')
    cols, rows = _LAYOUTS[orientation(r)]
    widths = _split(r.w, cols)
    heights = _split(r.h, rows)
    if min(min(widths), min(heights)) < min_side:
        return []
    return _tile(r, widths, heights)


def quadrants(r):
    """The 2x2 grid over `r` whatever its orientation, in raster order."""
    return _tile(r, _split(r.w, 2), _split(r.h, 2))


def to_root_frame(child_box, patch):
    if child_box.x2 > patch.w or child_box.y2 > patch.h:
        raise GeometryError(
            f'box {child_box.corners()} exceeds the {patch.w}x{patch.h} patch extents'
        )
    return Rect(child_box.x + patch.x, child_box.y + patch.y, child_box.w, child_box.h)


def to_patch_frame(box, patch):
    if not patch.contains(box):
        raise GeometryError(f'box {box.corners()} is not inside patch {patch.corners()}')
    return Rect(box.x - patch.x, box.y - patch.y, box.w, box.h)


def tree_size(root, min_side=224):
    """Number of patches in the complete subdivision tree below and including `root`."""
    return 1 + sum(tree_size(child, min_side) for child in subdivide(root, min_side))
