import numpy as np
from django.test import SimpleTestCase, tag

from vstar.exceptions import GeometryError
from vstar.geometry import (
    Orientation, Rect, orientation, quadrants, subdivide, to_patch_frame, to_root_frame, tree_size,
)


@tag('geometry')
class RectTests(SimpleTestCase):

    def test_corner_form_round_trips(self):
        """[Rect] Corner form is [x1, y1, x2, y2] with exclusive far corner."""
        r = Rect(10, 20, 30, 40)
        self.assertEqual(r.corners(), [10, 20, 40, 60])
        self.assertEqual(Rect.from_corners(10, 20, 40, 60), r)

    def test_invalid_rects_are_rejected(self):
        """[Rect] Negative origins, empty sides and non-integers raise GeometryError."""
        for args in [(-1, 0, 5, 5), (0, 0, 0, 5), (0, 0, 5, -2), (0.5, 0, 5, 5), (True, 0, 5, 5)]:
            with self.subTest(args=args):
                with self.assertRaises(GeometryError):
                    Rect(*args)

    def test_contains_point_is_half_open(self):
        """[Rect] The far edges belong to the neighbouring rectangle."""
        r = Rect(0, 0, 10, 10)
        self.assertTrue(r.contains_point(0, 0))
        self.assertTrue(r.contains_point(9.99, 9.99))
        self.assertFalse(r.contains_point(10, 5))
        self.assertFalse(r.contains_point(5, 10))

    def test_intersection_and_clip(self):
        """[Rect] Overlap is computed, disjoint rectangles do not intersect."""
        a = Rect(0, 0, 10, 10)
        self.assertEqual(a.intersection(Rect(5, 5, 10, 10)), Rect(5, 5, 5, 5))
        self.assertIsNone(a.intersection(Rect(10, 0, 5, 5)))
        self.assertEqual(Rect(5, 5, 20, 20).clip(a), Rect(5, 5, 5, 5))
        with self.assertRaises(GeometryError):
            Rect(20, 20, 5, 5).clip(a)

    def test_expand_stops_at_origin(self):
        """[Rect] Growing a rectangle near the origin keeps it non-negative."""
        self.assertEqual(Rect(2, 3, 10, 10).expand(5, 5), Rect.from_corners(0, 0, 17, 18))


@tag('geometry', 'subdivide')
class SubdivideTests(SimpleTestCase):

    def test_orientation_thresholds(self):
        """[Subdivide] More than twice as wide is landscape, more than twice as tall is portrait."""
        self.assertEqual(orientation(Rect(0, 0, 1000, 400)), Orientation.LANDSCAPE)
        self.assertEqual(orientation(Rect(0, 0, 800, 400)), Orientation.BALANCED)
        self.assertEqual(orientation(Rect(0, 0, 400, 1000)), Orientation.PORTRAIT)

    def test_square_splits_into_quadrants_in_raster_order(self):
        """[Subdivide] A 2048 square becomes four 1024 quadrants, row by row."""
        children = subdivide(Rect(0, 0, 2048, 2048))
        self.assertEqual(children, [
            Rect(0, 0, 1024, 1024), Rect(1024, 0, 1024, 1024),
            Rect(0, 1024, 1024, 1024), Rect(1024, 1024, 1024, 1024),
        ])

    def test_landscape_and_portrait_layouts(self):
        """[Subdivide] Elongated patches are cut into four strips across the long side."""
        self.assertEqual(subdivide(Rect(0, 0, 1000, 300)), [
            Rect(0, 0, 250, 300), Rect(250, 0, 250, 300),
            Rect(500, 0, 250, 300), Rect(750, 0, 250, 300),
        ])
        self.assertEqual([c.h for c in subdivide(Rect(0, 0, 300, 1000))], [250] * 4)

    def test_remainder_goes_to_earlier_children(self):
        """[Subdivide] Odd sides give the extra pixel to the first row and column."""
        children = subdivide(Rect(0, 0, 1001, 1001))
        self.assertEqual([c.w for c in children], [501, 500, 501, 500])
        self.assertEqual([c.h for c in children], [501, 501, 500, 500])

    def test_small_patches_are_leaves(self):
        """[Subdivide] A patch whose children would be under min_side is not split."""
        self.assertEqual(subdivide(Rect(0, 0, 447, 447)), [])
        self.assertEqual(len(subdivide(Rect(0, 0, 448, 448))), 4)
        self.assertEqual(subdivide(Rect(0, 0, 224, 224)), [])

    def test_children_tile_the_parent(self):
        """[Subdivide] On random rectangles children cover the parent exactly, without overlap."""
        rng = np.random.default_rng(0)
        for _ in range(1000):
            w, h = (int(v) for v in rng.integers(1, 5000, 2))
            parent = Rect(int(rng.integers(0, 100)), int(rng.integers(0, 100)), w, h)
            children = subdivide(parent, min_side=1) if min(w, h) >= 4 else []
            if not children:
                continue
            self.assertEqual(len(children), 4)
            self.assertEqual(sum(c.area for c in children), parent.area)
            for i, a in enumerate(children):
                self.assertTrue(parent.contains(a))
                for b in children[i + 1:]:
                    self.assertFalse(a.intersects(b))
            cols, rows = {
                Orientation.BALANCED: (2, 2),
                Orientation.LANDSCAPE: (4, 1),
                Orientation.PORTRAIT: (1, 4),
            }[orientation(parent)]
            self.assertEqual(len({c.x for c in children}), cols)
            self.assertEqual(len({c.y for c in children}), rows)

    def test_elongated_children_are_closer_to_square(self):
        """[Subdivide] Strips of a landscape or portrait patch with sides divisible by 4 are less elongated."""
        def elongation(r):
            return max(r.w, r.h) / min(r.w, r.h)

        rng = np.random.default_rng(2)
        checked = 0
        for _ in range(2000):
            w, h = (4 * int(v) for v in rng.integers(1, 1500, 2))
            parent = Rect(0, 0, w, h)
            if orientation(parent) == Orientation.BALANCED:
                continue
            checked += 1
            for child in subdivide(parent, min_side=1):
                self.assertLess(elongation(child), elongation(parent))
        self.assertGreater(checked, 100)

    def test_quadrants_ignore_orientation(self):
        """[Subdivide] quadrants always cuts a 2x2 grid, even for strips."""
        self.assertEqual(quadrants(Rect(0, 0, 4096, 1024)), [
            Rect(0, 0, 2048, 512), Rect(2048, 0, 2048, 512),
            Rect(0, 512, 2048, 512), Rect(2048, 512, 2048, 512),
        ])
        self.assertEqual(quadrants(Rect(0, 0, 2048, 2048)), subdivide(Rect(0, 0, 2048, 2048)))
        self.assertEqual([c.w for c in quadrants(Rect(10, 10, 5, 3))], [3, 2, 3, 2])

    def test_tree_size_of_a_full_quadtree(self):
        """[Subdivide] 2048 with min_side 224 has three levels below the root: 1+4+16+64."""
        self.assertEqual(tree_size(Rect(0, 0, 2048, 2048)), 85)
        self.assertEqual(tree_size(Rect(0, 0, 300, 300)), 1)

    def test_invalid_min_side(self):
        """[Subdivide] min_side must be positive."""
        with self.assertRaises(GeometryError):
            subdivide(Rect(0, 0, 100, 100), min_side=0)


@tag('geometry', 'frames')
class FrameMappingTests(SimpleTestCase):

    def test_patch_box_maps_to_root(self):
        """[Frames] A patch-local box is offset by the patch origin."""
        patch = Rect(1024, 512, 512, 512)
        self.assertEqual(to_root_frame(Rect(10, 20, 30, 30), patch), Rect(1034, 532, 30, 30))

    def test_box_past_the_patch_is_rejected(self):
        """[Frames] A local box reaching beyond the patch extents raises GeometryError."""
        with self.assertRaises(GeometryError):
            to_root_frame(Rect(500, 0, 20, 20), Rect(0, 0, 512, 512))

    def test_patch_frame_inverts_root_frame(self):
        """[Frames] to_patch_frame undoes to_root_frame for boxes inside the patch."""
        patch = Rect(300, 400, 200, 200)
        box = Rect(10, 15, 50, 60)
        self.assertEqual(to_patch_frame(to_root_frame(box, patch), patch), box)
        with self.assertRaises(GeometryError):
            to_patch_frame(Rect(0, 0, 10, 10), patch)

    def test_mapping_along_a_lineage_equals_one_mapping(self):
        """[Frames] Mapping a box up through every ancestor equals one mapping by the final patch."""
        rng = np.random.default_rng(3)
        root = Rect(0, 0, 4096, 1536)
        for _ in range(200):
            lineage = [root]
            while children := subdivide(lineage[-1]):
                lineage.append(children[int(rng.integers(len(children)))])
            leaf = lineage[-1]
            w, h = int(rng.integers(1, leaf.w + 1)), int(rng.integers(1, leaf.h + 1))
            box = Rect(int(rng.integers(0, leaf.w - w + 1)), int(rng.integers(0, leaf.h - h + 1)), w, h)

            mapped = box
            for child, parent in zip(reversed(lineage[1:]), reversed(lineage[:-1])):
                mapped = to_root_frame(mapped, to_patch_frame(child, parent))
            self.assertEqual(mapped, to_root_frame(box, leaf))
            self.assertEqual(len(lineage), 4)
