import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag

from vstar.exceptions import HeatmapError
from vstar.geometry import Rect, subdivide
from vstar.heatmap import (
    FixationSequence, Heatmap, fixations_to_heatmap, max_value, patch_priority, render_heatmap,
    write_heatmap_image,
)

FRAME = Rect(0, 0, 100, 100)


def grid_4x4():
    return Heatmap(np.arange(16, dtype=float).reshape(4, 4), FRAME)


@tag('heatmap')
class HeatmapTests(SimpleTestCase):

    def test_values_are_validated_and_frozen(self):
        """[Heatmap] Values must form a finite 2D grid and cannot be modified."""
        with self.assertRaises(HeatmapError):
            Heatmap(np.array([1.0, 2.0]), FRAME)
        with self.assertRaises(HeatmapError):
            Heatmap(np.array([[1.0, np.nan]]), FRAME)
        h = grid_4x4()
        with self.assertRaises(ValueError):
            h.values[0, 0] = 5.0

    def test_empty_grid_is_rejected(self):
        """[Heatmap] A heatmap needs at least one cell."""
        for values in [np.zeros((0, 0)), np.zeros((0, 4)), np.zeros((3, 0))]:
            with self.subTest(shape=values.shape):
                with self.assertRaises(HeatmapError):
                    Heatmap(values, FRAME)
        with self.assertRaises(HeatmapError):
            Heatmap.from_list(0, 0, [], FRAME)

    def test_from_list_checks_the_value_count(self):
        """[Heatmap] width * height must match the number of values."""
        self.assertEqual(Heatmap.from_list(2, 3, [0.0] * 6, FRAME).values.shape, (3, 2))
        with self.assertRaises(HeatmapError):
            Heatmap.from_list(2, 3, [0.0] * 5, FRAME)

    def test_max_value(self):
        """[Heatmap] max_value is the largest cell score."""
        self.assertEqual(max_value(grid_4x4()), 15.0)


@tag('heatmap', 'priority')
class PatchPriorityTests(SimpleTestCase):

    def test_priority_is_max_over_contained_cell_centers(self):
        """[Priority] A patch scores the best cell whose center lies inside it."""
        h = grid_4x4()
        self.assertEqual(patch_priority(h, Rect(50, 50, 50, 50)), 15.0)
        self.assertEqual(patch_priority(h, Rect(0, 0, 50, 50)), 5.0)
        self.assertEqual(patch_priority(h, Rect(0, 50, 50, 50)), 13.0)

    def test_patch_smaller_than_a_cell_uses_the_nearest_cell(self):
        """[Priority] Without a contained center the cell nearest the patch center decides."""
        h = grid_4x4()
        self.assertEqual(patch_priority(h, Rect(0, 0, 10, 10)), 0.0)
        self.assertEqual(patch_priority(h, Rect(90, 0, 10, 10)), 3.0)

    def test_whole_frame_priority_is_the_maximum(self):
        """[Priority] The frame itself scores the heatmap maximum."""
        rng = np.random.default_rng(4)
        for _ in range(50):
            h = Heatmap(rng.normal(0.0, 3.0, (16, 16)), Rect(0, 0, 2048, 2048))
            self.assertEqual(patch_priority(h, h.frame), max_value(h))

    def test_children_share_the_parent_priority(self):
        """[Priority] The best child of every patch in the tree scores what the patch scores."""
        rng = np.random.default_rng(5)
        frame = Rect(0, 0, 2048, 2048)
        for _ in range(20):
            h = Heatmap(rng.normal(0.0, 3.0, (16, 16)), frame)
            pending = [frame]
            while pending:
                patch = pending.pop()
                children = subdivide(patch)
                if children:
                    self.assertEqual(max(patch_priority(h, c) for c in children), patch_priority(h, patch))
                pending.extend(children)

    def test_patch_outside_the_frame_is_rejected(self):
        """[Priority] Priorities are only defined for patches inside the heatmap frame."""
        with self.assertRaises(HeatmapError):
            patch_priority(grid_4x4(), Rect(80, 80, 40, 40))


@tag('heatmap', 'fixations')
class FixationHeatmapTests(SimpleTestCase):

    def test_peak_is_scaled_to_the_amplitude(self):
        """[Fixations] The global maximum equals the amplitude."""
        f = FixationSequence(((50.0, 50.0),), FRAME)
        h = fixations_to_heatmap(f, 0.9, sigma=10.0, grid=(10, 10), amplitude=6.0)
        self.assertAlmostEqual(max_value(h), 6.0)
        row, col = np.unravel_index(np.argmax(h.values), h.values.shape)
        self.assertIn((row, col), {(4, 4), (4, 5), (5, 4), (5, 5)})

    def test_earlier_fixations_weigh_more(self):
        """[Fixations] Fixation i is weighted by gamma ** i."""
        f = FixationSequence(((15.0, 15.0), (85.0, 85.0)), FRAME)
        h = fixations_to_heatmap(f, 0.5, sigma=10.0, grid=(10, 10))
        self.assertGreater(h.values[1, 1], h.values[8, 8])
        self.assertAlmostEqual(h.values[1, 1], 6.0)

    def test_empty_sequence_gives_a_flat_heatmap(self):
        """[Fixations] No fixations means no guidance."""
        h = fixations_to_heatmap(FixationSequence((), FRAME), 0.9, grid=(8, 8))
        self.assertEqual(max_value(h), 0.0)

    def test_invalid_arguments(self):
        """[Fixations] gamma outside (0, 1), non-positive sigma and stray points are rejected."""
        f = FixationSequence(((50.0, 50.0),), FRAME)
        for gamma, sigma in [(0.0, 5.0), (1.0, 5.0), (0.9, 0.0), (0.9, -1.0)]:
            with self.subTest(gamma=gamma, sigma=sigma):
                with self.assertRaises(HeatmapError):
                    fixations_to_heatmap(f, gamma, sigma=sigma)
        with self.assertRaises(HeatmapError):
            FixationSequence(((150.0, 50.0),), FRAME)


@tag('heatmap', 'rendering')
class RenderHeatmapTests(SimpleTestCase):

    def test_render_stretches_to_the_byte_range(self):
        """[Rendering] Minimum maps to 0, maximum to 255, constant maps are black."""
        buffer = render_heatmap(grid_4x4())
        self.assertEqual(buffer.dtype, np.uint8)
        self.assertEqual(buffer.shape, (4, 4))
        self.assertEqual(buffer[0, 0], 0)
        self.assertEqual(buffer[3, 3], 255)
        self.assertFalse(render_heatmap(Heatmap.zeros(FRAME, (3, 3))).any())

    def test_image_format_follows_the_suffix(self):
        """[Rendering] .pgm paths get a binary P5 file, other paths a PNG."""
        with tempfile.TemporaryDirectory() as tmp:
            pgm = write_heatmap_image(grid_4x4(), Path(tmp) / 'cue.pgm', cell_px=2)
            png = write_heatmap_image(grid_4x4(), Path(tmp) / 'nested' / 'cue.png', cell_px=2)
            self.assertEqual(pgm.read_bytes()[:2], b'P5')
            self.assertEqual(png.read_bytes()[:4], b'\x89PNG')
