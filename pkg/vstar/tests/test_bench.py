import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag

from vstar.bench import (
    ExperimentConfig, ablate_cues, bootstrap_pvalue, context_region, fixation_strategy_name,
    generate_scene, load_experiment_config, replay_fixations, result_data, run_experiment, scene_seed,
    synthesize_fixation_records, write_fixation_records, write_results,
)
from vstar.exceptions import DataError
from vstar.geometry import Rect
from vstar.search import BASELINES, Strategy
from vstar.storage import load_fixation_records

ALL_BASELINES = [s.value for s in BASELINES]


def small_config(**kwargs):
    kwargs.setdefault('n_scenes', 30)
    return ExperimentConfig(**kwargs)


@tag('bench', 'scenes')
class GenerateSceneTests(SimpleTestCase):

    def test_same_seed_same_scene(self):
        """[Scenes] Scene generation is a pure function of the seed."""
        cfg = ExperimentConfig()
        a, b = generate_scene(42, cfg), generate_scene(42, cfg)
        self.assertEqual(a.targets, b.targets)
        self.assertEqual(a.context_regions, b.context_regions)
        self.assertNotEqual(generate_scene(43, cfg).targets, a.targets)

    def test_degenerate_size_range(self):
        """[Scenes] A one-value size range always plants targets of that size."""
        cfg = ExperimentConfig(target_size_range=(60, 60))
        for seed in range(20):
            box = generate_scene(seed, cfg).targets[0].box
            self.assertEqual((box.w, box.h), (60, 60))

    def test_context_region_is_the_grown_quadrant(self):
        """[Scenes] The context region is the target's quadrant grown by 10% and clipped."""
        cfg = ExperimentConfig()
        for seed in range(50):
            scene = generate_scene(seed, cfg)
            target = scene.targets[0]
            region = scene.context_regions[target.name]
            self.assertTrue(region.contains(target.box))
            self.assertTrue(cfg.extent.contains(region))
            self.assertGreaterEqual(region.w, 1024 + 102)
            self.assertGreaterEqual(region.h, 1024 + 102)

    def test_context_region_of_an_elongated_extent_is_a_quadrant(self):
        """[Scenes] Wide and tall extents are still cut 2x2 for the context region."""
        wide = Rect(0, 0, 4096, 1024)
        self.assertEqual(context_region(wide, Rect(3500, 800, 60, 60)),
                         Rect.from_corners(1843, 461, 4096, 1024))
        self.assertEqual(context_region(Rect(0, 0, 1024, 4096), Rect(100, 100, 60, 60)),
                         Rect.from_corners(0, 0, 563, 2253))

        cfg = ExperimentConfig(extent=wide)
        for seed in range(50):
            scene = generate_scene(seed, cfg)
            target = scene.targets[0]
            region = scene.context_regions[target.name]
            self.assertTrue(region.contains(target.box))
            self.assertGreaterEqual(region.w, 2048 + 205)
            self.assertGreaterEqual(region.h, 512 + 51)

    def test_target_centers_are_uniform(self):
        """[Scenes] Over 1,000 seeds target centers fill a 4x4 grid evenly (chi-square, p > 0.01)."""
        cfg = ExperimentConfig(target_size_range=(2, 2))
        counts = np.zeros((4, 4))
        for index in range(1000):
            cx, cy = generate_scene(scene_seed(7, index), cfg).targets[0].box.center
            counts[int(cy // 512), int(cx // 512)] += 1
        expected = counts.sum() / counts.size
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        # 99th percentile of chi-square with 15 degrees of freedom.
        self.assertLess(chi2, 30.578)

    def test_invalid_configs(self):
        """[Scenes] Scene counts and target sizes are validated."""
        with self.assertRaises(DataError):
            ExperimentConfig(n_scenes=0)
        with self.assertRaises(DataError):
            ExperimentConfig(target_size_range=(120, 40))
        with self.assertRaises(DataError):
            ExperimentConfig(extent=Rect(0, 0, 100, 100))


@tag('bench', 'experiment')
class RunExperimentTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.result = run_experiment(small_config(seeds=(0, 1)), resamples=2000)

    def lengths(self, name):
        return [row.lengths[name] for row in self.result.scenes]

    def test_table_has_a_row_per_strategy(self):
        """[Experiment] Guided search and the four baselines are reported, all targets found."""
        names = [row.strategy for row in self.result.table.rows]
        self.assertEqual(names, ['guided'] + ALL_BASELINES)
        for row in self.result.table.rows:
            self.assertEqual(row.success_rate, 1.0)
            self.assertEqual(row.n_included, 30)

    def test_guided_dominates_every_baseline_per_scene(self):
        """[Experiment] With perfect cues guided search is never longer than any baseline."""
        for row in self.result.scenes:
            for name in ALL_BASELINES:
                self.assertLessEqual(row.lengths['guided'], row.lengths[name], (row.scene, name))

    def test_mean_ordering(self):
        """[Experiment] guided < Sequential BFS, and Sequential DFS needs longer than Sequential BFS."""
        table = self.result.table
        guided = table.row(Strategy.GUIDED).mean_search_length
        self.assertLess(guided, table.row(Strategy.SEQUENTIAL_BFS).mean_search_length)
        self.assertLess(guided, table.row(Strategy.RANDOM_BFS).mean_search_length)
        self.assertGreater(table.row(Strategy.SEQUENTIAL_DFS).mean_search_length,
                           table.row(Strategy.SEQUENTIAL_BFS).mean_search_length)
        comparison = next(c for c in table.comparisons
                          if (c.better, c.worse) == ('guided', 'sequential_bfs'))
        self.assertLess(comparison.p_value, 0.01)
        self.assertLess(comparison.mean_difference, 0)

    def test_random_lengths_average_the_replicates(self):
        """[Experiment] Random strategies report the mean over the replicate seeds."""
        doubled = [2 * v for v in self.lengths('random_bfs')]
        self.assertTrue(all(float(v).is_integer() for v in doubled))

    def test_rerun_is_byte_identical(self):
        """[Experiment] The same config gives the same results.json, with or without workers."""
        cfg = small_config(n_scenes=8)
        first = json.dumps(result_data(run_experiment(cfg, resamples=500)))
        second = json.dumps(result_data(run_experiment(cfg, workers=3, resamples=500)))
        self.assertEqual(first, second)

    def test_root_successes_are_excluded(self):
        """[Experiment] Targets found on the whole image count as successes but not in the means."""
        cfg = small_config(n_scenes=5, target_size_range=(190, 200),
                           strategies=(Strategy.GUIDED, Strategy.SEQUENTIAL_BFS))
        result = run_experiment(cfg, resamples=100)
        for row in result.table.rows:
            self.assertEqual(row.n_included, 0)
            self.assertIsNone(row.mean_search_length)
            self.assertEqual(row.success_rate, 1.0)
        self.assertEqual(result.table.comparisons[0].p_value, None)

    def test_zero_fidelity_guidance_is_no_better_than_chance(self):
        """[Experiment] Without cue information guided and Random BFS are indistinguishable."""
        cfg = small_config(cue_fidelity=0.0, strategies=(Strategy.GUIDED, Strategy.RANDOM_BFS))
        result = run_experiment(cfg, resamples=2000)
        a = [row.lengths['guided'] for row in result.scenes]
        b = [row.lengths['random_bfs'] for row in result.scenes]
        self.assertGreater(bootstrap_pvalue(a, b, 2000, two_sided=True), 0.01)


@tag('bench', 'ablation')
class AblationTests(SimpleTestCase):

    def test_each_cue_helps(self):
        """[Ablation] Full guidance is no longer than either single-cue variant."""
        result = ablate_cues(small_config(n_scenes=20), resamples=1000)
        table = result.table
        self.assertEqual([r.strategy for r in table.rows],
                         ['guided', 'no_target_cue', 'no_contextual_cue'])
        guided = table.row('guided').mean_search_length
        self.assertLessEqual(guided, table.row('no_target_cue').mean_search_length)
        self.assertLessEqual(guided, table.row('no_contextual_cue').mean_search_length)


@tag('bench', 'statistics')
class BootstrapTests(SimpleTestCase):

    def test_clear_improvement_is_significant(self):
        """[Bootstrap] Consistently shorter searches give a tiny one-sided p-value."""
        a = [2.0] * 30
        b = [5.0, 6.0, 7.0] * 10
        self.assertLess(bootstrap_pvalue(a, b), 0.01)

    def test_no_difference_is_not_significant(self):
        """[Bootstrap] Identical samples are never significant."""
        a = [3.0, 4.0, 5.0] * 10
        self.assertGreater(bootstrap_pvalue(a, a), 0.5)
        self.assertGreater(bootstrap_pvalue(a, a, two_sided=True), 0.5)

    def test_fixed_seed_is_reproducible(self):
        """[Bootstrap] The resampling seed fixes the p-value."""
        rng = np.random.default_rng(1)
        a, b = rng.normal(0, 1, 40), rng.normal(0.3, 1, 40)
        self.assertEqual(bootstrap_pvalue(a, b, seed=5), bootstrap_pvalue(a, b, seed=5))

    def test_empty_sample(self):
        """[Bootstrap] Nothing to compare gives no p-value."""
        self.assertIsNone(bootstrap_pvalue([], []))


@tag('bench', 'replay')
class ReplayFixationsTests(SimpleTestCase):

    def test_fixation_guidance_beats_sequential_bfs(self):
        """[Replay] Trails ending on the target guide search better than Sequential BFS."""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_fixation_records(synthesize_fixation_records(40, seed=3), Path(tmp) / 'fix.jsonl')
            result = replay_fixations(path, gammas=(0.9, 0.8), resamples=2000)

        table = result.table
        names = [row.strategy for row in table.rows]
        self.assertEqual(names, ['fixation_gamma_0.9', 'fixation_gamma_0.8'] + ALL_BASELINES)
        fixation = table.row(fixation_strategy_name(0.9)).mean_search_length
        self.assertLessEqual(fixation, table.row('sequential_bfs').mean_search_length)
        comparison = next(c for c in table.comparisons
                          if (c.better, c.worse) == ('fixation_gamma_0.9', 'sequential_bfs'))
        self.assertLess(comparison.p_value, 0.01)
        self.assertTrue(any((c.better, c.worse) == ('fixation_gamma_0.9', 'fixation_gamma_0.8')
                            for c in table.comparisons))

    def test_synthetic_trails_end_on_the_target(self):
        """[Replay] Generated records are valid and their last fixation lies in the target box."""
        with tempfile.TemporaryDirectory() as tmp:
            path = write_fixation_records(synthesize_fixation_records(25, seed=1), Path(tmp) / 'fix.jsonl')
            records, skipped = load_fixation_records(path)
        self.assertEqual((len(records), skipped), (25, 0))
        for record in records:
            self.assertTrue(record['target_box'].contains_point(*record['fixations'].points[-1]))
            self.assertEqual(record['fixations'].points[0], (1024.0, 1024.0))

    def test_malformed_records_are_skipped(self):
        """[Replay] Broken lines are counted and skipped, an empty dataset gives a notice."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'fix.jsonl'
            path.write_text('not json\n{"image_id": "x"}\n\n', encoding='utf-8')
            result = replay_fixations(path)
        self.assertEqual(result.skipped, 2)
        self.assertEqual(result.table.rows, [])
        self.assertIn('no fixation records', result.notice)


@tag('bench', 'output')
class ResultFileTests(SimpleTestCase):

    def test_results_are_written_as_json_and_markdown(self):
        """[Output] results.json leads with the config, results.md with a provenance comment."""
        cfg = small_config(n_scenes=3, strategies=(Strategy.GUIDED, Strategy.SEQUENTIAL_BFS))
        result = run_experiment(cfg, resamples=100)
        with tempfile.TemporaryDirectory() as tmp:
            written = write_results(result, tmp, fmt='md', traces=True)
            data = json.loads((Path(tmp) / 'results.json').read_text(encoding='utf-8'))
            markdown = (Path(tmp) / 'results.md').read_text(encoding='utf-8')
            traces = sorted(p.name for p in (Path(tmp) / 'traces').iterdir())

        self.assertEqual(list(data)[0], 'config')
        self.assertEqual(data['config']['n_scenes'], 3)
        self.assertEqual(len(data['scenes']), 3)
        self.assertEqual([r['strategy'] for r in data['table']['rows']], ['guided', 'sequential_bfs'])
        self.assertTrue(markdown.startswith('<!-- config: '))
        self.assertIn('| LLM-guided search |', markdown)
        self.assertEqual(len(traces), 6)
        self.assertIn('scene_0000_guided.json', traces)
        self.assertEqual(len(written), 2 + 6)

    def test_config_file_fills_in_from_settings(self):
        """[Output] Keys missing from a config file keep their defaults; overrides win."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'cfg.json'
            path.write_text(json.dumps({
                'n_scenes': 12, 'strategies': ['guided', 'random_dfs'], 'params': {'high_conf': 0.6},
            }), encoding='utf-8')
            cfg = load_experiment_config(path, {'low_conf': 0.2}, seed=9)
        self.assertEqual(cfg.n_scenes, 12)
        self.assertEqual(cfg.strategies, (Strategy.GUIDED, Strategy.RANDOM_DFS))
        self.assertEqual(cfg.params.high_conf, 0.6)
        self.assertEqual(cfg.params.low_conf, 0.2)
        self.assertEqual(cfg.seed, 9)
        self.assertEqual(cfg.extent, Rect(0, 0, 2048, 2048))

    def test_invalid_config_file(self):
        """[Output] A config file with wrong types is a data error."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'cfg.json'
            path.write_text('{"n_scenes": "many"}', encoding='utf-8')
            with self.assertRaises(DataError):
                load_experiment_config(path)
