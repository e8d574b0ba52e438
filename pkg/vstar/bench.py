"""Strategy comparison, cue ablation and fixation replay on synthetic scenes."""
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from faker import Faker

from .conf import vstar_settings
from .exceptions import DataError, VStarError
from .geometry import Rect, quadrants
from .perception import OracleBackend, PlantedTarget, SyntheticScene, fixation_backend
from .search import (
    BASELINES, SearchParams, Strategy, is_root_success, run_strategy,
    search_length, vstar_search,
)
from .serializers import (
    ExperimentConfigSerializer, ResultTableSerializer, SceneRowSerializer, SearchParamsSerializer,
)
from .storage import dump_trace, dumps, load_fixation_records, read_json, validated, write_json

logger = logging.getLogger(__name__)

DEFAULT_STRATEGIES = (Strategy.GUIDED,) + BASELINES
ABLATION_STRATEGIES = (Strategy.GUIDED, Strategy.NO_TARGET_CUE, Strategy.NO_CONTEXTUAL_CUE)
RANDOM_STRATEGIES = {Strategy.RANDOM_BFS, Strategy.RANDOM_DFS}

CONTEXT_MARGIN = 0.1

DISPLAY_NAMES = {
    'guided': 'LLM-guided search',
    'no_target_cue': 'w/o target-specific cue',
    'no_contextual_cue': 'w/o contextual cue',
    'random_bfs': 'Random-BFS',
    'random_dfs': 'Random-DFS',
    'sequential_bfs': 'Sequential-BFS',
    'sequential_dfs': 'Sequential-DFS',
}

# (better, worse) pairs reported whenever both rows are present.
COMPARISONS = (
    ('guided', 'no_target_cue'),
    ('guided', 'no_contextual_cue'),
    ('guided', 'sequential_bfs'),
    ('guided', 'sequential_dfs'),
    ('guided', 'random_bfs'),
    ('guided', 'random_dfs'),
    ('sequential_bfs', 'random_bfs'),
    ('sequential_bfs', 'sequential_dfs'),
)


@dataclass(frozen=True)
class ExperimentConfig:
    n_scenes: int = 200
    extent: Rect = Rect(0, 0, 2048, 2048)
    target_size_range: tuple = (40, 120)
    cue_fidelity: float = 1.0
    noise_level: float = 0.0
    strategies: tuple = DEFAULT_STRATEGIES
    seed: int = 0
    seeds: tuple = (0,)
    params: SearchParams = SearchParams()
    grid: int = 16

    def __post_init__(self):
        object.__setattr__(self, 'strategies', tuple(Strategy(s) for s in self.strategies))
        object.__setattr__(self, 'seeds', tuple(int(s) for s in self.seeds))
        object.__setattr__(self, 'target_size_range', tuple(self.target_size_range))
        if self.n_scenes < 1:
            raise DataError(f'n_scenes must be >= 1, got {self.n_scenes}')
        lo, hi = self.target_size_range
        if not 1 <= lo <= hi:
            raise DataError(f'target_size_range must be (min, max) with 1 <= min <= max, got {lo}, {hi}')
        if hi > self.extent.shorter_side:
            raise DataError(f'targets of side {hi} do not fit in the {self.extent.w}x{self.extent.h} extent')
        if not self.strategies:
            raise DataError('at least one strategy is required')
        if not self.seeds:
            raise DataError('at least one replicate seed is required')
        if self.seed < 0 or any(s < 0 for s in self.seeds):
            raise DataError('seeds must be >= 0')

    @classmethod
    def from_settings(cls, **overrides):
        side = vstar_settings.BENCH_EXTENT
        values = {
            'n_scenes': vstar_settings.BENCH_SCENES,
            'extent': Rect(0, 0, side, side),
            'target_size_range': tuple(vstar_settings.BENCH_TARGET_SIZE),
            'grid': vstar_settings.HEATMAP_GRID,
            'params': SearchParams.from_settings(),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def load_experiment_config(path, params_overrides=None, **overrides):
    """
    Experiment config from a JSON file; keys it leaves out come from the
    settings. `params_overrides` and `overrides` take precedence over the file.
    """
    data = read_json(path)
    if not isinstance(data, dict):
        raise DataError(f'{path}: expected a JSON object')
    params_data = data.pop('params', {}) or {}
    values = dict(validated(ExperimentConfigSerializer, data, str(path), partial=True).validated_data)
    params = dict(validated(
        SearchParamsSerializer, params_data, f'{path}: params', partial=True
    ).validated_data)
    params.update(params_overrides or {})
    values['params'] = SearchParams.from_settings(**params)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_settings(**values)


def scene_seed(seed, index):
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


_faker = Faker()
_faker_lock = threading.Lock()


def target_name(seed):
    with _faker_lock:
        _faker.seed_instance(seed)
        return _faker.word()


def context_region(extent, box):
    """The quadrant of `extent` holding the box center, grown by 10% per side."""
    cx, cy = box.center
    quadrant = next(q for q in quadrants(extent) if q.contains_point(cx, cy))
    grown = quadrant.expand(round(quadrant.w * CONTEXT_MARGIN), round(quadrant.h * CONTEXT_MARGIN))
    return grown.clip(extent).union(box)


def generate_scene(seed, cfg):
    rng = np.random.default_rng(seed)
    lo, hi = cfg.target_size_range
    side = int(rng.integers(lo, hi + 1))
    extent = cfg.extent
    x = int(rng.integers(extent.x, extent.x2 - side + 1))
    y = int(rng.integers(extent.y, extent.y2 - side + 1))
    box = Rect(x, y, side, side)
    name = target_name(seed)
    return SyntheticScene(
        extent=extent,
        targets=[PlantedTarget(name, box)],
        context_regions={name: context_region(extent, box)},
        cue_fidelity=cfg.cue_fidelity,
        noise_level=cfg.noise_level,
        seed=seed,
    )


@dataclass
class SceneRow:
    scene: int
    seed: int
    target: str
    target_box: Rect
    lengths: dict = field(default_factory=dict)
    outcomes: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    successes: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)


@dataclass
class StrategyRow:
    strategy: str
    mean_search_length: float | None
    success_rate: float
    n_included: int


@dataclass
class Comparison:
    better: str
    worse: str
    mean_difference: float | None
    p_value: float | None


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    comparisons: list = field(default_factory=list)

    def row(self, strategy):
        name = getattr(strategy, 'value', strategy)
        return next((r for r in self.rows if r.strategy == name), None)


@dataclass
class ExperimentResult:
    config: dict
    table: ResultTable
    scenes: list = field(default_factory=list)
    skipped: int = 0
    notice: str | None = None


def _record(row, name, runs):
    """Fold the replicate runs of one strategy on one scene into the scene row."""
    lengths = []
    located = 0
    for run in runs:
        trace = run.trace
        if run.found:
            located += 1
            # Search length only counts searches that needed at least one split.
            if not is_root_success(trace):
                lengths.append(search_length(trace))
    row.lengths[name] = float(np.mean(lengths)) if lengths else None
    row.successes[name] = located / len(runs)
    row.outcomes[name] = runs[0].trace.outcome.kind.value
    row.traces[name] = runs[0].trace


def _run_replicates(row, name, runs_for):
    try:
        runs = runs_for()
    except VStarError as exc:
        logger.warning('scene %d: %s failed: %s', row.scene, name, exc)
        row.errors[name] = str(exc)
        row.lengths[name] = None
        row.successes[name] = 0.0
        row.outcomes[name] = 'error'
        return
    _record(row, name, runs)


def run_scene(index, cfg):
    seed = scene_seed(cfg.seed, index)
    scene = generate_scene(seed, cfg)
    target = scene.targets[0]
    backend = OracleBackend(scene, grid=cfg.grid)
    row = SceneRow(index, seed, target.name, target.box)
    for strategy in cfg.strategies:
        replicates = cfg.seeds if strategy in RANDOM_STRATEGIES else cfg.seeds[:1]

        def runs_for(strategy=strategy, replicates=replicates):
            return [
                run_strategy(strategy, backend, scene.extent, target.name, cfg.params,
                             seed=[seed, s])
                for s in replicates
            ]

        _run_replicates(row, strategy.value, runs_for)
    return row


def bootstrap_pvalue(a, b, resamples=10000, seed=0, two_sided=False):
    """
    Paired bootstrap p-value for mean(a) < mean(b).

    The per-pair differences are resampled with replacement; the one-sided
    p-value is the share of resampled means that are not below zero. With
    `two_sided` it tests mean(a) != mean(b) instead.
    """
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if diff.size == 0:
        return None
    rng = np.random.default_rng(seed)
    means = diff[rng.integers(0, diff.size, (resamples, diff.size))].mean(axis=1)
    upper = (np.count_nonzero(means >= 0) + 1) / (resamples + 1)
    if not two_sided:
        return float(upper)
    lower = (np.count_nonzero(means <= 0) + 1) / (resamples + 1)
    return float(min(1.0, 2 * min(upper, lower)))


def paired_lengths(scenes, first, second):
    pairs = [
        (row.lengths.get(first), row.lengths.get(second)) for row in scenes
    ]
    pairs = [(a, b) for a, b in pairs if a is not None and b is not None]
    return [a for a, _ in pairs], [b for _, b in pairs]


def aggregate(scenes, names, resamples=10000, seed=0, comparisons=COMPARISONS):
    rows = []
    for name in names:
        lengths = [row.lengths[name] for row in scenes if row.lengths.get(name) is not None]
        successes = [row.successes.get(name, 0.0) for row in scenes]
        rows.append(StrategyRow(
            strategy=name,
            mean_search_length=float(np.mean(lengths)) if lengths else None,
            success_rate=float(np.mean(successes)) if successes else 0.0,
            n_included=len(lengths),
        ))
        logger.info('%s: mean search length %s over %d included scene(s)',
                    name, rows[-1].mean_search_length, len(lengths))

    compared = []
    for better, worse in comparisons:
        if better not in names or worse not in names:
            continue
        a, b = paired_lengths(scenes, better, worse)
        compared.append(Comparison(
            better, worse,
            float(np.mean(np.subtract(a, b))) if a else None,
            bootstrap_pvalue(a, b, resamples, seed),
        ))
    return ResultTable(rows, compared)


def run_experiment(cfg, workers=1, resamples=None):
    resamples = resamples or vstar_settings.BENCH_BOOTSTRAP_RESAMPLES
    logger.info('running %d scene(s) with %s', cfg.n_scenes,
                ', '.join(s.value for s in cfg.strategies))

    def run(index):
        return run_scene(index, cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scenes = list(pool.map(run, range(cfg.n_scenes)))
    else:
        scenes = [run(index) for index in range(cfg.n_scenes)]

    names = [s.value for s in cfg.strategies]
    table = aggregate(scenes, names, resamples, cfg.seed)
    return ExperimentResult(dict(ExperimentConfigSerializer(cfg).data), table, scenes)


def ablate_cues(cfg, workers=1, resamples=None):
    return run_experiment(replace(cfg, strategies=ABLATION_STRATEGIES), workers, resamples)


def _fixation_scene(index, record):
    target = PlantedTarget(record['target'], record['target_box'])
    return SyntheticScene(record['extent'], [target], {}, cue_fidelity=0.0, seed=index)


def fixation_strategy_name(gamma):
    return f'fixation_gamma_{gamma:g}'


def replay_fixations(dataset_path, gammas=(0.9, 0.8), sigma=None, params=None, grid=16,
                     amplitude=6.0, seeds=(0,), resamples=None):
    """
    Guided search driven by each record's fixation heatmap, once per gamma,
    next to the four baselines on the same records.
    """
    resamples = resamples or vstar_settings.BENCH_BOOTSTRAP_RESAMPLES
    params = params or SearchParams()
    records, skipped = load_fixation_records(dataset_path)
    config = {
        'dataset': str(dataset_path),
        'gammas': list(gammas),
        'sigma': sigma,
        'grid': grid,
        'seeds': list(seeds),
        'params': SearchParamsSerializer(params).data,
    }
    names = [fixation_strategy_name(g) for g in gammas] + [s.value for s in BASELINES]
    if not records:
        notice = f'no fixation records in {dataset_path} ({skipped} malformed line(s) skipped)'
        logger.warning(notice)
        return ExperimentResult(config, ResultTable(), [], skipped, notice)

    scenes = []
    for index, record in enumerate(records):
        scene = _fixation_scene(index, record)
        target = scene.targets[0]
        row = SceneRow(index, index, target.name, target.box)
        for gamma, name in zip(gammas, names):
            def runs_for(gamma=gamma):
                backend = fixation_backend(scene, record['fixations'], gamma, sigma,
                                           grid=grid, amplitude=amplitude)
                return [vstar_search(backend, scene.extent, target.name, params)]

            _run_replicates(row, name, runs_for)

        oracle = OracleBackend(scene, grid=grid)
        for strategy in BASELINES:
            replicates = seeds if strategy in RANDOM_STRATEGIES else seeds[:1]

            def runs_for(strategy=strategy, replicates=replicates):
                return [
                    run_strategy(strategy, oracle, scene.extent, target.name, params,
                                 seed=[index, s])
                    for s in replicates
                ]

            _run_replicates(row, strategy.value, runs_for)
        scenes.append(row)

    comparisons = [(names[0], s.value) for s in BASELINES]
    comparisons += [(a, b) for a, b in zip(names, names[1:len(gammas)])]
    table = aggregate(scenes, names, resamples, 0, comparisons)
    return ExperimentResult(config, table, scenes, skipped)


def synthesize_fixation_records(n, seed=0, extent=Rect(0, 0, 2048, 2048), size_range=(40, 120)):
    """
    Fixation records whose trails start at the image center, pass through up
    to two points on the way to the target and then dwell on it for two to
    four fixations, as JSON-ready dicts.
    """
    rng = np.random.default_rng(seed)
    lo, hi = size_range
    spread = max(extent.w, extent.h) / 32
    records = []
    for index in range(n):
        side = int(rng.integers(lo, hi + 1))
        x = int(rng.integers(extent.x, extent.x2 - side + 1))
        y = int(rng.integers(extent.y, extent.y2 - side + 1))
        box = Rect(x, y, side, side)
        start = np.array(extent.center)
        end = np.array(box.center)

        points = [start]
        transit = int(rng.integers(0, 3))
        for t in np.arange(1, transit + 1) / (transit + 1):
            points.append(start + t * (end - start) + rng.normal(0.0, spread, 2))
        dwell = int(rng.integers(2, 5))
        points.extend(end + rng.uniform(-side / 4, side / 4, (dwell, 2)))

        records.append({
            'image_id': f'synthetic-{seed}-{index:05d}',
            'extent': extent.corners(),
            'points': [
                [float(np.clip(px, extent.x, extent.x2 - 1)), float(np.clip(py, extent.y, extent.y2 - 1))]
                for px, py in points
            ],
            'target_box': box.corners(),
            'target': target_name(scene_seed(seed, index)),
        })
    return records


def write_fixation_records(records, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(''.join(json.dumps(r) + '\n' for r in records), encoding='utf-8')
    return path


def _fmt(value, digits=2):
    return '-' if value is None else f'{value:.{digits}f}'


def render_markdown(result):
    lines = [
        f'<!-- config: {json.dumps(result.config, sort_keys=True)} -->',
        '',
        '| Search strategy | Avg. search length | Success rate | Included scenes |',
        '|---|---:|---:|---:|',
    ]
    for row in result.table.rows:
        lines.append(
            f'| {DISPLAY_NAMES.get(row.strategy, row.strategy)} | {_fmt(row.mean_search_length)} '
            f'| {_fmt(row.success_rate, 3)} | {row.n_included} |'
        )
    if result.table.comparisons:
        lines += ['', '| Comparison | Mean difference | p-value |', '|---|---:|---:|']
        for c in result.table.comparisons:
            lines.append(f'| {c.better} < {c.worse} | {_fmt(c.mean_difference)} | {_fmt(c.p_value, 4)} |')
    if result.notice:
        lines += ['', f'> {result.notice}']
    return '\n'.join(lines) + '\n'


def result_data(result):
    data = {
        'config': result.config,
        'table': ResultTableSerializer(result.table).data,
        'scenes': SceneRowSerializer(result.scenes, many=True).data,
        'skipped': result.skipped,
    }
    if result.notice:
        data['notice'] = result.notice
    return data


def write_results(result, out_dir, fmt='json', traces=False):
    out_dir = Path(out_dir)
    written = [write_json(result_data(result), out_dir / 'results.json')]
    if fmt == 'md':
        path = out_dir / 'results.md'
        path.write_text(render_markdown(result), encoding='utf-8')
        written.append(path)
    if traces:
        for row in result.scenes:
            for name, trace in row.traces.items():
                path = out_dir / 'traces' / f'scene_{row.scene:04d}_{name}.json'
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(dumps(dump_trace(trace)), encoding='utf-8')
                written.append(path)
    return written
