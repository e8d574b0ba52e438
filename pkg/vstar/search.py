import heapq
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .conf import vstar_settings
from .exceptions import BackendError, DataError, HeatmapError, SearchError, SearchInterrupted
from .geometry import subdivide
from .heatmap import Heatmap, max_value, patch_priority
from .perception import TargetQuery

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchParams:
    high_conf: float = 0.5
    low_conf: float = 0.3
    delta_base: float = 6.0
    delta_decay: float = 0.7
    delta_floor: float = 3.0
    min_side: int = 224

    def __post_init__(self):
        if not 0 < self.low_conf <= self.high_conf <= 1:
            raise DataError(
                f'thresholds must satisfy 0 < low_conf <= high_conf <= 1, '
                f'got {self.low_conf} and {self.high_conf}'
            )
        if not 0 < self.delta_decay < 1:
            raise DataError(f'delta_decay must lie in (0, 1), got {self.delta_decay}')
        if self.delta_floor <= 0:
            raise DataError(f'delta_floor must be positive, got {self.delta_floor}')
        if self.min_side < 1:
            raise DataError(f'min_side must be >= 1, got {self.min_side}')

    @classmethod
    def from_settings(cls, **overrides):
        values = {
            'high_conf': vstar_settings.HIGH_CONF,
            'low_conf': vstar_settings.LOW_CONF,
            'delta_base': vstar_settings.DELTA_BASE,
            'delta_decay': vstar_settings.DELTA_DECAY,
            'delta_floor': vstar_settings.DELTA_FLOOR,
            'min_side': vstar_settings.MIN_SIDE,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class CueKind(str, Enum):
    TARGET_SPECIFIC = 'target_specific'
    CONTEXTUAL = 'contextual'
    NONE = 'none'


class Strategy(str, Enum):
    GUIDED = 'guided'
    RANDOM_BFS = 'random_bfs'
    RANDOM_DFS = 'random_dfs'
    SEQUENTIAL_BFS = 'sequential_bfs'
    SEQUENTIAL_DFS = 'sequential_dfs'
    NO_TARGET_CUE = 'no_target_cue'
    NO_CONTEXTUAL_CUE = 'no_contextual_cue'

    @property
    def is_baseline(self):
        return self in BASELINES


BASELINES = (
    Strategy.RANDOM_BFS, Strategy.RANDOM_DFS,
    Strategy.SEQUENTIAL_BFS, Strategy.SEQUENTIAL_DFS,
)


@dataclass(frozen=True)
class CuePolicy:
    target_cue: bool = True
    contextual_cue: bool = True
    delta_check: bool = True


class OutcomeKind(str, Enum):
    FOUND = 'found'
    BEST_EFFORT = 'best_effort'
    NOT_FOUND = 'not_found'


@dataclass(frozen=True)
class SearchNode:
    patch: object
    level: int
    priority: float
    insertion_index: int


@dataclass(frozen=True)
class ChildPriority:
    patch: object
    priority: float


@dataclass
class SearchStep:
    index: int
    node: SearchNode
    cue_kind: CueKind
    confidence: float
    children: list = field(default_factory=list)


@dataclass
class Outcome:
    kind: OutcomeKind
    box: object = None
    confidence: float = 0.0
    step_index: int | None = None


@dataclass
class SearchTrace:
    target: str
    params: SearchParams
    strategy: Strategy = Strategy.GUIDED
    steps: list = field(default_factory=list)
    outcome: Outcome | None = None
    locate_calls: int = 0
    cue_calls: int = 0

    @property
    def counters(self):
        return {'locate_calls': self.locate_calls, 'cue_calls': self.cue_calls}


@dataclass
class SearchOutcome:
    trace: SearchTrace
    located: tuple | None = None
    located_all: tuple = ()

    @property
    def found(self):
        return self.located is not None


def cue_threshold(level, p):
    if level < 0:
        raise SearchError(f'level must be >= 0, got {level}')
    return max(p.delta_floor, p.delta_base * p.delta_decay ** level)


class _PriorityFrontier:
    """Max-priority queue; equal priorities pop in insertion order."""

    def __init__(self):
        self._heap = []

    def push_all(self, nodes):
        for node in nodes:
            heapq.heappush(self._heap, (-node.priority, node.insertion_index, node))

    def pop(self):
        return heapq.heappop(self._heap)[2]

    def __bool__(self):
        return bool(self._heap)


class _QueueFrontier:
    def __init__(self):
        self._queue = deque()

    def push_all(self, nodes):
        self._queue.extend(nodes)

    def pop(self):
        return self._queue.popleft()

    def __bool__(self):
        return bool(self._queue)


class _StackFrontier:
    """Depth-first: the first child handed in is explored, with its whole subtree, first."""

    def __init__(self):
        self._stack = []

    def push_all(self, nodes):
        self._stack.extend(reversed(nodes))

    def pop(self):
        return self._stack.pop()

    def __bool__(self):
        return bool(self._stack)


class _Search:
    def __init__(self, backend, root, target, params, strategy, frontier, order=None,
                 policy=None):
        self.backend = backend
        self.root = root
        self.target = target
        self.params = params
        self.frontier = frontier
        self.order = order
        self.policy = policy
        self.trace = SearchTrace(target=target, params=params, strategy=strategy)
        self._inserted = 0
        self._best = (0.0, None, None)

    def _node(self, patch, level, priority):
        node = SearchNode(patch, level, priority, self._inserted)
        self._inserted += 1
        return node

    def _guided_cue(self, node, query, result):
        cue = result.cue
        if not self.policy.target_cue:
            cue = Heatmap.zeros(cue.frame, (cue.width, cue.height))
        if not self.policy.delta_check or max_value(cue) >= cue_threshold(node.level, self.params):
            return cue, CueKind.TARGET_SPECIFIC
        if not self.policy.contextual_cue:
            return Heatmap.zeros(cue.frame, (cue.width, cue.height)), CueKind.NONE
        text = self.backend.contextual_cue(query)
        heatmap = self.backend.locate_cue(text, node.patch)
        self.trace.cue_calls += 1
        return heatmap, CueKind.CONTEXTUAL

    def _expand(self, node, query, result):
        children = subdivide(node.patch, self.params.min_side)
        if not children:
            return CueKind.NONE, []
        if self.policy is None:
            heatmap, kind = result.cue, CueKind.NONE
        else:
            heatmap, kind = self._guided_cue(node, query, result)
        scored = [ChildPriority(c, patch_priority(heatmap, c)) for c in children]
        if self.order is None:
            self.frontier.push_all([
                self._node(c.patch, node.level + 1, c.priority) for c in scored
            ])
        else:
            self.frontier.push_all([
                self._node(scored[i].patch, node.level + 1, scored[i].priority)
                for i in self.order(len(scored))
            ])
        return kind, scored

    def _finish(self, outcome, located_all=()):
        self.trace.outcome = outcome
        located = None
        if outcome.kind != OutcomeKind.NOT_FOUND:
            located = (outcome.box, outcome.confidence)
        logger.debug('search for %r ended %s after %d steps',
                     self.target, outcome.kind.value, len(self.trace.steps))
        return SearchOutcome(trace=self.trace, located=located, located_all=tuple(located_all))

    def run(self):
        self.frontier.push_all([self._node(self.root, 0, math.inf)])
        while self.frontier:
            node = self.frontier.pop()
            index = len(self.trace.steps)
            query = TargetQuery(self.target, node.patch)
            try:
                result = self.backend.locate_target(query)
                self.trace.locate_calls += 1
                logger.debug('step %d: %s level %d priority %s confidence %.3f',
                             index, node.patch.corners(), node.level, node.priority,
                             result.confidence)
                if result.confidence > self._best[0]:
                    self._best = (result.confidence, result.box, index)

                if result.confidence >= self.params.high_conf:
                    self.trace.steps.append(
                        SearchStep(index, node, CueKind.NONE, result.confidence)
                    )
                    if node.level == 0:
                        located_all = [d for d in result.detections
                                       if d.confidence >= self.params.high_conf]
                    else:
                        located_all = []
                    return self._finish(
                        Outcome(OutcomeKind.FOUND, result.box, result.confidence, index),
                        located_all,
                    )
                kind, scored = self._expand(node, query, result)
            except (BackendError, HeatmapError) as exc:
                raise SearchInterrupted(
                    f'search for {self.target!r} failed at step {index}: {exc}', self.trace, exc
                ) from exc
            self.trace.steps.append(SearchStep(index, node, kind, result.confidence, scored))

        confidence, box, index = self._best
        if box is not None and confidence >= self.params.low_conf:
            return self._finish(Outcome(OutcomeKind.BEST_EFFORT, box, confidence, index))
        return self._finish(Outcome(OutcomeKind.NOT_FOUND))


def vstar_search(backend, root, target, p=None, policy=None):
    p = p or SearchParams()
    policy = policy or CuePolicy()
    search = _Search(backend, root, target, p, _strategy_for(policy), _PriorityFrontier(),
                     policy=policy)
    return search.run()


def _strategy_for(policy):
    if not policy.target_cue:
        return Strategy.NO_TARGET_CUE
    if not policy.contextual_cue:
        return Strategy.NO_CONTEXTUAL_CUE
    return Strategy.GUIDED


def reverse_raster(n):
    return list(range(n - 1, -1, -1))


def baseline_search(strategy, backend, root, target, p=None, seed=0):
    """
    Uninformed search with the guided search's localization and thresholds.

    Random strategies visit siblings in a seeded uniform shuffle, sequential
    ones in reverse raster order (bottom-right first). BFS visits a level
    completely before the next, DFS finishes a child's subtree before its
    siblings. Cue heatmaps are recorded but never used for ordering.
    """
    strategy = Strategy(strategy)
    if not strategy.is_baseline:
        raise SearchError(f'{strategy.value} is not a baseline strategy')
    p = p or SearchParams()
    if strategy in (Strategy.RANDOM_BFS, Strategy.RANDOM_DFS):
        rng = np.random.default_rng(seed)

        def order(n):
            return [int(i) for i in rng.permutation(n)]
    else:
        order = reverse_raster
    if strategy in (Strategy.RANDOM_BFS, Strategy.SEQUENTIAL_BFS):
        frontier = _QueueFrontier()
    else:
        frontier = _StackFrontier()
    return _Search(backend, root, target, p, strategy, frontier, order=order).run()


def run_strategy(strategy, backend, root, target, p=None, seed=0):
    strategy = Strategy(strategy)
    if strategy.is_baseline:
        return baseline_search(strategy, backend, root, target, p, seed)
    if strategy == Strategy.NO_TARGET_CUE:
        return vstar_search(backend, root, target, p, CuePolicy(target_cue=False))
    if strategy == Strategy.NO_CONTEXTUAL_CUE:
        return vstar_search(backend, root, target, p, CuePolicy(contextual_cue=False))
    return vstar_search(backend, root, target, p)


def search_length(t):
    """Patches popped after the root until the one where the target was located."""
    if t.outcome is None or t.outcome.kind == OutcomeKind.NOT_FOUND:
        raise SearchError('search length is undefined for a search that located nothing')
    return t.outcome.step_index


def is_root_success(t):
    if t.outcome is None or t.outcome.kind == OutcomeKind.NOT_FOUND:
        return False
    return t.outcome.step_index == 0
