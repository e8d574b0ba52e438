import logging
import re
from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np

from .exceptions import DataError
from .geometry import Rect
from .heatmap import Heatmap, default_sigma, fixation_density, fixation_scale

logger = logging.getLogger(__name__)

LOCATE_INSTRUCTION = 'Please locate the {} in the image.'
CUE_INSTRUCTION = 'What is the most likely location of the {} in the image?'

REGION_PREFIX = 'region:'
UNKNOWN_REGION = 'region:unknown'

# A target must cover 20 px of the 224 px encoder input to be localized.
DETECTABLE_SIDE = 20
ENCODER_SIDE = 224


def locate_instruction(name):
    return LOCATE_INSTRUCTION.format(name)


def cue_instruction(name):
    return CUE_INSTRUCTION.format(name)


def parse_instruction(template, instruction):
    """Recover the expression substituted into `template`, or None if it does not match."""
    prefix, suffix = template.split('{}')
    match = re.fullmatch(re.escape(prefix) + '(.+)' + re.escape(suffix), instruction)
    return match.group(1) if match else None


@dataclass(frozen=True)
class TargetQuery:
    name: str
    patch: Rect

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise DataError('target name must not be empty')


@dataclass(frozen=True)
class Detection:
    box: Rect
    confidence: float


@dataclass(frozen=True, eq=False)
class LocalizationResult:
    box: Rect | None
    confidence: float
    cue: Heatmap
    detections: tuple = ()

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise DataError(f'confidence must lie in [0, 1], got {self.confidence}')
        if self.box is not None and not self.box.intersects(self.cue.frame):
            raise DataError(
                f'box {self.box.corners()} does not intersect patch {self.cue.frame.corners()}'
            )


@dataclass(frozen=True)
class PlantedTarget:
    name: str
    box: Rect
    detectability: float = 1.0


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    extent: Rect
    targets: tuple = ()
    context_regions: dict = field(default_factory=dict)
    cue_fidelity: float = 1.0
    noise_level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'targets', tuple(self.targets))
        if not 0.0 <= self.cue_fidelity <= 1.0:
            raise DataError(f'cue_fidelity must lie in [0, 1], got {self.cue_fidelity}')
        if self.noise_level < 0:
            raise DataError(f'noise_level must be >= 0, got {self.noise_level}')
        if self.seed < 0:
            raise DataError(f'seed must be >= 0, got {self.seed}')
        for target in self.targets:
            if not self.extent.contains(target.box):
                raise DataError(f'target {target.name!r} lies outside the scene extent')
            region = self.context_regions.get(target.name)
            if region is not None and not region.contains(target.box):
                raise DataError(f'context region of {target.name!r} does not contain its box')

    def targets_named(self, name):
        return [t for t in self.targets if t.name == name]


class PerceptionBackend(Protocol):
    def locate_target(self, query: TargetQuery) -> LocalizationResult: ...

    def contextual_cue(self, query: TargetQuery) -> str: ...

    def locate_cue(self, cue_text: str, patch: Rect) -> Heatmap: ...


def is_detectable(target_box, patch):
    cx, cy = target_box.center
    if not patch.contains_point(cx, cy):
        return False
    return target_box.shorter_side * ENCODER_SIDE >= DETECTABLE_SIDE * patch.shorter_side


class OracleBackend:
    """Answers from the planted targets of a synthetic scene, with noise seeded by (scene.seed, patch)."""

    NOISE_TARGET, NOISE_CONTEXT, NOISE_JITTER = 0, 1, 2

    def __init__(self, scene, grid=16, confidence=0.9, confidence_jitter=0.0, amplitude=6.0):
        self.scene = scene
        self.grid = (grid, grid)
        self.confidence = confidence
        self.confidence_jitter = confidence_jitter
        self.amplitude = amplitude

    def _rng(self, patch, stream):
        return np.random.default_rng([self.scene.seed, stream, patch.x, patch.y, patch.w, patch.h])

    def _noise(self, patch, stream):
        width, height = self.grid
        if self.scene.noise_level == 0:
            return np.zeros((height, width))
        return self._rng(patch, stream).uniform(0.0, self.scene.noise_level, (height, width))

    def _cell_size(self, patch):
        width, height = self.grid
        return max(patch.w / width, patch.h / height)

    def _bump(self, patch, center, sigma):
        canvas = Heatmap.zeros(patch, self.grid)
        xs, ys = canvas.cell_centers()
        d2 = (xs[np.newaxis, :] - center[0]) ** 2 + (ys[:, np.newaxis] - center[1]) ** 2
        return self.amplitude * self.scene.cue_fidelity * np.exp(-d2 / (2 * sigma ** 2))

    def _confidence_for(self, target, patch):
        value = self.confidence * target.detectability
        if self.confidence_jitter:
            value -= self.confidence_jitter * self._rng(patch, self.NOISE_JITTER).uniform()
        return float(min(1.0, max(0.0, value)))

    def locate_target(self, query):
        patch = query.patch
        values = self._noise(patch, self.NOISE_TARGET)
        detections = []
        for target in self.scene.targets_named(query.name):
            center = target.box.center
            if not patch.contains_point(*center):
                continue
            sigma = max(target.box.w, target.box.h, self._cell_size(patch))
            values = values + self._bump(patch, center, sigma)
            if is_detectable(target.box, patch):
                confidence = self._confidence_for(target, patch)
                if confidence > 0:
                    detections.append(Detection(target.box.clip(self.scene.extent), confidence))

        detections.sort(key=lambda d: d.confidence, reverse=True)
        cue = Heatmap(values, patch)
        if not detections:
            return LocalizationResult(None, 0.0, cue)
        best = detections[0]
        return LocalizationResult(best.box, best.confidence, cue, tuple(detections))

    def contextual_cue(self, query):
        if query.name in self.scene.context_regions:
            return f'{REGION_PREFIX}{query.name}'
        return UNKNOWN_REGION

    def locate_cue(self, cue_text, patch):
        values = self._noise(patch, self.NOISE_CONTEXT)
        region = None
        if cue_text.startswith(REGION_PREFIX):
            region = self.scene.context_regions.get(cue_text[len(REGION_PREFIX):])
        if region is not None:
            sigma = max(max(region.w, region.h) / 4, self._cell_size(patch))
            values = values + self._bump(patch, region.center, sigma)
        return Heatmap(values, patch)


class FixationBackend:
    """Oracle localization; both cue branches answer with the fixation heatmap over the patch."""

    def __init__(self, scene, fixations, gamma, sigma=None, grid=16, amplitude=6.0,
                 confidence=0.9):
        self.oracle = OracleBackend(scene, grid=grid, confidence=confidence)
        self.fixations = fixations
        self.gamma = gamma
        self.sigma = default_sigma(fixations.image_extent) if sigma is None else sigma
        self.grid = (grid, grid)
        # One scale for the whole image, shared by every patch.
        self.scale = fixation_scale(fixations, gamma, self.sigma, self.grid, amplitude)

    def _cue(self, patch):
        density = fixation_density(self.fixations, self.gamma, self.sigma, patch, self.grid)
        return Heatmap(density * self.scale, patch)

    def locate_target(self, query):
        return replace(self.oracle.locate_target(query), cue=self._cue(query.patch))

    def contextual_cue(self, query):
        return UNKNOWN_REGION

    def locate_cue(self, cue_text, patch):
        return self._cue(patch)


def fixation_backend(scene, fixations, gamma, sigma=None, **kwargs):
    """Backend whose cues come from `fixations`; boxes still come from the scene's planted targets."""
    return FixationBackend(scene, fixations, gamma, sigma=sigma, **kwargs)
