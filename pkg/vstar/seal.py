import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol

from PIL import Image

from .exceptions import BackendError, GeometryError, SealError, SearchInterrupted, VStarError
from .geometry import Rect
from .heatmap import save_image
from .perception import PerceptionBackend
from .search import vstar_search

logger = logging.getLogger(__name__)

PROMPT_HEADER = '<Image>\n'
PROMPT_FOCUS = 'Additional visual information to focus on: \n'


class Projection(str, Enum):
    LINEAR = 'linear'
    RESAMPLER = 'resampler'

    @property
    def tokens(self):
        return 256 if self is Projection.LINEAR else 32


@dataclass(frozen=True)
class ProjectionChoice:
    global_projection: Projection
    target_projections: tuple = ()

    @property
    def visual_tokens(self):
        return self.global_projection.tokens + sum(p.tokens for p in self.target_projections)


def projection_policy(num_found_targets, single_target_variant=False):
    """
    Linear keeps all 256 visual tokens of a slot, the resampler condenses it to 32.

    Without targets the global image keeps its tokens; one or two targets take
    the linear projection and the global image is resampled; three or more are
    all resampled. `single_target_variant` follows the cheaper training-time
    rule: only a lone target is projected linearly, otherwise the global image
    keeps its tokens and every target is resampled.
    """
    n = num_found_targets
    if n < 0:
        raise ValueError(f'num_found_targets must be >= 0, got {n}')
    if n == 0:
        return ProjectionChoice(Projection.LINEAR)
    if single_target_variant:
        if n == 1:
            return ProjectionChoice(Projection.RESAMPLER, (Projection.LINEAR,))
        return ProjectionChoice(Projection.LINEAR, (Projection.RESAMPLER,) * n)
    if n <= 2:
        return ProjectionChoice(Projection.RESAMPLER, (Projection.LINEAR,) * n)
    return ProjectionChoice(Projection.RESAMPLER, (Projection.RESAMPLER,) * n)


@dataclass(frozen=True)
class ImageRef:
    name: str
    extent: Rect
    path: str | None = None


@dataclass(frozen=True)
class SearchedTarget:
    name: str
    present: bool
    box: Rect | None = None
    crop: Rect | None = None
    confidence: float | None = None


@dataclass
class VisualWorkingMemory:
    question: str
    global_image: ImageRef
    searched_targets: list = field(default_factory=list)

    @property
    def present_targets(self):
        return [t for t in self.searched_targets if t.present]

    @property
    def target_locations(self):
        return [t.box.corners() for t in self.present_targets]

    def add_found(self, name, box, crop, confidence):
        self.searched_targets.append(SearchedTarget(name, True, box, crop, confidence))

    def add_missing(self, name):
        self.searched_targets.append(SearchedTarget(name, False))


class VqaBackend(Protocol):
    def list_missing_targets(self, image: ImageRef, question: str) -> list: ...

    def answer(self, prompt: str) -> str: ...


class ScriptedVqa:
    """Offline VQA model: fixed target list, canned answer, prompts kept for inspection."""

    def __init__(self, targets=(), answer='', fail_on=None):
        self.targets = list(targets)
        self.canned_answer = answer
        self.fail_on = fail_on
        self.prompts = []

    def list_missing_targets(self, image, question):
        if self.fail_on == 'targets':
            raise BackendError('scripted VQA failure while listing targets')
        return list(self.targets)

    def answer(self, prompt):
        self.prompts.append(prompt)
        if self.fail_on == 'answer':
            raise BackendError('scripted VQA failure while answering')
        return self.canned_answer


def render_vwm_prompt(vwm):
    if not vwm.searched_targets:
        return f'{PROMPT_HEADER}{vwm.question}'
    lines = [PROMPT_HEADER, PROMPT_FOCUS]
    for target in vwm.searched_targets:
        if target.present:
            x1, y1, x2, y2 = target.box.corners()
            lines.append(f'{target.name} <Object> at location [{x1}, {y1}, {x2}, {y2}]; \n')
        else:
            lines.append(f'{target.name} not existent in the image; \n')
    lines.append(vwm.question)
    return ''.join(lines)


def crop_target(image, box, margin_frac=0.2):
    """Region around `box` grown by margin_frac of its size on every side, clipped to the image."""
    if margin_frac < 0:
        raise GeometryError(f'margin_frac must be >= 0, got {margin_frac}')
    if not image.extent.intersects(box):
        raise GeometryError(f'box {box.corners()} does not overlap the image')
    dx = round(box.w * margin_frac)
    dy = round(box.h * margin_frac)
    extent = image.extent
    return Rect.from_corners(
        max(extent.x, box.x - dx), max(extent.y, box.y - dy),
        min(extent.x2, box.x2 + dx), min(extent.y2, box.y2 + dy),
    )


def crop_pixels(image, region, output_path):
    """Cut `region` out of the image file behind `image` and save it."""
    if image.path is None:
        raise GeometryError(f'image {image.name!r} has no pixel file to crop from')
    with Image.open(image.path) as img:
        crop = img.crop((region.x, region.y, region.x2, region.y2))
        return save_image(crop.copy(), Path(output_path))


@dataclass
class SealResult:
    response: str
    vwm: VisualWorkingMemory
    traces: list
    projection: ProjectionChoice
    errors: dict = field(default_factory=dict)


def seal_answer(vqa: VqaBackend, search_backend: PerceptionBackend, image: ImageRef, question: str,
                p=None, *, crop_margin=0.2, concurrent=False, single_target_variant=False):
    vwm = VisualWorkingMemory(question=question, global_image=image)
    try:
        targets = vqa.list_missing_targets(image, question)
    except BackendError as exc:
        raise SealError(f'VQA model failed to list targets: {exc}', vwm) from exc
    logger.info('VQA model needs %d target(s): %s', len(targets), ', '.join(targets))

    def run(name):
        try:
            return vstar_search(search_backend, image.extent, name, p), None
        except VStarError as exc:
            return None, exc

    if concurrent and len(targets) > 1:
        with ThreadPoolExecutor(max_workers=len(targets)) as pool:
            results = list(pool.map(run, targets))
    else:
        results = [run(name) for name in targets]

    traces = []
    errors = {}
    for name, (outcome, error) in zip(targets, results):
        if error is not None:
            logger.warning('search for %r failed: %s', name, error)
            errors[name] = str(error)
            if isinstance(error, SearchInterrupted):
                traces.append(error.trace)
            vwm.add_missing(name)
            continue
        traces.append(outcome.trace)
        if not outcome.found:
            vwm.add_missing(name)
            continue
        if outcome.located_all:
            located = [(d.box, d.confidence) for d in outcome.located_all]
        else:
            located = [outcome.located]
        for box, confidence in located:
            vwm.add_found(name, box, crop_target(image, box, crop_margin), confidence)

    projection = projection_policy(len(vwm.present_targets), single_target_variant)
    prompt = render_vwm_prompt(vwm)
    try:
        response = vqa.answer(prompt)
    except BackendError as exc:
        raise SealError(f'VQA model failed to answer: {exc}', vwm, traces) from exc
    return SealResult(response, vwm, traces, projection, errors)
