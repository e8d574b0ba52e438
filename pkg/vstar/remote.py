import base64
import io
import logging

import requests
from PIL import Image
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from .exceptions import BackendError, HeatmapError
from .geometry import to_root_frame
from .heatmap import Heatmap
from .perception import Detection, LocalizationResult, cue_instruction, locate_instruction
from .serializers import CueResponseSerializer, LocateResponseSerializer

logger = logging.getLogger(__name__)


class RemoteBackend:
    def __init__(self, endpoint, timeout=10.0, retries=3, image_path=None, session=None):
        self.endpoint = endpoint.rstrip('/')
        self.timeout = timeout
        self.image_path = image_path
        self.session = session or self._build_session(retries)

    @staticmethod
    def _build_session(retries):
        retry = Retry(
            total=retries,
            backoff_factor=0.2,
            status_forcelist=(502, 503, 504),
            allowed_methods=frozenset({'POST'}),
        )
        session = requests.Session()
        adapter = HTTPAdapter(max_retries=retry)
        session.mount('http://', adapter)
        session.mount('https://', adapter)
        return session

    def _encode_patch(self, patch):
        if self.image_path is None:
            return None
        with Image.open(self.image_path) as img:
            crop = img.crop((patch.x, patch.y, patch.x2, patch.y2))
            buffer = io.BytesIO()
            crop.save(buffer, format='PNG')
        return base64.b64encode(buffer.getvalue()).decode('ascii')

    def _post(self, path, payload, serializer_class):
        url = f'{self.endpoint}{path}'
        logger.debug('POST %s %s', url, payload.get('instruction'))
        try:
            response = self.session.post(url, json=payload, timeout=self.timeout)
            response.raise_for_status()
            data = response.json()
        except requests.RequestException as exc:
            raise BackendError(f'POST {url} failed: {exc}') from exc
        except ValueError as exc:
            raise BackendError(f'POST {url} returned invalid JSON') from exc

        serializer = serializer_class(data=data)
        if not serializer.is_valid():
            raise BackendError(f'POST {url} returned an unexpected body: {serializer.errors}')
        return serializer

    def _locate(self, instruction, patch):
        serializer = self._post('/v1/locate', {
            'image': self._encode_patch(patch),
            'patch': patch.corners(),
            'instruction': instruction,
        }, LocateResponseSerializer)
        data = serializer.validated_data
        wire = data['heatmap']
        try:
            heatmap = Heatmap.from_list(wire['width'], wire['height'], wire['values'], patch)
        except HeatmapError as exc:
            raise BackendError(f'server heatmap is unusable: {exc}') from exc
        return data, heatmap

    def locate_target(self, query):
        data, heatmap = self._locate(locate_instruction(query.name), query.patch)
        # Boxes come back in the patch frame.
        box = data['box']
        if box is not None:
            try:
                box = to_root_frame(box, query.patch)
            except ValueError as exc:
                raise BackendError(f'server box is outside the patch: {exc}') from exc
        if box is None:
            return LocalizationResult(None, 0.0, heatmap)
        confidence = data['confidence']
        return LocalizationResult(box, confidence, heatmap, (Detection(box, confidence),))

    def contextual_cue(self, query):
        serializer = self._post('/v1/cue', {
            'patch': query.patch.corners(),
            'instruction': cue_instruction(query.name),
        }, CueResponseSerializer)
        return serializer.validated_data['text']

    def locate_cue(self, cue_text, patch):
        return self._locate(locate_instruction(cue_text), patch)[1]
