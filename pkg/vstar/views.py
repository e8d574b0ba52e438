from functools import lru_cache
from pathlib import Path

from drf_spectacular.utils import extend_schema
from rest_framework import status
from rest_framework.response import Response
from rest_framework.views import APIView

from .conf import vstar_settings
from .exceptions import DataError
from .geometry import to_patch_frame
from .perception import (
    CUE_INSTRUCTION, LOCATE_INSTRUCTION, REGION_PREFIX, OracleBackend, TargetQuery,
    parse_instruction,
)
from .serializers import (
    CueRequestSerializer, CueResponseSerializer, LocateRequestSerializer, LocateResponseSerializer,
)
from .storage import load_scene


@lru_cache(maxsize=4)
def _oracle_for(scene_path, mtime_ns, grid, confidence, amplitude):
    # mtime_ns only keys the cache, so an edited scene file is reloaded.
    return OracleBackend(load_scene(scene_path), grid=grid, confidence=confidence,
                         amplitude=amplitude)


def server_backend():
    """Oracle over the scene file named by VSTAR['SERVER_SCENE'], or None when unset."""
    scene_path = vstar_settings.SERVER_SCENE
    if not scene_path:
        return None
    try:
        mtime_ns = Path(scene_path).stat().st_mtime_ns
    except OSError as exc:
        raise DataError(f'{scene_path}: {exc}') from exc
    return _oracle_for(str(scene_path), mtime_ns, vstar_settings.HEATMAP_GRID,
                       vstar_settings.ORACLE_CONFIDENCE, vstar_settings.CUE_AMPLITUDE)


class PerceptionAPIView(APIView):
    request_serializer_class = None
    instruction_template = None

    def parse(self, request):
        """Validated request and target name, or the 400/503 response to send instead."""
        serializer = self.request_serializer_class(data=request.data)
        if not serializer.is_valid():
            return None, None, Response({"error": serializer.errors}, status=status.HTTP_400_BAD_REQUEST)
        data = serializer.validated_data
        name = parse_instruction(self.instruction_template, data['instruction'])
        if name is None:
            return None, None, Response(
                {"error": f"Unrecognized instruction: {data['instruction']!r}"},
                status=status.HTTP_400_BAD_REQUEST,
            )
        try:
            backend = server_backend()
        except DataError as exc:
            return None, None, Response({"error": str(exc)}, status=status.HTTP_503_SERVICE_UNAVAILABLE)
        if backend is None:
            return None, None, Response(
                {"error": "No scene is configured for this server."},
                status=status.HTTP_503_SERVICE_UNAVAILABLE,
            )
        if not backend.scene.extent.contains(data['patch']):
            return None, None, Response(
                {"error": "The patch lies outside the scene."}, status=status.HTTP_400_BAD_REQUEST
            )
        return backend, (data, name), None


class LocateAPIView(PerceptionAPIView):
    request_serializer_class = LocateRequestSerializer
    instruction_template = LOCATE_INSTRUCTION

    @extend_schema(request=LocateRequestSerializer, responses=LocateResponseSerializer)
    def post(self, request):
        backend, parsed, error = self.parse(request)
        if error is not None:
            return error
        data, name = parsed
        patch = data['patch']

        if name.startswith(REGION_PREFIX):
            payload = {'box': None, 'confidence': 0.0, 'heatmap': backend.locate_cue(name, patch)}
        else:
            result = backend.locate_target(TargetQuery(name, patch))
            box = None
            if result.box is not None:
                box = to_patch_frame(result.box.clip(patch), patch)
            payload = {'box': box, 'confidence': result.confidence, 'heatmap': result.cue}
        return Response(LocateResponseSerializer(payload).data)


class CueAPIView(PerceptionAPIView):
    request_serializer_class = CueRequestSerializer
    instruction_template = CUE_INSTRUCTION

    @extend_schema(request=CueRequestSerializer, responses=CueResponseSerializer)
    def post(self, request):
        backend, parsed, error = self.parse(request)
        if error is not None:
            return error
        data, name = parsed
        text = backend.contextual_cue(TargetQuery(name, data['patch']))
        return Response(CueResponseSerializer({'text': text}).data)
