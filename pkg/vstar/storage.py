import json
import logging
from pathlib import Path

from .exceptions import DataError
from .serializers import (
    FixationRecordSerializer, SceneSerializer, SearchParamsSerializer, TraceSerializer,
)

logger = logging.getLogger(__name__)


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError as exc:
        raise DataError(f'{path}: file not found') from exc
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f'{path}: {exc}') from exc
    except json.JSONDecodeError as exc:
        raise DataError(f'{path}: invalid JSON ({exc})') from exc


def dumps(data):
    return json.dumps(data, indent=2, ensure_ascii=False) + '\n'


def write_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(data), encoding='utf-8')
    return path


def validated(serializer_class, data, label, **kwargs):
    serializer = serializer_class(data=data, **kwargs)
    if not serializer.is_valid():
        raise DataError(f'{label}: {json.dumps(serializer.errors)}')
    return serializer


def load_scene(path):
    return validated(SceneSerializer, read_json(path), str(path)).save()


def load_params(path):
    """Search parameter overrides from a JSON object; absent keys are left to the defaults."""
    serializer = validated(SearchParamsSerializer, read_json(path), str(path), partial=True)
    return dict(serializer.validated_data)


def load_trace(path):
    return validated(TraceSerializer, read_json(path), str(path)).save()


def dump_trace(trace):
    return TraceSerializer(trace).data


def load_fixation_records(path):
    """Valid records of a JSON-lines fixation file, and the number of malformed lines skipped."""
    path = Path(path)
    try:
        lines = path.read_text(encoding='utf-8').splitlines()
    except OSError as exc:
        raise DataError(f'{path}: {exc}') from exc

    records, skipped = [], 0
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError:
            data = None
        serializer = FixationRecordSerializer(data=data)
        if data is None or not serializer.is_valid():
            logger.warning('%s:%d: skipping malformed fixation record', path, number)
            skipped += 1
            continue
        records.append(serializer.validated_data)
    return records, skipped
