"""Flags, backend construction and exit codes shared by the vstar commands."""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError
from PIL import Image

from vstar.conf import vstar_settings
from vstar.exceptions import EXIT_USAGE, DataError, VStarError
from vstar.geometry import Rect
from vstar.perception import OracleBackend, PlantedTarget, SyntheticScene, fixation_backend
from vstar.remote import RemoteBackend
from vstar.search import SearchParams
from vstar.storage import load_fixation_records, load_params, load_scene

BACKENDS = ('oracle', 'fixation', 'remote')


class VStarCommand(BaseCommand):
    requires_system_checks = []
    backend_arguments = False

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, help='Seed for every random choice (default 0).')
        parser.add_argument('--params', help='JSON file overriding search parameters.')
        parser.add_argument('--high-conf', type=float, help='Confidence that ends a search.')
        parser.add_argument('--low-conf', type=float, help='Confidence accepted as a best effort.')
        parser.add_argument('--min-side', type=int, help='Smallest patch side that is still split.')
        parser.add_argument('--out', default='.', help='Directory the artifacts are written to.')
        parser.add_argument('--format', choices=('json', 'md'), default='json')
        if self.backend_arguments:
            parser.add_argument('--backend', choices=BACKENDS, default='oracle')
            parser.add_argument('--endpoint', help='Base URL of a remote perception server.')
            parser.add_argument('--scene', help='Synthetic scene JSON file.')
            parser.add_argument('--fixations', help='JSON-lines fixation dataset.')
            parser.add_argument('--record', type=int, default=0,
                                help='Index of the fixation record to search.')
            parser.add_argument('--gamma', type=float, default=0.9,
                                help='Fixation decay for the fixation backend.')
            parser.add_argument('--image', help='Pixel file of the searched image.')

    def usage_error(self, message):
        return CommandError(message, returncode=EXIT_USAGE)

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except VStarError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc

    def run(self, **options):
        raise NotImplementedError('subclasses of VStarCommand must provide a run() method')

    def param_overrides(self, options):
        """Search parameter overrides: flags over the --params file."""
        overrides = load_params(options['params']) if options.get('params') else {}
        for key in ('high_conf', 'low_conf', 'min_side'):
            if options.get(key) is not None:
                overrides[key] = options[key]
        return overrides

    def search_params(self, options):
        return SearchParams.from_settings(**self.param_overrides(options))

    def provenance(self, options, **extra):
        keys = ('seed', 'params', 'high_conf', 'low_conf', 'min_side', 'backend', 'endpoint',
                'scene', 'fixations', 'record', 'gamma', 'image')
        config = {key: options[key] for key in keys if options.get(key) is not None}
        config.update(extra)
        return config

    def out_dir(self, options):
        return Path(options['out'])

    def _fixation_record(self, options):
        records, skipped = load_fixation_records(options['fixations'])
        if skipped:
            self.stderr.write(f'{skipped} malformed fixation record(s) skipped')
        index = options['record']
        if not 0 <= index < len(records):
            raise DataError(f"{options['fixations']}: no valid record at index {index}")
        return records[index]

    def _image_extent(self, path):
        try:
            with Image.open(path) as img:
                return Rect(0, 0, *img.size)
        except OSError as exc:
            raise DataError(f'{path}: {exc}') from exc

    def build_backend(self, options):
        """The perception backend the flags ask for, and the root patch it searches."""
        kind = options['backend']
        if kind == 'remote':
            if not options.get('endpoint'):
                raise self.usage_error('--backend remote requires --endpoint')
            if options.get('image'):
                root = self._image_extent(options['image'])
            elif options.get('scene'):
                root = load_scene(options['scene']).extent
            else:
                raise self.usage_error('--backend remote requires --image or --scene for the image extent')
            backend = RemoteBackend(
                options['endpoint'],
                timeout=vstar_settings.REMOTE_TIMEOUT,
                retries=vstar_settings.REMOTE_RETRIES,
                image_path=options.get('image'),
            )
            return backend, root

        if kind == 'fixation':
            if not options.get('fixations'):
                raise self.usage_error('--backend fixation requires --fixations')
            record = self._fixation_record(options)
            scene = SyntheticScene(
                record['extent'], [PlantedTarget(record['target'], record['target_box'])],
                seed=options['seed'] or 0,
            )
            backend = fixation_backend(
                scene, record['fixations'], options['gamma'],
                grid=vstar_settings.HEATMAP_GRID,
                amplitude=vstar_settings.FIXATION_AMPLITUDE,
                confidence=vstar_settings.ORACLE_CONFIDENCE,
            )
            return backend, scene.extent

        if not options.get('scene'):
            raise self.usage_error('--backend oracle requires --scene')
        scene = load_scene(options['scene'])
        backend = OracleBackend(
            scene,
            grid=vstar_settings.HEATMAP_GRID,
            confidence=vstar_settings.ORACLE_CONFIDENCE,
            amplitude=vstar_settings.CUE_AMPLITUDE,
        )
        return backend, scene.extent
