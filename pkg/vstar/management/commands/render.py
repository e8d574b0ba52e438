from vstar.conf import vstar_settings
from vstar.heatmap import fixations_to_heatmap, write_heatmap_image
from vstar.perception import OracleBackend, TargetQuery
from vstar.rendering import write_trace_overlay
from vstar.storage import load_fixation_records, load_scene, load_trace

from ._base import VStarCommand


class Command(VStarCommand):
    help = 'Draws search traces and cue heatmaps as images'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--trace', help='Trace JSON file to draw as numbered patches.')
        parser.add_argument('--image', help='Background pixel file for the trace overlay.')
        parser.add_argument('--scene', help='Scene whose whole-image target cue is drawn.')
        parser.add_argument('--target', help='Target name for --scene.')
        parser.add_argument('--fixations', help='Fixation dataset whose heatmaps are drawn.')
        parser.add_argument('--gamma', type=float, default=0.9)
        parser.add_argument('--canvas', type=int, default=512, help='Longer side of the overlay.')
        parser.add_argument('--suffix', choices=('png', 'ppm'), default='png')

    def run(self, **options):
        if not (options['trace'] or options['scene'] or options['fixations']):
            raise self.usage_error('nothing to render: give --trace, --scene or --fixations')
        if options['scene'] and not options['target']:
            raise self.usage_error('--scene requires --target')
        out = self.out_dir(options)
        suffix = options['suffix']
        written = []

        if options['trace']:
            trace = load_trace(options['trace'])
            written.append(write_trace_overlay(
                trace, out / f'overlay.{suffix}', options['image'], options['canvas']
            ))

        if options['scene']:
            scene = load_scene(options['scene'])
            backend = OracleBackend(scene, grid=vstar_settings.HEATMAP_GRID,
                                    amplitude=vstar_settings.CUE_AMPLITUDE)
            cue = backend.locate_target(TargetQuery(options['target'], scene.extent)).cue
            written.append(write_heatmap_image(cue, out / f'target_cue.{suffix}'))

        if options['fixations']:
            records, _ = load_fixation_records(options['fixations'])
            for index, record in enumerate(records):
                heatmap = fixations_to_heatmap(record['fixations'], options['gamma'])
                written.append(write_heatmap_image(heatmap, out / f'fixations_{index:04d}.{suffix}'))

        for path in written:
            self.stdout.write(f'Wrote {path}')
        self.stdout.write(self.style.SUCCESS(f'Rendered {len(written)} image(s)'))
