from vstar.bench import (
    ExperimentConfig, generate_scene, scene_seed, synthesize_fixation_records,
    write_fixation_records,
)
from vstar.serializers import SceneSerializer
from vstar.storage import write_json

from ._base import VStarCommand


class Command(VStarCommand):
    help = 'Writes generated scenes and a synthetic fixation dataset'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--count', type=int, default=10)
        parser.add_argument('--fidelity', type=float, default=None)
        parser.add_argument('--noise', type=float, default=None)
        parser.add_argument('--no-fixations', action='store_true')

    def run(self, **options):
        count = options['count']
        if count < 1:
            raise self.usage_error('--count must be >= 1')
        cfg = ExperimentConfig.from_settings(
            seed=options['seed'], cue_fidelity=options['fidelity'], noise_level=options['noise'],
        )
        out = self.out_dir(options)

        self.stdout.write("Creating scenes...")
        for index in range(count):
            scene = generate_scene(scene_seed(cfg.seed, index), cfg)
            write_json(SceneSerializer(scene).data, out / 'scenes' / f'scene_{index:04d}.json')

        if not options['no_fixations']:
            self.stdout.write("Creating fixation records...")
            records = synthesize_fixation_records(count, cfg.seed, cfg.extent, cfg.target_size_range)
            write_fixation_records(records, out / 'fixations.jsonl')

        self.stdout.write(self.style.SUCCESS(f'Successfully wrote {count} scene(s) to {out}'))
