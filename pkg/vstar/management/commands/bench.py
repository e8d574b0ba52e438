from vstar.bench import ExperimentConfig, load_experiment_config, run_experiment, write_results
from vstar.conf import vstar_settings
from vstar.search import SearchParams

from ._base import VStarCommand


class Command(VStarCommand):
    help = 'Compares search strategies on generated scenes and writes the result table'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--config', help='JSON experiment config; absent keys use the settings.')
        parser.add_argument('--scenes', type=int, help='Number of generated scenes.')
        parser.add_argument('--fidelity', type=float, help='Cue fidelity of the generated scenes.')
        parser.add_argument('--noise', type=float, help='Cue noise level of the generated scenes.')
        parser.add_argument('--workers', type=int, default=None)
        parser.add_argument('--traces', action='store_true', help='Also write every search trace.')

    def experiment(self, cfg, workers):
        return run_experiment(cfg, workers)

    def config(self, options):
        """Experiment config: flags over --params over the config file over the settings."""
        params = self.param_overrides(options)
        overrides = {
            'seed': options['seed'],
            'n_scenes': options.get('scenes'),
            'cue_fidelity': options.get('fidelity'),
            'noise_level': options.get('noise'),
        }
        if options.get('config'):
            return load_experiment_config(options['config'], params, **overrides)
        return ExperimentConfig.from_settings(params=SearchParams.from_settings(**params), **overrides)

    def run(self, **options):
        cfg = self.config(options)
        workers = options['workers'] or vstar_settings.BENCH_WORKERS
        self.stdout.write(f'Running {cfg.n_scenes} scene(s)...')
        result = self.experiment(cfg, workers)
        written = write_results(result, self.out_dir(options), options['format'], options['traces'])

        for row in result.table.rows:
            mean = '-' if row.mean_search_length is None else f'{row.mean_search_length:.2f}'
            self.stdout.write(f'  {row.strategy:<20} {mean:>8}  ({row.n_included} included)')
        failures = sum(bool(row.errors) for row in result.scenes)
        if failures:
            self.stderr.write(f'{failures} scene(s) had failed searches, see results.json')
        self.stdout.write(self.style.SUCCESS(f'Results written to {written[0].parent}'))
