from vstar.bench import replay_fixations, write_results
from vstar.conf import vstar_settings

from ._base import VStarCommand


class Command(VStarCommand):
    help = 'Replays human fixation heatmaps as search guidance and writes the result table'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--fixations', required=True, help='JSON-lines fixation dataset.')
        parser.add_argument('--gamma', type=float, action='append', dest='gammas',
                            help='Fixation decay; repeatable. Defaults to the settings.')
        parser.add_argument('--sigma', type=float, help='Gaussian spread in pixels.')
        parser.add_argument('--traces', action='store_true', help='Also write every search trace.')

    def run(self, **options):
        gammas = options['gammas'] or list(vstar_settings.FIXATION_GAMMAS)
        result = replay_fixations(
            options['fixations'], gammas, options['sigma'], self.search_params(options),
            grid=vstar_settings.HEATMAP_GRID,
            amplitude=vstar_settings.FIXATION_AMPLITUDE,
            seeds=(options['seed'] or 0,),
        )
        write_results(result, self.out_dir(options), options['format'], options['traces'])

        if result.skipped:
            self.stderr.write(f'{result.skipped} malformed record(s) skipped')
        if result.notice:
            self.stdout.write(self.style.WARNING(result.notice))
            return
        for row in result.table.rows:
            mean = '-' if row.mean_search_length is None else f'{row.mean_search_length:.2f}'
            self.stdout.write(f'  {row.strategy:<20} {mean:>8}  ({row.n_included} included)')
        self.stdout.write(self.style.SUCCESS(f"Results written to {self.out_dir(options)}"))
