from vstar.exceptions import SearchInterrupted
from vstar.search import Strategy, run_strategy
from vstar.storage import dump_trace, write_json

from ._base import VStarCommand


class Command(VStarCommand):
    help = 'Searches one image for a target and writes the search trace'
    backend_arguments = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--target', required=True, help='Name of the object to look for.')
        parser.add_argument('--strategy', choices=[s.value for s in Strategy],
                            default=Strategy.GUIDED.value)

    def run(self, **options):
        params = self.search_params(options)
        backend, root = self.build_backend(options)
        config = self.provenance(options, command='search', target=options['target'],
                                 strategy=options['strategy'])
        path = self.out_dir(options) / 'trace.json'

        try:
            outcome = run_strategy(options['strategy'], backend, root, options['target'], params,
                                   seed=options['seed'] or 0)
        except SearchInterrupted as exc:
            write_json({'config': config, **dump_trace(exc.trace)}, path)
            self.stderr.write(f'Partial trace written to {path}')
            raise

        write_json({'config': config, **dump_trace(outcome.trace)}, path)
        result = outcome.trace.outcome
        if outcome.found:
            self.stdout.write(self.style.SUCCESS(
                f"Located {options['target']!r} at {result.box.corners()} "
                f"({result.kind.value}, step {result.step_index}, confidence {result.confidence:.3f})"
            ))
        else:
            self.stdout.write(self.style.WARNING(
                f"{options['target']!r} not found after {len(outcome.trace.steps)} steps"
            ))
        self.stdout.write(f'Trace written to {path}')
