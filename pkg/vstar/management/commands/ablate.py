from vstar.bench import ablate_cues

from .bench import Command as BenchCommand


class Command(BenchCommand):
    help = 'Reruns guided search without each cue and writes the result table'

    def experiment(self, cfg, workers):
        return ablate_cues(cfg, workers)
