"""`vstar <command> [flags]`: the vstar management commands behind one entry point."""
import os
import sys

from . import __version__
from .exceptions import EXIT_USAGE

COMMANDS = ('search', 'seal', 'bench', 'ablate', 'replay', 'render', 'make_scenes')

USAGE = (
    'usage: vstar [--version] <command> [flags]\n'
    f'commands: {", ".join(COMMANDS)}\n'
    "run 'vstar <command> --help' for the flags of a command\n"
)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ['--version']:
        sys.stdout.write(f'vstar {__version__}\n')
        return 0
    if not argv or argv[0] in ('-h', '--help'):
        (sys.stdout if argv else sys.stderr).write(USAGE)
        return 0 if argv else EXIT_USAGE
    name = argv[0]
    if name not in COMMANDS:
        sys.stderr.write(f'vstar: unknown command {name!r}\n{USAGE}')
        return EXIT_USAGE

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'vstar_project.settings')
    import django
    from django.core.management import load_command_class

    django.setup()
    command = load_command_class('vstar', name)
    try:
        command.run_from_argv(['vstar', name, *argv[1:]])
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return 0
