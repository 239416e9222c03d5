"""Allow running the CLI with python -m cli."""

from cli.app import secfc

secfc(prog_name='secfc')
