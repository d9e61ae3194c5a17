#!/usr/bin/env python
"""Command-line utility for solves, convergence studies and verification."""
import sys


def main():
    """Run the command group."""
    try:
        from mongeampere.cli import main as execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import the solver packages. Are numpy, scipy, sympy and click "
            "installed (pip install -r requirements.txt) and is this directory on "
            "your PYTHONPATH?"
        ) from exc
    execute_from_command_line(sys.argv[1:])


if __name__ == '__main__':
    main()
