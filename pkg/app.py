"""Application entry point for the connsum command-line tool."""

from __future__ import annotations

import sys

from connsum.cli import run


def main() -> int:
    """Dispatch the process arguments to the command-line front end.

    Args:
        None: Reads `sys.argv`.

    Returns:
        int: Process exit code.
    """

    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
