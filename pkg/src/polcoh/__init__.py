"""polcoh - measure every Nth-order coherence of two-mode polarized light."""

import sys

from .cli import app, run


def main() -> None:
    """Main entry point for polcoh."""
    sys.exit(run())


__all__ = ["app", "main", "run"]
