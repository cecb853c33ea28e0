"""Module entry point for ``python -m henonlab``."""

from .cli import main

main()
