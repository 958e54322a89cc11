"""Allow running wsdict as `python -m wsdict`."""

from wsdict.cli import main

main()
