"""Allow ``python -m qaoatrust``."""

from qaoatrust.cli import app

app()
