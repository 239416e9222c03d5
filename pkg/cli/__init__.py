"""Command-line interface for secure function computation regions."""
