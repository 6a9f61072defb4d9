"""User interface module - command-line entry point."""
