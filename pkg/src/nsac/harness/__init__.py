"""Configuration, run loop, studies, file output and CLI."""
