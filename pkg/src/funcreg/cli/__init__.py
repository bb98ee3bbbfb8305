"""CLI package for funcreg."""
