"""CLI entry point for funcreg."""

from funcreg.cli.main import main

if __name__ == "__main__":
    main()
