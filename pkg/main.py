"""Main module for the simulator, equivalent to the ``simcli`` command."""

from hstce.cli import main

if __name__ == "__main__":
    main()
