#!/usr/bin/env python3
"""
Main entry point for the orbit thermodynamics command line.
Run this file with a subcommand, e.g. `python main.py classify sl2 --functional 0,2,-2`.
"""

from orbit_thermo.cli import main

if __name__ == "__main__":
    main()
