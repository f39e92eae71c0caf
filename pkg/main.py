#!/usr/bin/env python3
"""
wellsep - command-line entry point.

Delegates to ``src.cli.main``; see ``python main.py --help`` for the subcommands.
"""
import sys
from pathlib import Path

# Add project root to path
sys.path.append(str(Path(__file__).parent))

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
