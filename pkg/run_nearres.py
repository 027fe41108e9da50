#!/usr/bin/env python3
"""
CLI wrapper for running nearres from a checkout
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from nearres.cli import main

if __name__ == '__main__':
    main()
