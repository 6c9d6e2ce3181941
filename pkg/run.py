#!/usr/bin/env python
"""
Run the rater-capability command line from a source checkout

    python run.py fit --input ratings.csv --threshold 3
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
