#!/usr/bin/env python3
"""
rydberg-rbm - RBM reconstruction of Rydberg-chain states

Main entry point for the command-line pipeline. See rydberg_rbm/pipeline/cli.py
for the subcommands.
"""

import sys
import os

# Load environment variables from .env file
from dotenv import load_dotenv
load_dotenv()

# Add current directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from rydberg_rbm.pipeline.cli import main


if __name__ == "__main__":
    sys.exit(main())
