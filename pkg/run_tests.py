#!/usr/bin/env python3
"""
Test Runner Script for lifetraces
Runs the pytest suite; --fast skips the exhaustive checks marked slow.
"""

import os
import subprocess
import sys


def run_tests(fast: bool = False) -> int:
    """Run all tests for the project"""
    print("Running lifetraces tests")
    print("=" * 50)

    project_root = os.path.dirname(os.path.abspath(__file__))
    os.chdir(project_root)

    command = [sys.executable, "-m", "pytest", "tests", "-v"]
    if fast:
        command += ["-m", "not slow"]
    print(" ".join(command))

    try:
        result = subprocess.run(command)
    except Exception as e:
        print(f"Error running test suite: {e}")
        return 1

    print("\n" + "=" * 50)
    print(f"Test execution completed with return code {result.returncode}.")
    return result.returncode


if __name__ == "__main__":
    sys.exit(run_tests(fast="--fast" in sys.argv[1:]))
