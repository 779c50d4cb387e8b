#!/usr/bin/env python3
"""Run the acceptance tests and print the per-criterion summary.

Arguments after ``--`` go to pytest unchanged.
"""
import argparse
import ast
import pathlib
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parents[1]
SUITE = ROOT / "tests" / "test_acceptance.py"


def criterion_of_tests():
    """Map test function name -> criterion number, read from the markers."""
    out = {}
    for node in ast.parse(SUITE.read_text()).body:
        if not isinstance(node, ast.FunctionDef):
            continue
        for dec in node.decorator_list:
            if isinstance(dec, ast.Call) and getattr(dec.func, "attr", None) == "acceptance":
                out[node.name] = dec.args[0].value
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--criterion", "-c", type=int, action="append", default=[],
                    help="run only this criterion (repeatable)")
    ap.add_argument("pytest_args", nargs="*")
    args = ap.parse_args(argv)
    cmd = [sys.executable, "-m", "pytest", str(SUITE), "-q"]
    if args.criterion:
        names = [k for k, v in criterion_of_tests().items() if v in set(args.criterion)]
        if not names:
            ap.error("no tests for the requested criteria")
        cmd += ["-k", " or ".join(names)]
    return subprocess.call(cmd + args.pytest_args, cwd=ROOT)


if __name__ == "__main__":
    sys.exit(main())
