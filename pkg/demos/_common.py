"""Shared loader for the demo scripts."""

import os

from lassorank.parser import load_program

PROGRAMS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "programs")


def load(name):
    with open(os.path.join(PROGRAMS, name + ".lasso")) as fh:
        return load_program(fh.read())
