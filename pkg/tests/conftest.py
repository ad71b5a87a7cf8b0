import importlib.util
import shlex
import sys
from pathlib import Path

import pytest

from loas.asp.parser import parse_program
from loas.taskfile import load_task

ROOT = Path(__file__).resolve().parent.parent
TASKS = ROOT / "tasks"
GOLDEN = Path(__file__).resolve().parent / "golden"

HAS_CLINGO = importlib.util.find_spec("clingo") is not None
CLINGO_CMD = f"{shlex.quote(sys.executable)} -m clingo --opt-mode=opt" if HAS_CLINGO else None
needs_clingo = pytest.mark.skipif(not HAS_CLINGO, reason="external solver module not installed")

EXAMPLE1 = """
slot(m,1). slot(m,2). slot(t,1). slot(t,2).
0 {assign(D,S)} 1 :- slot(D,S).
"""
W1 = ":~ assign(D,S).[1@1]"
W2 = ":~ assign(D,S).[1@1, D]"
W3 = ":~ assign(D,S).[1@1, D, S]"


@pytest.fixture
def example1():
    return parse_program(EXAMPLE1)


@pytest.fixture
def appendix_task():
    return load_task(TASKS / "appendix.task")


@pytest.fixture
def example4_task():
    return load_task(TASKS / "example4.task")


@pytest.fixture(scope="session")
def example5_task():
    return load_task(TASKS / "example5_small.task")
