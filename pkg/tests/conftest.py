import random
import sys
from pathlib import Path

import pytest

from sealbid.ledger import ETHER, Address, Ledger

# make the plain-module oracles importable
sys.path.insert(0, str(Path(__file__).parent))


def eth(x) -> int:
    from decimal import Decimal

    return int(Decimal(str(x)) * ETHER)


def addr(byte: int) -> Address:
    return Address(bytes([byte]) * 20)


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def ledger():
    return Ledger()


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance and acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.RESULTS:
            terminalreporter.write_line(line)
