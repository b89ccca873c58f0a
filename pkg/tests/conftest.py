import json
from pathlib import Path

import pytest

from ovmkit import dsl, workflow
from ovmkit.derivation import DeveloperBinding, derive

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"
GOLDEN = FIXTURES / "golden"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def fig4_text() -> str:
    return (FIXTURES / "fig4.ovm").read_text()


@pytest.fixture(scope="session")
def fig4(fig4_text):
    return dsl.parse(fig4_text)


@pytest.fixture(scope="session")
def fig4_guarded():
    return dsl.parse((FIXTURES / "fig4_guarded.ovm").read_text())


@pytest.fixture(scope="session")
def fig4_tenant():
    return dsl.parse((FIXTURES / "fig4_tenant.ovm").read_text())


@pytest.fixture(scope="session")
def fig9_graph():
    return workflow.load_graph(json.loads((FIXTURES / "fig9.awf").read_text()))


FIG5_BINDING = {"VP1": ["V1"], "VP2": ["VC3"]}
FIG6_BINDING = {"VP1": ["V2"], "VP2": ["VC2"]}


@pytest.fixture(scope="session")
def fig5(fig4):
    return derive(fig4, DeveloperBinding.of(FIG5_BINDING))


@pytest.fixture(scope="session")
def fig6(fig4):
    return derive(fig4, DeveloperBinding.of(FIG6_BINDING))
