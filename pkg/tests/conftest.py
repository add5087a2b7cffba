from importlib import resources

import pytest

from opfbench.cases import case_names


def bundled_case_path(name: str) -> str:
    return str(resources.files("opfbench.cases").joinpath(f"{name}.m"))


@pytest.fixture(scope="session")
def case_paths() -> dict:
    return {name: bundled_case_path(name) for name in case_names()}
