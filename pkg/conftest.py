"""Wspólne fixtures i profil hypothesis dla testów."""

import os

import pytest
from hypothesis import HealthCheck, settings

from canonical import CanonicalForm
from laurent import BiLaurent

settings.register_profile(
    "deterministic",
    derandomize=True,
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("dev", max_examples=200, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "deterministic"))


@pytest.fixture
def hand_pair():
    """(j=2, p=u, p'=0): para nieizomorficzna z ręcznej eliminacji."""
    return CanonicalForm(2, BiLaurent.monomial(1, 0)), CanonicalForm.zero(2)


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in list(os.environ):
        if name.startswith("BLOWUP_"):
            monkeypatch.delenv(name, raising=False)
