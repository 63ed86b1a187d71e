"""Shared fixtures: kappa computations are expensive (one P1 solve and one
mixed solve per boundary edge), so meshes, workspaces, and results are
cached for the whole session."""

import pytest

from hypercircle.kappa import KappaWorkspace, YParams, compute_kappa
from hypercircle.mesh import generate


class KappaCache:
    def __init__(self):
        self._meshes = {}
        self._workspaces = {}
        self._results = {}

    def mesh(self, domain, level):
        key = (str(domain), level)
        if key not in self._meshes:
            self._meshes[key] = generate(domain, level)
        return self._meshes[key]

    def workspace(self, domain, level):
        key = (str(domain), level)
        if key not in self._workspaces:
            self._workspaces[key] = KappaWorkspace(self.mesh(domain, level))
        return self._workspaces[key]

    def kappa(self, domain, level, beta=100.0):
        key = (str(domain), level, beta)
        if key not in self._results:
            mesh = self.mesh(domain, level)
            self._results[key] = compute_kappa(
                mesh, YParams.for_mesh(mesh, beta),
                workspace=self.workspace(domain, level))
        return self._results[key]


@pytest.fixture(scope="session")
def cache():
    return KappaCache()
