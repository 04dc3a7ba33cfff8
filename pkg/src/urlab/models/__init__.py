from urlab.models.base import EnvironmentModel, IIDModel, bandit
from urlab.models.dirichlet import DirichletGridModel, beta_entropy
from urlab.models.known import KnownGridModel
from urlab.models.location import LocationMixture
from urlab.models.mixture import MixtureModel, mdl_select, posterior_sample

__all__ = [
    "EnvironmentModel",
    "IIDModel",
    "bandit",
    "DirichletGridModel",
    "beta_entropy",
    "KnownGridModel",
    "LocationMixture",
    "MixtureModel",
    "mdl_select",
    "posterior_sample",
]
