from ..errors import DomainError
from .mixture import GaussianMixtureModel, MixtureParams, NormalizedMixture, normalize_mixture
from .observable import Box, GaussLocation, ModelSample, ObservableModel


def _options(text: str) -> dict[str, str]:
    options = {}
    for item in filter(None, text.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"model option must look like key=value, got {item!r}")
        options[key.strip()] = value.strip()
    return options


def parse_model(text: str) -> ObservableModel:
    """Build a model from ``mixture:d=10``, ``gauss-location`` or
    ``gauss-location:curvature=0.5``."""
    name, _, rest = text.strip().lower().partition(":")
    options = _options(rest)
    allowed = {"mixture": {"d"}, "gauss-location": {"curvature"}}
    if name not in allowed:
        raise DomainError(f"unknown model {name!r}")
    unknown = set(options) - allowed[name]
    if unknown:
        raise DomainError(f"unknown options {sorted(unknown)} for model {name!r}")
    try:
        if name == "mixture":
            return GaussianMixtureModel(components=int(options.get("d", "10")))
        return GaussLocation(curvature=float(options.get("curvature", "0")))
    except ValueError:
        raise DomainError(f"bad option value in model {text!r}") from None


__all__ = [
    "Box",
    "GaussLocation",
    "GaussianMixtureModel",
    "MixtureParams",
    "ModelSample",
    "NormalizedMixture",
    "ObservableModel",
    "normalize_mixture",
    "parse_model",
]
