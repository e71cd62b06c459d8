"""
Registry for weight-process implementations using the generic Registry class.
Models are looked up by the short name used in configs (``model = nrm``).
"""
from typing import Any, List, Tuple

from utils.registry import Registry
from models.base_model import BaseWeightProcess


class ModelRegistry(Registry[BaseWeightProcess]):
    """Weight-process registry that extends the generic Registry."""

    def __init__(self):
        super().__init__(BaseWeightProcess)

    def create_model(self, name: str, **params: Any) -> BaseWeightProcess:
        """Create a model by its config name.

        Raises:
            UnsupportedModelError: If no model with the given name exists
        """
        return self.create(name, **params)

    def get_available_models(self) -> List[Tuple[str, str]]:
        """(name, description) pairs for every registered model."""
        return self.get_available_components(
            name_formatter=lambda cls: cls.__doc__.strip().splitlines()[0] if cls.__doc__ else cls.__name__
        )

    def register(self, component: Any) -> None:
        """Register a model class or an instance of one."""
        if isinstance(component, BaseWeightProcess):
            component = component.__class__
        super().register(component)


# Create the singleton registry instance
registry = ModelRegistry()

# Import models after registry creation to avoid circular imports
from models.geometric import GeometricModel
from models.nrm import NrmModel
from models.changepoint import ChangepointModel

registry.register(GeometricModel)
registry.register(NrmModel)
registry.register(ChangepointModel)


def create_model(name: str, **params: Any) -> BaseWeightProcess:
    return registry.create_model(name, **params)
