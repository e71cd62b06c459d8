"""
Generic registry for plugin-like components such as weight processes.
Provides a common interface for component registration, lookup, and instantiation.
"""
from typing import Any, Callable, Dict, Generic, List, Optional, Tuple, Type, TypeVar

from engine.errors import UnsupportedModelError


T = TypeVar('T')


class Registry(Generic[T]):
    """Generic registry for plugin components.

    Components are registered explicitly and looked up by their ``name``.
    """

    def __init__(self, base_class: Type[T]):
        """Initialize the registry.

        Args:
            base_class: The base class that registered components must inherit from
        """
        self._items: Dict[str, Type[T]] = {}
        self._base_class = base_class

    def register(self, component_class: Type[T]) -> None:
        """Register a component class.

        Args:
            component_class: The component class to register

        Raises:
            TypeError: If the class does not derive from the base class
        """
        if not (isinstance(component_class, type) and issubclass(component_class, self._base_class)):
            raise TypeError(f"[utils/registry.py] expected a {self._base_class.__name__} subclass, got {component_class!r}")

        name_attr = getattr(component_class, 'name', None)
        if isinstance(name_attr, property):
            # name is an instance property; read it off the getter without building the model
            name = name_attr.fget(component_class.__new__(component_class))
        elif isinstance(name_attr, str):
            name = name_attr
        else:
            name = component_class.__name__

        self._items[name] = component_class

    def get_class(self, name: str) -> Type[T]:
        """Get a component class by name.

        Raises:
            UnsupportedModelError: If no component with the given name exists
        """
        try:
            return self._items[name]
        except KeyError:
            known = ", ".join(sorted(self._items))
            raise UnsupportedModelError(f"[utils/registry.py] unknown component '{name}' (known: {known})") from None

    def create(self, name: str, *args: Any, **kwargs: Any) -> T:
        """Create an instance of a component by name.

        Args:
            name: The name of the component
            *args: Positional arguments to pass to the constructor
            **kwargs: Keyword arguments to pass to the constructor

        Returns:
            An instance of the component
        """
        component_class = self.get_class(name)
        return component_class(*args, **kwargs)

    def get_available_components(self,
                                 name_formatter: Optional[Callable[[Type[T]], str]] = None) -> List[Tuple[str, str]]:
        """Get a list of available components with their names and display names.

        Args:
            name_formatter: Optional function to format the display name of each component

        Returns:
            A list of tuples (name, display_name) for each available component, sorted by name
        """
        components = []
        for name, component_class in self._items.items():
            if name_formatter:
                display_name = name_formatter(component_class)
            else:
                display_name = getattr(component_class, 'display_name', name)
            components.append((name, display_name))

        components.sort(key=lambda c: c[0])
        return components
