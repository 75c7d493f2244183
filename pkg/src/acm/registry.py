from __future__ import annotations

from typing import Callable, Generic, TypeVar

from .core import ValidationError

T = TypeVar("T")


class Registry(Generic[T]):
    """Name -> factory mapping for one kind of pluggable backend."""

    def __init__(self, kind: str):
        self.kind = kind
        self._factories: dict[str, Callable[..., T]] = {}

    def register(self, name: str, factory: Callable[..., T] | None = None):
        def _add(f):
            if name in self._factories:
                raise ValidationError(f"{self.kind} backend {name!r} already registered")
            self._factories[name] = f
            return f

        return _add(factory) if factory is not None else _add

    def create(self, name: str, **kwargs) -> T:
        try:
            factory = self._factories[name]
        except KeyError:
            raise ValidationError(
                f"unknown {self.kind} backend {name!r}; known: {sorted(self._factories)}"
            ) from None
        return factory(**kwargs)

    def __contains__(self, name: str) -> bool:
        return name in self._factories

    def names(self) -> list[str]:
        return sorted(self._factories)
