"""Shared entity base."""


class Entity:
    """Anything with an identifier."""

    def __init__(self, ident: int):
        self.ident = ident
        self.tags = []

    def describe(self) -> str:
        return "%s#%d" % (type(self).__name__, self.ident)

    def tag(self, label: str) -> None:
        if label not in self.tags:
            self.tags.append(label)

    def has_tag(self, label: str) -> bool:
        return label in self.tags


class Timestamped:
    created: float = 0.0

    def touch(self, now: float) -> float:
        self.created = now
        return now
