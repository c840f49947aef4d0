"""Service lifecycle management."""
import requests


class Service:
    """Manages service lifecycle."""

    def __init__(self, name: str):
        self.name = name
        self.state = "stopped"

    def get_service_state(self) -> str:
        """Return the current state."""
        return self.state

    def restart(self, delay: int = 0) -> None:
        self.state = "running"

    def ping(self, url: str) -> int:
        return requests.get(url).status_code
