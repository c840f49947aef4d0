"""Entry points for the service tool."""
from app.service import Service


def log_state(svc: Service):
    return svc.get_service_state()


def bounce(svc: Service, delay: int):
    svc.restart(delay)
    return svc.get_service_state()
