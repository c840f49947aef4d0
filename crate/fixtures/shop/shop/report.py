"""Plain-text reports."""
import yaml

from shop import Order
from shop.inventory import Inventory
from shop.orders import OrderService
from .util import chunks, first, money


def inventory_lines(inventory: Inventory):
    lines = []
    for name in inventory.low_stock():
        lines.append("LOW " + name)
    lines.append("VALUE " + money(inventory.value()))
    return lines


def order_block(order: Order) -> str:
    rows = [line.product.label() for line in order.lines]
    rows.append("TOTAL " + money(order.total()))
    return "\n".join(rows)


def paged(service: OrderService, size: int = 10):
    pages = chunks(service.orders, size)
    return [[o.ident for o in page] for page in pages]


def first_note(service: OrderService):
    notes = [o.note for o in service.orders if o.note]
    return first(notes, "")


def dump(service: OrderService) -> str:
    data = {"orders": service.totals()}
    return yaml.safe_dump(data)


def describe_all(service: OrderService):
    out = []
    for order in service.orders:
        text = order.describe()
        if order.has_tag("rush"):
            text = text + " !"
        out.append(text)
    return out
