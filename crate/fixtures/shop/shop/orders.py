"""Order workflow."""
import logging

import requests

from shop.inventory import Inventory
from shop.models import Customer, Order, Product
from shop.pricing import order_total, quote
from shop.util import slugify

log = logging.getLogger(__name__)


class OrderError(Exception):
    pass


class OrderService:
    """Creates and fulfils orders."""

    def __init__(self, inventory: Inventory, endpoint: str):
        self.inventory = inventory
        self.endpoint = endpoint
        self.orders = []
        self.next_id = 1

    def open(self, customer: Customer) -> Order:
        order = Order(self.next_id, customer)
        self.next_id += 1
        self.orders.append(order)
        return order

    def add_item(self, order: Order, product: Product, quantity: int) -> int:
        taken = self.inventory.take(product, quantity)
        if taken == 0:
            raise OrderError("out of stock: %s" % product.name)
        order.add(product, taken)
        return taken

    def cancel(self, order: Order) -> None:
        for line in order.lines:
            self.inventory.restock(line.product, line.quantity)
        self.orders.remove(order)

    def summary(self, order: Order) -> str:
        header = "order %d for %s" % (order.ident, order.customer.email)
        return header + ": " + quote(order)

    def submit(self, order: Order) -> int:
        payload = {"id": order.ident, "total": order_total(order)}
        response = requests.post(self.endpoint, json=payload)
        log.info("submitted %s", order.describe())
        return response.status_code

    def reference(self, order: Order) -> str:
        return slugify(order.customer.domain()) + "-" + str(order.ident)

    def find(self, ident: int):
        for order in self.orders:
            if order.ident == ident:
                return order
        return None

    def totals(self):
        return {order.ident: order_total(order) for order in self.orders}


def busiest(service: OrderService):
    counts = {}
    for order in service.orders:
        email = order.customer.email
        counts[email] = counts.get(email, 0) + 1
    if not counts:
        return None
    return max(counts, key=counts.get)
