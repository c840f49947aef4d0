"""Domain objects."""
from typing import List, Optional

from shop.base import Entity, Timestamped


class Product(Entity):
    """A sellable item."""

    def __init__(self, ident: int, name: str, price: float):
        super().__init__(ident)
        self.name = name
        self.price = price

    def discounted(self, rate: float) -> float:
        if rate <= 0:
            return self.price
        return round(self.price * (1 - rate), 2)

    def label(self) -> str:
        return "%s (%.2f)" % (self.name, self.price)


class Customer(Entity):
    """A registered buyer."""

    def __init__(self, ident: int, email: str):
        super().__init__(ident)
        self.email = email
        self.vip = False

    def domain(self) -> str:
        return self.email.split("@")[-1]

    def promote(self) -> None:
        self.vip = True
        self.tag("vip")


class Line:
    def __init__(self, product: Product, quantity: int):
        self.product = product
        self.quantity = quantity

    def subtotal(self) -> float:
        return self.product.price * self.quantity


class Order(Entity, Timestamped):
    """A customer's basket."""

    def __init__(self, ident: int, customer: Customer):
        super().__init__(ident)
        self.customer = customer
        self.lines: List[Line] = []
        self.note: Optional[str] = None

    def add(self, product: Product, quantity: int = 1) -> Line:
        line = Line(product, quantity)
        self.lines.append(line)
        return line

    def total(self) -> float:
        amount = 0.0
        for line in self.lines:
            amount += line.subtotal()
        return amount

    def is_empty(self) -> bool:
        return len(self.lines) == 0

    def products(self) -> List[Product]:
        return [line.product for line in self.lines]
